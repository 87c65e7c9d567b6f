#include "tajima/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include "tajima/io.hpp"

namespace tajima {

auto evaluation_grid(double t2, int k) -> std::vector<double> {
  if (k < 2) throw std::invalid_argument("evaluation grid needs at least two points");
  std::vector<double> v(k);
  for (int i = 0; i < k; ++i) v[i] = 0.6 * t2 * i / (k - 1);
  return v;
}

auto accuracy_metrics(const TrajectorySummary& s, const std::vector<double>& truth) -> Accuracy {
  const size_t k = s.time.size();
  if (truth.size() != k || s.median.size() != k || s.q025.size() != k || s.q975.size() != k)
    throw std::invalid_argument("summary and truth must share the grid");
  if (k == 0) throw std::invalid_argument("empty grid");
  Accuracy a;
  int covered = 0;
  for (size_t i = 0; i < k; ++i) {
    a.sre += std::abs(s.median[i] - truth[i]) / truth[i];
    a.mrw += std::abs(s.q975[i] - s.q025[i]) / truth[i];
    covered += s.q025[i] <= truth[i] && truth[i] <= s.q975[i];
  }
  a.mrw /= static_cast<double>(k);
  a.env = 100.0 * covered / static_cast<double>(k);
  return a;
}

auto accuracy_metrics(const TrajectorySummary& s, const Trajectory& truth) -> Accuracy {
  std::vector<double> tv;
  for (double t : s.time) tv.push_back(truth.evaluate(t));
  return accuracy_metrics(s, tv);
}

auto ess(const std::vector<double>& x) -> EssResult {
  const int n = static_cast<int>(x.size());
  if (n < 10) throw std::invalid_argument("ess needs at least 10 values");
  EssResult r;
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= n;
  // Autocovariance via zero-padded FFT.
  int len = 1;
  while (len < 2 * n) len <<= 1;
  std::vector<double> buf(len, 0.0);
  for (int i = 0; i < n; ++i) buf[i] = x[i] - mean;
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> spec;
  fft.fwd(spec, buf);
  for (auto& c : spec) c = std::complex<double>(std::norm(c), 0.0);
  std::vector<double> acov;
  fft.inv(acov, spec);
  const double c0 = acov[0] / n;
  if (!(c0 > 1e-300 * (1.0 + mean * mean))) {
    r.ess = n;
    r.constant = true;
    return r;
  }
  auto rho = [&](int lag) { return acov[lag] / n / c0; };
  // Pair sums Gamma_k = rho(2k) + rho(2k+1), truncated at the first
  // non-positive value and made monotone.
  double sum = 0.0;
  double prev = std::numeric_limits<double>::infinity();
  for (int k = 0; 2 * k + 1 < n; ++k) {
    double gk = rho(2 * k) + rho(2 * k + 1);
    if (gk <= 0.0) break;
    gk = std::min(gk, prev);
    prev = gk;
    sum += gk;
  }
  double tau = -1.0 + 2.0 * sum;
  double e = n / tau;
  if (!(tau > 0.0) || e > n) {
    r.clipped = true;
    e = n;
  }
  r.ess = e;
  return r;
}

auto ks_two_sample(std::vector<double> x, std::vector<double> y, double nx, double ny) -> KsResult {
  if (x.empty() || y.empty()) throw std::invalid_argument("ks test needs two nonempty samples");
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  KsResult r;
  size_t i = 0, j = 0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] <= v) ++i;
    while (j < y.size() && y[j] <= v) ++j;
    r.d = std::max(r.d, std::abs(static_cast<double>(i) / x.size() - static_cast<double>(j) / y.size()));
  }
  if (nx <= 0.0) nx = static_cast<double>(x.size());
  if (ny <= 0.0) ny = static_cast<double>(y.size());
  const double en = std::sqrt(nx * ny / (nx + ny));
  const double lam = (en + 0.12 + 0.11 / en) * r.d;
  if (lam < 1e-3) {
    r.p = 1.0;
    return r;
  }
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lam * lam);
    sum += (k % 2 ? 1.0 : -1.0) * term;
    if (term < 1e-16) break;
  }
  r.p = std::clamp(2.0 * sum, 0.0, 1.0);
  return r;
}

auto summary_to_csv(const TrajectorySummary& s) -> std::string {
  std::ostringstream os;
  os << "time,median,q025,q975\n";
  for (size_t i = 0; i < s.time.size(); ++i)
    os << format_double(s.time[i]) << ',' << format_double(s.median[i]) << ','
       << format_double(s.q025[i]) << ',' << format_double(s.q975[i]) << '\n';
  return os.str();
}

auto summary_from_csv(const std::string& text) -> TrajectorySummary {
  auto rows = parse_csv(text);
  TrajectorySummary s;
  for (size_t r = 0; r < rows.size(); ++r) {
    if (r == 0 && rows[r][0] == "time") continue;
    if (rows[r].size() != 4) throw std::invalid_argument("summary CSV needs 4 columns");
    s.time.push_back(std::stod(rows[r][0]));
    s.median.push_back(std::stod(rows[r][1]));
    s.q025.push_back(std::stod(rows[r][2]));
    s.q975.push_back(std::stod(rows[r][3]));
  }
  return s;
}

}  // namespace tajima
