#include "tajima/demographic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace tajima {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

auto GridField::cell_of(double t) const -> int {
  auto it = std::upper_bound(boundaries.begin(), boundaries.end(), t);
  int c = static_cast<int>(it - boundaries.begin()) - 1;
  return std::clamp(c, 0, cells() - 1);
}

void GridField::validate() const {
  if (theta.empty() || boundaries.size() != theta.size() + 1)
    throw std::invalid_argument("grid: need B >= 1 cells and B + 1 boundaries");
  if (boundaries[0] != 0.0) throw std::invalid_argument("grid: first boundary must be 0");
  for (size_t b = 1; b < boundaries.size(); ++b)
    if (!(boundaries[b] > boundaries[b - 1]))
      throw std::invalid_argument("grid: boundaries must be strictly increasing");
  for (double v : theta)
    if (!std::isfinite(v)) throw std::invalid_argument("grid: non-finite log N_e");
}

auto GridField::regular(double horizon, int cells, double log_ne) -> GridField {
  GridField f;
  f.boundaries.resize(cells + 1);
  for (int b = 0; b <= cells; ++b) f.boundaries[b] = horizon * b / cells;
  f.theta.assign(cells, log_ne);
  return f;
}

Trajectory::Trajectory(const GridField& field) : name_("grid") {
  field.validate();
  const int B = field.cells();
  for (int b = 0; b < B; ++b) {
    double end = b + 1 < B ? field.boundaries[b + 1] : kInf;
    pieces_.push_back({field.boundaries[b], end, field.theta[b], 0.0});
  }
}

auto Trajectory::constant(double ne) -> Trajectory {
  if (!(ne > 0)) throw std::invalid_argument("constant trajectory needs N_e > 0");
  Trajectory t;
  t.pieces_.push_back({0.0, kInf, std::log(ne), 0.0});
  t.name_ = "constant";
  return t;
}

auto Trajectory::scenario(const std::string& name) -> Trajectory {
  Trajectory t;
  t.name_ = name;
  if (name == "bottleneck") {
    t.pieces_ = {{0.0, 0.1, std::log(3.0), 0.0},
                 {0.1, 0.3, std::log(0.1), 0.0},
                 {0.3, kInf, std::log(2.0), 0.0}};
  } else if (name == "drop") {
    t.pieces_ = {{0.0, 0.5, std::log(0.5), 0.0}, {0.5, kInf, std::log(2.0), 0.0}};
  } else if (name == "exp") {
    t.pieces_ = {{0.0, 0.1, std::log(10.0), 0.0},
                 {0.1, 0.25, std::log(10.0) + 2.0, -20.0},
                 {0.25, kInf, std::log(0.5), 0.0}};
  } else {
    throw std::invalid_argument("unknown scenario: " + name);
  }
  return t;
}

auto scenario_names() -> std::vector<std::string> { return {"bottleneck", "drop", "exp"}; }

auto Trajectory::piece_index(double t) const -> int {
  int lo = 0;
  int hi = static_cast<int>(pieces_.size()) - 1;
  while (lo < hi) {
    int mid = (lo + hi + 1) / 2;
    if (pieces_[mid].start <= t)
      lo = mid;
    else
      hi = mid - 1;
  }
  return lo;
}

auto Trajectory::log_evaluate(double t) const -> double {
  if (t < 0) throw std::domain_error("trajectory evaluated at negative time");
  const auto& p = pieces_[piece_index(t)];
  return p.log_a + p.rate * t;
}

auto Trajectory::evaluate(double t) const -> double { return std::exp(log_evaluate(t)); }

namespace {

// Integral of exp(-(la + r t)) over [u, v].
auto piece_integral(const TrajectoryPiece& p, double u, double v) -> double {
  if (v <= u) return 0.0;
  if (p.rate == 0.0) return (v - u) * std::exp(-p.log_a);
  double d = v - u;
  return std::exp(-p.log_a - p.rate * u) * (-std::expm1(-p.rate * d)) / p.rate;
}

}  // namespace

auto Trajectory::inverse_integral(double a, double b) const -> double {
  if (a < 0) throw std::domain_error("inverse_integral: negative time");
  if (a > b) throw std::domain_error("inverse_integral: a > b");
  if (a == b) return 0.0;
  double total = 0.0;
  for (int i = piece_index(a); i < static_cast<int>(pieces_.size()); ++i) {
    const auto& p = pieces_[i];
    if (p.start >= b) break;
    total += piece_integral(p, std::max(a, p.start), std::min(b, p.end));
  }
  return total;
}

auto Trajectory::solve_inverse_integral(double a, double target) const -> double {
  if (target <= 0) return a;
  double remaining = target;
  for (int i = piece_index(a); i < static_cast<int>(pieces_.size()); ++i) {
    const auto& p = pieces_[i];
    double u = std::max(a, p.start);
    double seg = piece_integral(p, u, p.end);
    if (remaining <= seg || !std::isfinite(p.end)) {
      if (p.rate == 0.0) return u + remaining * std::exp(p.log_a);
      double arg = remaining * p.rate * std::exp(p.log_a + p.rate * u);
      if (arg >= 1.0) return kInf;
      return u - std::log1p(-arg) / p.rate;
    }
    remaining -= seg;
  }
  return kInf;
}

auto grid_to_csv(const GridField& f) -> std::string {
  std::ostringstream os;
  os << "cell_start,cell_end,log_ne\n";
  char buf[128];
  for (int b = 0; b < f.cells(); ++b) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", f.boundaries[b], f.boundaries[b + 1],
                  f.theta[b]);
    os << buf;
  }
  return os.str();
}

auto grid_from_csv(const std::string& text) -> GridField {
  std::istringstream is(text);
  std::string line;
  GridField f;
  bool header = true;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (header) {
      header = false;
      if (line.rfind("cell_start", 0) == 0) continue;
    }
    double a = 0;
    double b = 0;
    double v = 0;
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf", &a, &b, &v) != 3)
      throw std::invalid_argument("grid csv: malformed row: " + line);
    if (f.boundaries.empty()) f.boundaries.push_back(a);
    if (a != f.boundaries.back()) throw std::invalid_argument("grid csv: cells not contiguous");
    f.boundaries.push_back(b);
    f.theta.push_back(v);
  }
  f.validate();
  return f;
}

}  // namespace tajima
