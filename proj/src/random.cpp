#include "tajima/random.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace tajima {

namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178;

auto log_upper_tail(double a) -> double {
  if (a < 30.0) return std::log(0.5 * std::erfc(a / std::sqrt(2.0)));
  double a2 = a * a;
  return -0.5 * a2 - std::log(a) - kLogSqrt2Pi + std::log1p(-1.0 / a2 + 3.0 / (a2 * a2));
}

}  // namespace

auto truncated_normal(Rng& rng, double mean, double sd, double lo) -> double {
  if (!(sd > 0.0) || !std::isfinite(sd) || !std::isfinite(mean))
    throw std::invalid_argument("truncated normal needs a finite mean and positive sd");
  const double a = (lo - mean) / sd;
  if (a < 0.3) {
    std::normal_distribution<double> nd(0.0, 1.0);
    for (;;) {
      double z = nd(rng);
      if (z >= a) return mean + sd * z;
    }
  }
  // Exponential proposal with optimal rate.
  const double lambda = 0.5 * (a + std::sqrt(a * a + 4.0));
  for (;;) {
    double z = a - std::log(uniform01(rng)) / lambda;
    double rho = std::exp(-0.5 * (z - lambda) * (z - lambda));
    if (uniform01(rng) <= rho) return mean + sd * z;
  }
}

auto truncated_normal_logpdf(double x, double mean, double sd, double lo) -> double {
  if (x < lo) return -std::numeric_limits<double>::infinity();
  const double z = (x - mean) / sd;
  return -0.5 * z * z - kLogSqrt2Pi - std::log(sd) - log_upper_tail((lo - mean) / sd);
}

}  // namespace tajima
