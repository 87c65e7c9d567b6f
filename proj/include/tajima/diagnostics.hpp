#pragma once

#include <string>
#include <vector>

#include "tajima/demographic.hpp"

namespace tajima {

// Pointwise posterior summary of N_e on a time grid.
struct TrajectorySummary {
  std::vector<double> time;
  std::vector<double> median;
  std::vector<double> q025;
  std::vector<double> q975;
};

struct Accuracy {
  double sre = 0.0;
  double mrw = 0.0;
  double env = 0.0;  // percent of grid points covered
};

// Regular grid of k points from 0 to 0.6 * t2.
auto evaluation_grid(double t2, int k = 100) -> std::vector<double>;
auto accuracy_metrics(const TrajectorySummary& s, const std::vector<double>& truth) -> Accuracy;
auto accuracy_metrics(const TrajectorySummary& s, const Trajectory& truth) -> Accuracy;

struct EssResult {
  double ess = 0.0;
  bool constant = false;  // series has zero variance; ess reported as its length
  bool clipped = false;   // raw estimate exceeded the length and was clipped
};

// Geyer initial monotone sequence estimator.
auto ess(const std::vector<double>& x) -> EssResult;

struct KsResult {
  double d = 0.0;
  double p = 1.0;
};

// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value. Sample sizes
// may be overridden (e.g. by effective sizes for autocorrelated series).
auto ks_two_sample(std::vector<double> x, std::vector<double> y, double nx = 0.0, double ny = 0.0)
    -> KsResult;

auto summary_to_csv(const TrajectorySummary& s) -> std::string;
auto summary_from_csv(const std::string& text) -> TrajectorySummary;

}  // namespace tajima
