#pragma once

#include <string>
#include <vector>

namespace tajima {

// Piecewise-constant log N_e on cells [x_b, x_{b+1}); the last cell extends to infinity.
struct GridField {
  std::vector<double> boundaries;  // x_0 = 0 < x_1 < ... < x_B
  std::vector<double> theta;       // size B

  auto cells() const -> int { return static_cast<int>(theta.size()); }
  auto cell_of(double t) const -> int;
  void validate() const;
  static auto regular(double horizon, int cells, double log_ne = 0.0) -> GridField;
};

// N_e(t) = exp(log_a + rate * t) on [start, end). Constant pieces have rate 0.
struct TrajectoryPiece {
  double start;
  double end;
  double log_a;
  double rate;
};

class Trajectory {
 public:
  Trajectory() = default;
  explicit Trajectory(const GridField& field);
  static auto constant(double ne) -> Trajectory;
  static auto scenario(const std::string& name) -> Trajectory;

  auto evaluate(double t) const -> double;
  auto log_evaluate(double t) const -> double;
  // Integral of 1/N_e over [a, b].
  auto inverse_integral(double a, double b) const -> double;
  // Smallest u >= a with inverse_integral(a, u) = target.
  auto solve_inverse_integral(double a, double target) const -> double;

  auto name() const -> const std::string& { return name_; }
  auto pieces() const -> const std::vector<TrajectoryPiece>& { return pieces_; }

 private:
  auto piece_index(double t) const -> int;
  std::vector<TrajectoryPiece> pieces_;
  std::string name_;
};

auto scenario_names() -> std::vector<std::string>;

auto grid_to_csv(const GridField& f) -> std::string;
auto grid_from_csv(const std::string& text) -> GridField;

}  // namespace tajima
