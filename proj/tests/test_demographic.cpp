#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "tajima/demographic.hpp"

using namespace tajima;

TEST_CASE("scenario trajectories") {
  auto drop = Trajectory::scenario("drop");
  CHECK(drop.evaluate(0.2) == doctest::Approx(0.5));
  CHECK(drop.evaluate(0.7) == doctest::Approx(2.0));
  auto bottle = Trajectory::scenario("bottleneck");
  CHECK(bottle.evaluate(0.05) == doctest::Approx(3.0));
  CHECK(bottle.evaluate(0.2) == doctest::Approx(0.1));
  CHECK(bottle.evaluate(1.0) == doctest::Approx(2.0));
  auto ex = Trajectory::scenario("exp");
  CHECK(ex.evaluate(0.05) == doctest::Approx(10.0));
  CHECK(ex.evaluate(0.1) == doctest::Approx(10.0));
  CHECK(ex.evaluate(0.2) == doctest::Approx(10.0 * std::exp(-2.0)));
  CHECK(ex.evaluate(0.5) == doctest::Approx(0.5));
  CHECK_THROWS_AS(Trajectory::scenario("nope"), std::invalid_argument);
  CHECK_THROWS(drop.evaluate(-1.0));
}

TEST_CASE("inverse integral matches quadrature and inverts") {
  for (const auto& name : scenario_names()) {
    auto tr = Trajectory::scenario(name);
    for (auto [a, b] : {std::pair{0.0, 0.05}, {0.02, 0.31}, {0.15, 0.9}, {0.0, 2.0}}) {
      // Integrate piecewise to keep the quadrature exact at breakpoints.
      double q = 0.0;
      std::vector<double> cuts{a};
      for (const auto& p : tr.pieces())
        if (p.start > a && p.start < b) cuts.push_back(p.start);
      cuts.push_back(b);
      for (size_t k = 0; k + 1 < cuts.size(); ++k)
        q += oracle::simpson([&](double t) { return 1.0 / tr.evaluate(std::min(t, cuts[k + 1] - 1e-13)); },
                             cuts[k], cuts[k + 1]);
      CHECK(tr.inverse_integral(a, b) == doctest::Approx(q).epsilon(1e-9));
      const double u = tr.solve_inverse_integral(a, tr.inverse_integral(a, b));
      CHECK(u == doctest::Approx(b).epsilon(1e-10));
    }
  }
  auto c = Trajectory::constant(2.0);
  CHECK(c.inverse_integral(1.0, 3.0) == doctest::Approx(1.0));
  CHECK(c.solve_inverse_integral(1.0, 0.0) == 1.0);
}

TEST_CASE("grid field cells and trajectory") {
  auto f = GridField::regular(1.0, 4, 0.0);
  f.theta = {0.0, 1.0, 2.0, 3.0};
  CHECK(f.cell_of(0.0) == 0);
  CHECK(f.cell_of(0.25) == 1);
  CHECK(f.cell_of(0.99) == 3);
  CHECK(f.cell_of(5.0) == 3);
  Trajectory tr(f);
  CHECK(tr.log_evaluate(0.3) == doctest::Approx(1.0));
  CHECK(tr.log_evaluate(7.0) == doctest::Approx(3.0));
  CHECK(tr.inverse_integral(0.0, 0.5) == doctest::Approx(0.25 + 0.25 * std::exp(-1.0)));
}

TEST_CASE("grid CSV round trip and validation") {
  auto f = GridField::regular(1.3, 5, 0.0);
  f.theta = {0.1, -0.2, 0.3, 1.0 / 3.0, 2.0};
  auto g = grid_from_csv(grid_to_csv(f));
  CHECK(g.boundaries == f.boundaries);
  CHECK(g.theta == f.theta);
  GridField bad{{0.0, 1.0, 0.5}, {0.0, 0.0}};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  CHECK_THROWS_AS(grid_from_csv("cell_start,cell_end,log_ne\n0,1,0\n2,3,0\n"), std::invalid_argument);
}
