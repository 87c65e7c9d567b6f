#include <doctest.h>

#include <set>

#include "oracles.hpp"
#include "tajima/allocation.hpp"
#include "tajima/coalescent_prior.hpp"
#include "tajima/simulator.hpp"

using namespace tajima;

namespace {

auto as_set(const AllocationMatrix& a) -> std::set<std::vector<int>> {
  return {a.rows.begin(), a.rows.end()};
}

}  // namespace

TEST_CASE("allocations of the two-group example") {
  auto d = oracle::fig4_data();
  auto t = build_perfect_phylogeny(d.y1, d.y2, d.sched);
  auto a = enumerate_allocations(t, oracle::fig6_g());
  // Nodes: 0 root, 1 c clade, 2 a leaf, 3/4 c-only copies, 5 b leaf.
  std::set<std::vector<int>> expect{{2, 5, 1, 5, 0, 1, 0, 0, 0}, {5, 2, 5, 1, 1, 0, 0, 0, 0}};
  CHECK(as_set(a) == expect);
  auto b = enumerate_allocations(t, oracle::fig6_gprime());
  CHECK(as_set(b) == std::set<std::vector<int>>{{2, 5, 1, 5, 0, 1, 0, 0, 0}});
  CHECK(allocation_to_csv(b).find("V2,V5,V1,V5,V0,V1,V0,V0,V0") != std::string::npos);
}

TEST_CASE("incompatible topology has no allocation") {
  auto d = oracle::intro_data();
  auto t = build_perfect_phylogeny(d.y1, d.y2, d.sched);
  using E = CoalescentEvent;
  // Balanced tree with three cherries: the mutant pair must form one of them.
  RankedGenealogy g(d.sched, {0.1, 0.2, 0.3, 0.4, 0.5},
                    {E::same(0), E::same(0), E::same(0), E::vintages(1, 2), E::vintages(3, 4)});
  CHECK(enumerate_allocations(t, g).size() > 0);
  RankedGenealogy cat = oracle::intro_g1({0.1, 0.2, 0.3, 0.4, 0.5});
  CHECK(enumerate_allocations(t, cat).size() > 0);
  IncidenceMatrix y;
  y.rows = {{1, 0}, {0, 1}, {0, 0}};
  FrequencyMatrix f{{{2}, {2}, {2}}};
  auto t2 = build_perfect_phylogeny(y, f, d.sched);
  CHECK(enumerate_allocations(t2, cat).empty());
}

TEST_CASE("allocations agree with exhaustive search") {
  Rng rng(17);
  std::vector<SamplingSchedule> scheds{SamplingSchedule::isochronous(6),
                                       {{0.0, 0.2}, {4, 3}},
                                       {{0.0, 0.1, 0.3}, {3, 2, 2}}};
  int nonempty = 0;
  for (const auto& s : scheds) {
    for (int rep = 0; rep < 40; ++rep) {
      auto sim = simulate_dataset(s, Trajectory::constant(1.0), 3.0, rng);
      auto t = build_perfect_phylogeny(sim.y1, sim.y2, s);
      auto eff = t.effective();
      // The generating genealogy and a fresh draw on the same times.
      for (const auto& g : {sim.g, RankedGenealogy(s, sim.g.times(), sample_topology(s, sim.g.times(), rng))}) {
        auto a = as_set(enumerate_allocations(t, g));
        CHECK(a == oracle::brute_force_allocations(eff, g));
        nonempty += !a.empty();
      }
    }
  }
  CHECK(nonempty > 120);
}

TEST_CASE("allocation cap") {
  auto d = oracle::fig4_data();
  auto t2 = build_perfect_phylogeny(d.y1, d.y2, d.sched);
  CHECK(enumerate_allocations(t2, oracle::fig6_g(), 100).size() == 2);
  CHECK_THROWS_AS(enumerate_allocations(t2, oracle::fig6_g(), 1), AllocationCapExceeded);
}

TEST_CASE("singleton edge partition") {
  auto d = oracle::fig4_data();
  auto t = build_perfect_phylogeny(d.y1, d.y2, d.sched).effective();
  auto p0 = singleton_edge_partition(t, 0);
  REQUIRE(p0.size() == 2);
  // Root: ancestral copies (0 mutations) at both groups and the e leaf at s2.
  CHECK(p0[0] == std::map<int, int>{{0, 1}});
  CHECK(p0[1] == std::map<int, int>{{0, 1}, {1, 1}});
  auto p1 = singleton_edge_partition(t, 1);
  CHECK(p1[0] == std::map<int, int>{{0, 1}});
  CHECK(p1[1] == std::map<int, int>{{0, 1}});
}
