#include <doctest.h>

#include "oracles.hpp"
#include "tajima/coalescent_prior.hpp"
#include "tajima/genealogy.hpp"

using namespace tajima;
using E = CoalescentEvent;

TEST_CASE("jump chain of the (7,3) genealogy ends with one vintage") {
  auto g = oracle::fig6_g();
  auto jc = jump_chain(g);
  REQUIRE(!jc.empty());
  const auto& last = jc.back().state;
  CHECK(last.a == std::vector<int>{0, 0});
  CHECK(last.b == std::vector<int>{9});
  // The second sampling time appears as its own step between events 2 and 3.
  int sampling_steps = 0;
  for (const auto& st : jc)
    if (st.time == 0.3) ++sampling_steps;
  CHECK(sampling_steps == 1);
  CHECK(jc.front().state.a == std::vector<int>{7, 0});
}

TEST_CASE("interval decomposition splits the interval containing s2") {
  auto g = oracle::fig6_g();
  auto iv = interval_decomposition(g);
  int found = 0;
  for (const auto& x : iv)
    if (x.k == 8) {
      ++found;
      if (x.i == 0) {
        CHECK(x.start == doctest::Approx(0.3));
        CHECK(x.end == doctest::Approx(0.4));
        CHECK(x.lineages == 8);
      } else {
        CHECK(x.i == 1);
        CHECK(x.start == doctest::Approx(0.2));
        CHECK(x.end == doctest::Approx(0.3));
        CHECK(x.lineages == 5);
      }
    }
  CHECK(found == 2);
  double total = 0.0;
  for (const auto& x : iv) total += x.lineages * (x.end - x.start);
  CHECK(total == doctest::Approx(g.tree_length()).epsilon(1e-12));
}

TEST_CASE("vintage and leaf bookkeeping") {
  auto g = oracle::fig6_g();
  CHECK(g.n() == 10);
  CHECK(g.num_nodes() == 19);
  CHECK(g.leaf_count(9) == 10);
  CHECK(g.group_counts(9) == std::vector<int>{7, 3});
  CHECK(g.leaf_count(3) == 3);
  CHECK(g.group_counts(5) == std::vector<int>{3, 1});
  CHECK(g.is_parent_of(3, 1));
  CHECK(!g.is_parent_of(3, 2));
  CHECK(g.subtree_vintages(6) == std::vector<int>{1, 3, 6});
  CHECK(cherry_count(g) == 2);
  CHECK(same_group_cherry_count(g) == 2);
  for (int l = 0; l < g.n(); ++l) CHECK(g.node_time(l) == g.schedule().s[g.leaf_group(l)]);
  auto st = subtree_stats(g, 1);
  CHECK(st.leaf_count == 2);
  CHECK(st.subtending_length == doctest::Approx(0.4 - 0.1));
  CHECK(st.subtree_length == doctest::Approx(0.3 + 0.1 + 0.1));
}

TEST_CASE("invalid genealogies report the offending rank") {
  SamplingSchedule s{{0.0, 0.3}, {2, 2}};
  // A group-1 singleton used before it is sampled.
  std::vector<E> ev{E::cross(0, 1), E::single_vintage(1, 1), E::same(0)};
  CHECK(first_invalid_rank(s, {0.1, 0.4, 0.5}, ev) == 1);
  try {
    RankedGenealogy g(s, {0.1, 0.4, 0.5}, ev);
    FAIL("expected InvalidGenealogy");
  } catch (const InvalidGenealogy& e) {
    CHECK(e.rank() == 1);
  }
  CHECK(first_invalid_rank(s, {0.1, 0.4, 0.5}, {E::same(0), E::same(1), E::vintages(1, 2)}) == 0);
  CHECK(first_invalid_rank(s, {0.1, 0.05, 0.5}, {E::same(0), E::same(1), E::vintages(1, 2)}) == 2);
  // Ties count as sampling first.
  CHECK(first_invalid_rank(s, {0.3, 0.4, 0.5}, {E::cross(0, 1), E::cross(0, 1), E::vintages(1, 2)}) == 0);
}

TEST_CASE("events before sampling") {
  SamplingSchedule s{{0.0, 0.3, 0.6}, {3, 2, 2}};
  auto c = events_before_sampling(s, {0.1, 0.2, 0.3, 0.5, 0.7, 0.9});
  CHECK(c == std::vector<int>{0, 2, 4});
}

TEST_CASE("JSON round trip") {
  auto g = oracle::fig6_g();
  auto j = to_json(g);
  auto h = genealogy_from_json(j);
  CHECK(h.events() == g.events());
  CHECK(h.times() == g.times());
  CHECK(h.schedule().n == g.schedule().n);
  CHECK(h.topology_key() == g.topology_key());
  auto s2 = schedule_from_json(to_json(g.schedule()));
  CHECK(s2.s == g.schedule().s);
}

TEST_CASE("simulated genealogies are valid") {
  SamplingSchedule s{{0.0, 0.3}, {7, 3}};
  Rng rng(11);
  auto traj = Trajectory::constant(1.0);
  for (int k = 0; k < 2000; ++k) {
    auto g = sample_genealogy(s, traj, rng);
    CHECK_EQ(first_invalid_rank(s, g.times(), g.events()), 0);
  }
}
