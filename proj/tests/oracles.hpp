#pragma once

#include <functional>
#include <set>
#include <string>
#include <vector>

#include "tajima/genealogy.hpp"
#include "tajima/ism_data.hpp"

namespace tajima::oracle {

struct Dataset {
  IncidenceMatrix y1;
  FrequencyMatrix y2;
  SamplingSchedule sched;
};

// Six isochronous samples: one carries two private mutations, a pair shares one.
auto intro_data() -> Dataset;
// n = (7,3): the dataset whose constraint vector is (0,5).
auto fig4_data() -> Dataset;
// The n = (7,3) genealogy with two events before s2, and its variant with
// events 3 and 6 exchanging offspring.
auto fig6_g() -> RankedGenealogy;
auto fig6_gprime() -> RankedGenealogy;

// Caterpillar with one cherry, and the two-cherry shape, on six isochronous leaves.
auto intro_g1(const std::vector<double>& times) -> RankedGenealogy;
auto intro_g2(const std::vector<double>& times) -> RankedGenealogy;

// Every unlabeled ranked topology valid for the given times.
auto enumerate_tajima(const SamplingSchedule& sched, const std::vector<double>& times)
    -> std::vector<std::vector<CoalescentEvent>>;

struct LabeledTopology {
  std::vector<CoalescentEvent> events;
  std::vector<int> leaf_sample;  // genealogy leaf -> sample (samples ordered by group)
  double log_prior = 0.0;        // uniform-pair jump chain
};
// Every labeled ranked topology valid for the given times.
auto enumerate_kingman(const SamplingSchedule& sched, const std::vector<double>& times)
    -> std::vector<LabeledTopology>;

// Phylogeny leaf (of the effective tree) of each sample, samples ordered by group.
auto sample_leaves(const PerfectPhylogeny& eff) -> std::vector<int>;

// Allocation rows by exhaustive search over assignments of genealogy leaves to
// phylogeny leaves (t must be effective).
auto brute_force_allocations(const PerfectPhylogeny& t, const RankedGenealogy& g)
    -> std::set<std::vector<int>>;

auto canonical_phylogeny(const PerfectPhylogeny& t) -> std::string;

// Probability that M mutations placed uniformly on g give data with the
// phylogeny of target (unlabeled), by enumeration of all placements.
auto exact_unlabeled_prob(const RankedGenealogy& g, const PerfectPhylogeny& target, int M) -> double;
// Same for labeled data given as the multiset of mutated leaf sets.
auto exact_labeled_prob(const RankedGenealogy& g, std::vector<std::uint64_t> masks, int M) -> double;

auto simpson(const std::function<double(double)>& f, double a, double b, int n = 2000) -> double;

}  // namespace tajima::oracle
