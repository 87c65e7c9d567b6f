#pragma once

#include <string>
#include <vector>

#include "tajima/counting.hpp"
#include "tajima/demographic.hpp"
#include "tajima/genealogy.hpp"
#include "tajima/ism_data.hpp"
#include "tajima/random.hpp"

namespace tajima {

struct SimulatedDataset {
  RankedGenealogy g;
  std::vector<int> mutation_nodes;  // genealogy node below each mutated branch, one per site
  IncidenceMatrix y1;
  FrequencyMatrix y2;
  std::vector<int> leaf_haplotype;  // genealogy leaf -> row of y1
  int M = 0;
  double tree_length = 0.0;
};

// M mutations placed independently, branch chosen proportionally to its length.
auto place_mutations(const RankedGenealogy& g, int M, Rng& rng) -> std::vector<int>;
auto dataset_from_mutations(const RankedGenealogy& g, std::vector<int> mutation_nodes)
    -> SimulatedDataset;
// g from the coalescent prior, M ~ Poisson(mu * tree length).
auto simulate_dataset(const SamplingSchedule& sched, const Trajectory& traj, double mu, Rng& rng)
    -> SimulatedDataset;

// Phylogeny of a simulated dataset and, for every genealogy leaf, its leaf node
// in the effective phylogeny.
auto phylogeny_with_labels(const SimulatedDataset& d) -> std::pair<PerfectPhylogeny, std::vector<int>>;

// Dataset identity up to site order (labeled) or also haplotype order (unlabeled).
auto unlabeled_key(const RankedGenealogy& g, const std::vector<int>& mutation_nodes) -> std::string;
auto labeled_key(const RankedGenealogy& g, const std::vector<int>& mutation_nodes) -> std::string;

struct OracleEntry {
  std::string key;
  long count = 0;
  double frequency = 0.0;
  double likelihood = 0.0;  // P(dataset | g, M)
  double ratio = 0.0;       // likelihood / frequency
};

struct OracleReport {
  Resolution resolution = Resolution::Tajima;
  long draws = 0;
  long distinct = 0;
  long excluded = 0;
  double mean_ratio = 0.0;
  double var_ratio = 0.0;
  double retained_mass = 0.0;  // likelihood mass of retained datasets
  std::vector<OracleEntry> retained;
};

// Draws datasets with exactly M mutations on g and compares empirical
// frequencies with normalized likelihoods; datasets seen fewer than floor
// times are excluded.
auto frequency_oracle(const RankedGenealogy& g, int M, long draws, Resolution res, long floor,
                      Rng& rng) -> OracleReport;

auto log_poisson(int k, double lambda) -> double;

// Sampling schedules of the small validation scenarios supp-a, supp-b, supp-c.
auto validation_preset(const std::string& name) -> SamplingSchedule;

struct ValidationSummary {
  std::string preset;
  Resolution resolution = Resolution::Tajima;
  long draws = 0;
  long floor = 0;
  double mean_ratio = 0.0;     // average over runs of the per-run mean ratio
  double mean_variance = 0.0;  // average over runs of the per-run ratio variance
  double excluded_fraction = 0.0;
  std::vector<int> mutation_counts;  // M of each run
  std::vector<OracleReport> runs;
};

// One oracle run per (M, replicate), each on its own genealogy drawn under
// constant N_e = 1.
auto validate_likelihood(const std::string& preset, Resolution res, long draws, int replicates,
                         const std::vector<int>& mutation_counts, long floor, std::uint64_t seed)
    -> ValidationSummary;

}  // namespace tajima
