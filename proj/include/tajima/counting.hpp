#pragma once

#include <vector>

#include "tajima/genealogy.hpp"
#include "tajima/ism_data.hpp"
#include "tajima/random.hpp"

namespace tajima {

enum class Resolution { Tajima, Kingman };

auto resolution_name(Resolution r) -> const char*;
auto parse_resolution(const std::string& s) -> Resolution;

// Lineage content: copies taken from each leaf of the effective phylogeny,
// indexed by leaf position in preorder.
using Content = std::vector<int>;

// Clade bookkeeping for merging lineages under the ISM.
class CompatModel {
 public:
  explicit CompatModel(const PerfectPhylogeny& t);

  static constexpr int kInvalid = -1;
  static constexpr int kDone = -2;

  auto tree() const -> const PerfectPhylogeny& { return t_; }
  auto num_leaves() const -> int { return static_cast<int>(leaf_nodes_.size()); }
  auto leaf_node(int idx) const -> int { return leaf_nodes_[idx]; }
  auto leaf_group(int idx) const -> int { return t_.nodes[leaf_nodes_[idx]].group; }
  auto leaf_copies(int idx) const -> int { return t_.nodes[leaf_nodes_[idx]].size; }
  auto leaves_of_group(int g) const -> const std::vector<int>& { return by_group_[g]; }

  // Node whose components the content is a union of; kDone for the full sample,
  // kInvalid if the content crosses a clade boundary.
  auto level(const Content& c) const -> int;
  auto singleton(int idx) const -> Content;
  auto singleton_level(int idx) const -> int { return single_level_[idx]; }

  // Fewest lineages reachable once groups 0..last_group are sampled.
  auto min_lineages(int last_group) const -> int;

 private:
  auto range_sum(const Content& c, int node) const -> int;

  PerfectPhylogeny t_;
  std::vector<int> leaf_nodes_;
  std::vector<int> leaf_index_;  // node -> leaf position or -1
  std::vector<int> lo_, hi_;     // leaf position range per node
  std::vector<int> copies_prefix_;
  std::vector<std::vector<int>> by_group_;
  std::vector<int> single_level_;
};

// True when some compatible topology has exactly add[j] coalescent events before s_j.
auto add_vector_feasible(const PerfectPhylogeny& t, const std::vector<int>& add) -> bool;

struct TopologySample {
  bool compatible = false;
  std::vector<CoalescentEvent> events;
  double log_prob = 0.0;     // log proposal probability of the draw
  std::vector<int> leaf_labels;  // Kingman only: genealogy leaf -> phylogeny leaf node
};

// SIS draw of a compatible topology with add[j] events before s_j. The Kingman
// proposal is uniform over admissible labeled pairs; the Tajima proposal is
// uniform over distinct jump-chain events with a surviving interpretation.
auto sample_compatible_topology(const PerfectPhylogeny& t, const std::vector<int>& add,
                                Resolution res, Rng& rng) -> TopologySample;

struct CountEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;
  int n = 0;
  double cv = 0.0;         // coefficient of variation of the weights
  double log_mean = 0.0;
};

auto estimate_count(const PerfectPhylogeny& t, const std::vector<int>& add, Resolution res,
                    int N, Rng& rng) -> CountEstimate;
auto estimate_count(const PerfectPhylogeny& t, const std::vector<double>& times, Resolution res,
                    int N, Rng& rng) -> CountEstimate;

}  // namespace tajima
