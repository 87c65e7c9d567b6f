#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tajima/genealogy.hpp"

namespace tajima {

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// k x z 0/1 matrix; 0 = ancestral, 1 = mutant.
struct IncidenceMatrix {
  std::vector<std::vector<int>> rows;
  std::vector<std::string> haplotype_ids;
  std::vector<std::string> site_ids;

  auto k() const -> int { return static_cast<int>(rows.size()); }
  auto z() const -> int { return rows.empty() ? 0 : static_cast<int>(rows[0].size()); }
  auto column(int site) const -> std::vector<int>;
};

// k x m counts: counts[h][j] copies of haplotype h sampled at s_j.
struct FrequencyMatrix {
  std::vector<std::vector<int>> counts;
};

struct IsmReport {
  bool ok = true;
  std::vector<std::pair<int, int>> conflicts;  // site pairs, i < j
};

auto check_ism(const IncidenceMatrix& y1) -> IsmReport;

struct PhyloNode {
  int parent = -1;
  std::vector<int> children;
  int edge_mutations = 0;      // |E|; 0 at the root
  std::vector<int> sites;      // site indices labeling the subtending edge
  int size = 0;                // |V|
  std::vector<int> group_counts;
  int haplotype = -1;          // leaves only
  int group = -1;              // leaves only
  auto is_leaf() const -> bool { return children.empty(); }
};

// Augmented perfect phylogeny. Node 0 is the root.
struct PerfectPhylogeny {
  std::vector<PhyloNode> nodes;
  SamplingSchedule schedule;
  int num_sites = 0;

  auto size() const -> int { return static_cast<int>(nodes.size()); }
  auto total_mutations() const -> int;
  // Copy in which every mutation-free leaf carrying several copies is split
  // into single-copy leaves of its parent. Existing node ids are preserved;
  // extra copies are appended.
  auto effective() const -> PerfectPhylogeny;
  // Mutant site set of every leaf, from root-to-leaf edge labels.
  auto leaf_sites(int leaf) const -> std::vector<int>;
};

auto build_perfect_phylogeny(const IncidenceMatrix& y1, const FrequencyMatrix& y2,
                             const SamplingSchedule& sched) -> PerfectPhylogeny;
// Y1/Y2 recovered from T (haplotypes in first-leaf order, sites ascending).
auto incidence_from_phylogeny(const PerfectPhylogeny& t) -> std::pair<IncidenceMatrix, FrequencyMatrix>;

// Largest admissible number of coalescent events before each sampling time.
auto compute_constraints(const PerfectPhylogeny& t) -> std::vector<int>;

auto to_json(const PerfectPhylogeny& t) -> nlohmann::json;

struct IngestOptions {
  bool use_majority = false;   // ancestral state by majority rule
  double units_per_year = 1.0;
};

struct IngestResult {
  IncidenceMatrix y1;
  FrequencyMatrix y2;
  SamplingSchedule schedule;
  std::vector<int> dropped_sites;     // alignment columns removed for ISM conflicts
  std::vector<int> ambiguous_sites;   // alignment columns removed for ambiguity codes
  std::vector<std::string> warnings;
};

struct SequenceRecord {
  std::string id;
  std::string seq;
};

auto parse_fasta(const std::string& text) -> std::vector<SequenceRecord>;
// sequence_id,date; dates are numeric years or ISO-8601 (YYYY-MM-DD).
auto parse_metadata_csv(const std::string& text) -> std::vector<std::pair<std::string, double>>;
auto parse_date(const std::string& s) -> double;

auto ingest_alignment(const std::vector<SequenceRecord>& seqs, const std::string& ancestral,
                      const std::vector<std::pair<std::string, double>>& dates,
                      const IngestOptions& opt = {}) -> IngestResult;

// Greedy removal of ISM-violating sites, most conflicts first, ties by index.
auto remove_ism_conflicts(const IncidenceMatrix& y1) -> std::vector<int>;

auto incidence_to_csv(const IncidenceMatrix& y1) -> std::string;
auto incidence_from_csv(const std::string& text) -> IncidenceMatrix;
auto frequency_to_csv(const FrequencyMatrix& y2, const SamplingSchedule& sched,
                      const std::vector<std::string>& haplotype_ids) -> std::string;
auto frequency_from_csv(const std::string& text) -> std::pair<FrequencyMatrix, SamplingSchedule>;

}  // namespace tajima
