#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace tajima {

inline constexpr double kTimeTol = 1e-12;

class InvalidGenealogy : public std::runtime_error {
 public:
  InvalidGenealogy(int rank, const std::string& what)
      : std::runtime_error(what), rank_(rank) {}
  // 1-based rank of the first offending event, 0 if not tied to an event.
  auto rank() const -> int { return rank_; }

 private:
  int rank_;
};

// Sampling groups are 0-based indices into s and n.
struct SamplingSchedule {
  std::vector<double> s;
  std::vector<int> n;

  auto m() const -> int { return static_cast<int>(s.size()); }
  auto total() const -> int;
  // Number of samples collected at times <= t (sampling first on ties).
  auto sampled_by(double t) const -> int;
  void validate() const;

  static auto isochronous(int n) -> SamplingSchedule { return {{0.0}, {n}}; }
};

enum class EventKind { SingletonSameGroup, SingletonCrossGroup, SingletonVintage, VintageVintage };

// Operands: groups are 0-based, vintages are 1-based ranks.
// SingletonSameGroup: x = y = group. SingletonCrossGroup: x < y groups.
// SingletonVintage: x = group, y = vintage. VintageVintage: x < y vintages.
struct CoalescentEvent {
  EventKind kind;
  int x;
  int y;

  static auto same(int g) -> CoalescentEvent { return {EventKind::SingletonSameGroup, g, g}; }
  static auto cross(int g1, int g2) -> CoalescentEvent;
  static auto single_vintage(int g, int v) -> CoalescentEvent {
    return {EventKind::SingletonVintage, g, v};
  }
  static auto vintages(int v1, int v2) -> CoalescentEvent;

  auto operator==(const CoalescentEvent&) const -> bool = default;
  auto operator<=>(const CoalescentEvent&) const = default;
};

struct JumpChainState {
  std::vector<int> a;
  std::vector<int> b;  // sorted vintage labels

  auto lineages() const -> int;
  auto operator==(const JumpChainState&) const -> bool = default;
};

struct JumpChainStep {
  double time;
  JumpChainState state;
};

struct Interval {
  double start;
  double end;
  int lineages;
  int k;  // interval lies in (t_{k+1}, t_k]; ends at t_k when i == 0
  int i;  // 0 for the interval ending at a coalescent time
  auto pairs() const -> double { return 0.5 * lineages * (lineages - 1.0); }
};

struct SubtreeStats {
  int leaf_count;
  std::vector<int> group_counts;
  double subtree_length;  // includes the subtending branch
  double subtending_length;
};

// Checks an event sequence against a schedule and coalescent times.
// Returns the first offending 1-based rank, 0 when valid; fills reason.
auto first_invalid_rank(const SamplingSchedule& sched, const std::vector<double>& times,
                        const std::vector<CoalescentEvent>& events, std::string* reason = nullptr)
    -> int;

// Unlabeled ranked genealogy with sampling groups. Leaves are numbered in the
// order their singleton lineages are consumed; vintage r is node n + r - 1.
class RankedGenealogy {
 public:
  RankedGenealogy() = default;
  RankedGenealogy(SamplingSchedule sched, std::vector<double> times,
                  std::vector<CoalescentEvent> events);

  auto schedule() const -> const SamplingSchedule& { return sched_; }
  auto times() const -> const std::vector<double>& { return times_; }
  auto events() const -> const std::vector<CoalescentEvent>& { return events_; }
  auto n() const -> int { return n_; }
  auto time_of(int vintage) const -> double { return times_[vintage - 1]; }
  auto height() const -> double { return times_.back(); }

  auto num_nodes() const -> int { return 2 * n_ - 1; }
  auto node_of_vintage(int v) const -> int { return n_ + v - 1; }
  auto vintage_of_node(int node) const -> int { return node < n_ ? 0 : node - n_ + 1; }
  auto is_leaf(int node) const -> bool { return node < n_; }
  auto parent(int node) const -> int { return parent_[node]; }
  auto children(int node) const -> const std::array<int, 2>& { return children_[node]; }
  auto node_time(int node) const -> double { return node_time_[node]; }
  auto leaf_group(int leaf) const -> int { return leaf_group_[leaf]; }
  auto branch_length(int node) const -> double;
  auto tree_length() const -> double;

  auto leaf_count(int vintage) const -> int { return leaf_count_[vintage - 1]; }
  auto group_counts(int vintage) const -> const std::vector<int>& {
    return group_counts_[vintage - 1];
  }
  // Vintages in the subtree rooted at vintage (including it), ascending.
  auto subtree_vintages(int vintage) const -> std::vector<int>;
  auto is_parent_of(int parent_vintage, int child_vintage) const -> bool;

  auto with_times(std::vector<double> times) const -> RankedGenealogy;
  // Canonical event-string key for topology comparisons.
  auto topology_key() const -> std::string;

 private:
  void build();

  SamplingSchedule sched_;
  std::vector<double> times_;
  std::vector<CoalescentEvent> events_;
  int n_ = 0;
  std::vector<int> parent_;
  std::vector<std::array<int, 2>> children_;
  std::vector<double> node_time_;
  std::vector<int> leaf_group_;
  std::vector<int> leaf_count_;
  std::vector<std::vector<int>> group_counts_;
};

auto jump_chain(const RankedGenealogy& g) -> std::vector<JumpChainStep>;
auto interval_decomposition(const RankedGenealogy& g) -> std::vector<Interval>;
// Interval decomposition from coalescent times alone (the topology is irrelevant).
auto interval_decomposition(const SamplingSchedule& sched, const std::vector<double>& times)
    -> std::vector<Interval>;
auto subtree_stats(const RankedGenealogy& g, int vintage) -> SubtreeStats;
auto cherry_count(const RankedGenealogy& g) -> int;
// Cherries whose two leaves share a sampling group.
auto same_group_cherry_count(const RankedGenealogy& g) -> int;

// Number of coalescent events strictly before each sampling time.
auto events_before_sampling(const SamplingSchedule& sched, const std::vector<double>& times)
    -> std::vector<int>;

auto to_json(const SamplingSchedule& s) -> nlohmann::json;
auto schedule_from_json(const nlohmann::json& j) -> SamplingSchedule;
auto to_json(const RankedGenealogy& g) -> nlohmann::json;
auto genealogy_from_json(const nlohmann::json& j) -> RankedGenealogy;

}  // namespace tajima
