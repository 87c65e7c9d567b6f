#include "tajima/genealogy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace tajima {

auto SamplingSchedule::total() const -> int { return std::accumulate(n.begin(), n.end(), 0); }

auto SamplingSchedule::sampled_by(double t) const -> int {
  int c = 0;
  for (int j = 0; j < m(); ++j)
    if (s[j] <= t + kTimeTol) c += n[j];
  return c;
}

void SamplingSchedule::validate() const {
  if (s.empty() || s.size() != n.size())
    throw std::invalid_argument("schedule: s and n must be nonempty and of equal length");
  if (std::abs(s[0]) > kTimeTol) throw std::invalid_argument("schedule: s[0] must be 0");
  for (size_t j = 1; j < s.size(); ++j)
    if (!(s[j] > s[j - 1] + kTimeTol))
      throw std::invalid_argument("schedule: sampling times must be strictly increasing");
  for (int c : n)
    if (c < 1) throw std::invalid_argument("schedule: every group needs at least one sample");
  if (total() < 2) throw std::invalid_argument("schedule: at least two samples required");
}

auto CoalescentEvent::cross(int g1, int g2) -> CoalescentEvent {
  if (g1 == g2) return same(g1);
  return {EventKind::SingletonCrossGroup, std::min(g1, g2), std::max(g1, g2)};
}

auto CoalescentEvent::vintages(int v1, int v2) -> CoalescentEvent {
  return {EventKind::VintageVintage, std::min(v1, v2), std::max(v1, v2)};
}

auto JumpChainState::lineages() const -> int {
  return std::accumulate(a.begin(), a.end(), 0) + static_cast<int>(b.size());
}

auto first_invalid_rank(const SamplingSchedule& sched, const std::vector<double>& times,
                        const std::vector<CoalescentEvent>& events, std::string* reason) -> int {
  auto fail = [&](int r, const std::string& why) {
    if (reason) *reason = why;
    return r;
  };
  const int n = sched.total();
  const int m = sched.m();
  if (static_cast<int>(times.size()) != n - 1) return fail(0, "expected n-1 coalescent times");
  if (static_cast<int>(events.size()) != n - 1) return fail(0, "expected n-1 events");
  std::vector<int> a(m, 0);
  std::vector<char> alive(n, 0);
  int next_group = 0;
  double prev = 0.0;
  for (int r = 1; r <= n - 1; ++r) {
    const double t = times[r - 1];
    if (!(t > prev) || !std::isfinite(t)) return fail(r, "coalescent times must increase");
    prev = t;
    while (next_group < m && sched.s[next_group] <= t + kTimeTol) {
      a[next_group] += sched.n[next_group];
      ++next_group;
    }
    const auto& e = events[r - 1];
    auto take_group = [&](int g) {
      if (g < 0 || g >= m || a[g] < 1) return false;
      --a[g];
      return true;
    };
    auto take_vintage = [&](int v) {
      if (v < 1 || v >= r || !alive[v]) return false;
      alive[v] = 0;
      return true;
    };
    bool ok = true;
    switch (e.kind) {
      case EventKind::SingletonSameGroup:
        ok = e.x == e.y && take_group(e.x) && take_group(e.x);
        break;
      case EventKind::SingletonCrossGroup:
        ok = e.x < e.y && take_group(e.x) && take_group(e.y);
        break;
      case EventKind::SingletonVintage:
        ok = take_group(e.x) && take_vintage(e.y);
        break;
      case EventKind::VintageVintage:
        ok = e.x < e.y && take_vintage(e.x) && take_vintage(e.y);
        break;
    }
    if (!ok) return fail(r, "event references unavailable lineages");
    alive[r] = 1;
  }
  if (next_group < m) return fail(n - 1, "sampling time after the root");
  return 0;
}

RankedGenealogy::RankedGenealogy(SamplingSchedule sched, std::vector<double> times,
                                 std::vector<CoalescentEvent> events)
    : sched_(std::move(sched)), times_(std::move(times)), events_(std::move(events)) {
  sched_.validate();
  std::string why;
  if (int r = first_invalid_rank(sched_, times_, events_, &why); r != 0 || !why.empty())
    throw InvalidGenealogy(r, "invalid genealogy at rank " + std::to_string(r) + ": " + why);
  build();
}

void RankedGenealogy::build() {
  n_ = sched_.total();
  const int nn = 2 * n_ - 1;
  parent_.assign(nn, -1);
  children_.assign(nn, {-1, -1});
  node_time_.assign(nn, 0.0);
  leaf_group_.assign(n_, -1);
  leaf_count_.assign(n_ - 1, 0);
  group_counts_.assign(n_ - 1, std::vector<int>(sched_.m(), 0));
  int next_leaf = 0;
  auto new_leaf = [&](int g) {
    int id = next_leaf++;
    leaf_group_[id] = g;
    node_time_[id] = sched_.s[g];
    return id;
  };
  for (int r = 1; r < n_; ++r) {
    const auto& e = events_[r - 1];
    int c0 = 0;
    int c1 = 0;
    switch (e.kind) {
      case EventKind::SingletonSameGroup:
      case EventKind::SingletonCrossGroup:
        c0 = new_leaf(e.x);
        c1 = new_leaf(e.y);
        break;
      case EventKind::SingletonVintage:
        c0 = new_leaf(e.x);
        c1 = node_of_vintage(e.y);
        break;
      case EventKind::VintageVintage:
        c0 = node_of_vintage(e.x);
        c1 = node_of_vintage(e.y);
        break;
    }
    const int self = node_of_vintage(r);
    children_[self] = {c0, c1};
    parent_[c0] = self;
    parent_[c1] = self;
    node_time_[self] = times_[r - 1];
    auto& gc = group_counts_[r - 1];
    for (int c : {c0, c1}) {
      if (is_leaf(c)) {
        leaf_count_[r - 1] += 1;
        gc[leaf_group_[c]] += 1;
      } else {
        int v = vintage_of_node(c);
        leaf_count_[r - 1] += leaf_count_[v - 1];
        for (int j = 0; j < sched_.m(); ++j) gc[j] += group_counts_[v - 1][j];
      }
    }
  }
}

auto RankedGenealogy::branch_length(int node) const -> double {
  if (parent_[node] < 0) return 0.0;
  return node_time_[parent_[node]] - node_time_[node];
}

auto RankedGenealogy::tree_length() const -> double {
  double s = 0.0;
  for (int u = 0; u < num_nodes(); ++u) s += branch_length(u);
  return s;
}

auto RankedGenealogy::subtree_vintages(int vintage) const -> std::vector<int> {
  std::vector<int> out;
  std::vector<int> stack{node_of_vintage(vintage)};
  while (!stack.empty()) {
    int u = stack.back();
    stack.pop_back();
    if (is_leaf(u)) continue;
    out.push_back(vintage_of_node(u));
    stack.push_back(children_[u][0]);
    stack.push_back(children_[u][1]);
  }
  std::sort(out.begin(), out.end());
  return out;
}

auto RankedGenealogy::is_parent_of(int parent_vintage, int child_vintage) const -> bool {
  return parent_[node_of_vintage(child_vintage)] == node_of_vintage(parent_vintage);
}

auto RankedGenealogy::with_times(std::vector<double> times) const -> RankedGenealogy {
  return RankedGenealogy(sched_, std::move(times), events_);
}

auto RankedGenealogy::topology_key() const -> std::string {
  std::ostringstream os;
  for (const auto& e : events_) os << static_cast<int>(e.kind) << ':' << e.x << ',' << e.y << ';';
  return os.str();
}

auto jump_chain(const RankedGenealogy& g) -> std::vector<JumpChainStep> {
  const auto& sc = g.schedule();
  const int m = sc.m();
  JumpChainState st{std::vector<int>(m, 0), {}};
  st.a[0] = sc.n[0];
  std::vector<JumpChainStep> out{{0.0, st}};
  int next_group = 1;
  for (int r = 1; r < g.n(); ++r) {
    const double t = g.time_of(r);
    while (next_group < m && sc.s[next_group] <= t + kTimeTol) {
      st.a[next_group] += sc.n[next_group];
      out.push_back({sc.s[next_group], st});
      ++next_group;
    }
    const auto& e = g.events()[r - 1];
    auto drop_b = [&](int v) { st.b.erase(std::find(st.b.begin(), st.b.end(), v)); };
    switch (e.kind) {
      case EventKind::SingletonSameGroup:
        st.a[e.x] -= 2;
        break;
      case EventKind::SingletonCrossGroup:
        st.a[e.x] -= 1;
        st.a[e.y] -= 1;
        break;
      case EventKind::SingletonVintage:
        st.a[e.x] -= 1;
        drop_b(e.y);
        break;
      case EventKind::VintageVintage:
        drop_b(e.x);
        drop_b(e.y);
        break;
    }
    st.b.push_back(r);
    out.push_back({t, st});
  }
  return out;
}

auto interval_decomposition(const SamplingSchedule& sched, const std::vector<double>& times)
    -> std::vector<Interval> {
  const int n = sched.total();
  const int m = sched.m();
  std::vector<Interval> out;
  double cur = 0.0;
  int lineages = sched.n[0];
  int next_group = 1;
  for (int r = 1; r < n; ++r) {
    const double t = times[r - 1];
    const int k = n + 1 - r;  // event r happens at t_k
    std::vector<Interval> block;
    while (next_group < m && sched.s[next_group] <= t + kTimeTol) {
      double sj = sched.s[next_group];
      if (sj > cur) block.push_back({cur, sj, lineages, k, 0});
      cur = std::max(cur, sj);
      lineages += sched.n[next_group];
      ++next_group;
    }
    block.push_back({cur, t, lineages, k, 0});
    const int nb = static_cast<int>(block.size());
    for (int q = 0; q < nb; ++q) block[q].i = nb - 1 - q;
    out.insert(out.end(), block.begin(), block.end());
    cur = t;
    lineages -= 1;
  }
  return out;
}

auto interval_decomposition(const RankedGenealogy& g) -> std::vector<Interval> {
  return interval_decomposition(g.schedule(), g.times());
}

auto subtree_stats(const RankedGenealogy& g, int vintage) -> SubtreeStats {
  if (vintage < 1 || vintage >= g.n()) throw std::out_of_range("subtree_stats: unknown vintage");
  SubtreeStats st{g.leaf_count(vintage), g.group_counts(vintage), 0.0, 0.0};
  const int root = g.node_of_vintage(vintage);
  st.subtending_length = g.branch_length(root);
  double len = st.subtending_length;
  std::vector<int> stack{root};
  while (!stack.empty()) {
    int u = stack.back();
    stack.pop_back();
    if (g.is_leaf(u)) continue;
    for (int c : g.children(u)) {
      len += g.branch_length(c);
      stack.push_back(c);
    }
  }
  st.subtree_length = len;
  return st;
}

auto cherry_count(const RankedGenealogy& g) -> int {
  int c = 0;
  for (int v = 1; v < g.n(); ++v) {
    const auto& ch = g.children(g.node_of_vintage(v));
    if (g.is_leaf(ch[0]) && g.is_leaf(ch[1])) ++c;
  }
  return c;
}

auto same_group_cherry_count(const RankedGenealogy& g) -> int {
  int c = 0;
  for (const auto& e : g.events())
    if (e.kind == EventKind::SingletonSameGroup) ++c;
  return c;
}

auto events_before_sampling(const SamplingSchedule& sched, const std::vector<double>& times)
    -> std::vector<int> {
  std::vector<int> out(sched.m(), 0);
  for (int j = 0; j < sched.m(); ++j)
    for (double t : times)
      if (t < sched.s[j] - kTimeTol) ++out[j];
  return out;
}

namespace {

auto kind_name(EventKind k) -> const char* {
  switch (k) {
    case EventKind::SingletonSameGroup:
      return "singleton_same_group";
    case EventKind::SingletonCrossGroup:
      return "singleton_cross_group";
    case EventKind::SingletonVintage:
      return "singleton_vintage";
    case EventKind::VintageVintage:
      return "vintage_vintage";
  }
  return "";
}

auto kind_from_name(const std::string& s) -> EventKind {
  if (s == "singleton_same_group") return EventKind::SingletonSameGroup;
  if (s == "singleton_cross_group") return EventKind::SingletonCrossGroup;
  if (s == "singleton_vintage") return EventKind::SingletonVintage;
  if (s == "vintage_vintage") return EventKind::VintageVintage;
  throw std::invalid_argument("unknown event kind: " + s);
}

}  // namespace

auto to_json(const SamplingSchedule& s) -> nlohmann::json { return {{"s", s.s}, {"n", s.n}}; }

auto schedule_from_json(const nlohmann::json& j) -> SamplingSchedule {
  SamplingSchedule s{j.at("s").get<std::vector<double>>(), j.at("n").get<std::vector<int>>()};
  s.validate();
  return s;
}

auto to_json(const RankedGenealogy& g) -> nlohmann::json {
  nlohmann::json ev = nlohmann::json::array();
  for (const auto& e : g.events()) {
    nlohmann::json je{{"kind", kind_name(e.kind)}};
    switch (e.kind) {
      case EventKind::SingletonSameGroup:
        je["groups"] = {e.x, e.y};
        break;
      case EventKind::SingletonCrossGroup:
        je["groups"] = {e.x, e.y};
        break;
      case EventKind::SingletonVintage:
        je["groups"] = {e.x};
        je["vintages"] = {e.y};
        break;
      case EventKind::VintageVintage:
        je["vintages"] = {e.x, e.y};
        break;
    }
    ev.push_back(je);
  }
  return {{"schedule", to_json(g.schedule())}, {"times", g.times()}, {"events", ev}};
}

auto genealogy_from_json(const nlohmann::json& j) -> RankedGenealogy {
  auto sched = schedule_from_json(j.at("schedule"));
  auto times = j.at("times").get<std::vector<double>>();
  std::vector<CoalescentEvent> events;
  for (const auto& je : j.at("events")) {
    auto k = kind_from_name(je.at("kind").get<std::string>());
    switch (k) {
      case EventKind::SingletonSameGroup:
        events.push_back(CoalescentEvent::same(je.at("groups")[0].get<int>()));
        break;
      case EventKind::SingletonCrossGroup:
        events.push_back(
            CoalescentEvent::cross(je.at("groups")[0].get<int>(), je.at("groups")[1].get<int>()));
        break;
      case EventKind::SingletonVintage:
        events.push_back(CoalescentEvent::single_vintage(je.at("groups")[0].get<int>(),
                                                         je.at("vintages")[0].get<int>()));
        break;
      case EventKind::VintageVintage:
        events.push_back(CoalescentEvent::vintages(je.at("vintages")[0].get<int>(),
                                                   je.at("vintages")[1].get<int>()));
        break;
    }
  }
  return RankedGenealogy(std::move(sched), std::move(times), std::move(events));
}

}  // namespace tajima
