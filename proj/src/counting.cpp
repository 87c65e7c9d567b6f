#include "tajima/counting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace tajima {

auto resolution_name(Resolution r) -> const char* {
  return r == Resolution::Tajima ? "tajima" : "kingman";
}

auto parse_resolution(const std::string& s) -> Resolution {
  if (s == "tajima") return Resolution::Tajima;
  if (s == "kingman") return Resolution::Kingman;
  throw std::invalid_argument("unknown resolution: " + s);
}

CompatModel::CompatModel(const PerfectPhylogeny& t) : t_(t.effective()) {
  const int nn = t_.size();
  leaf_index_.assign(nn, -1);
  lo_.assign(nn, 0);
  hi_.assign(nn, 0);
  by_group_.assign(t_.schedule.m(), {});
  // Iterative preorder assigning leaf positions.
  std::vector<std::pair<int, bool>> stack{{0, false}};
  while (!stack.empty()) {
    auto [u, done] = stack.back();
    stack.pop_back();
    if (done) {
      hi_[u] = static_cast<int>(leaf_nodes_.size());
      continue;
    }
    lo_[u] = static_cast<int>(leaf_nodes_.size());
    if (t_.nodes[u].is_leaf()) {
      leaf_index_[u] = static_cast<int>(leaf_nodes_.size());
      by_group_[t_.nodes[u].group].push_back(leaf_index_[u]);
      leaf_nodes_.push_back(u);
      hi_[u] = static_cast<int>(leaf_nodes_.size());
      continue;
    }
    stack.push_back({u, true});
    const auto& ch = t_.nodes[u].children;
    for (auto it = ch.rbegin(); it != ch.rend(); ++it) stack.push_back({*it, false});
  }
  copies_prefix_.assign(leaf_nodes_.size() + 1, 0);
  for (size_t p = 0; p < leaf_nodes_.size(); ++p)
    copies_prefix_[p + 1] = copies_prefix_[p] + t_.nodes[leaf_nodes_[p]].size;
  single_level_.resize(leaf_nodes_.size());
  for (int p = 0; p < num_leaves(); ++p) single_level_[p] = level(singleton(p));
}

auto CompatModel::singleton(int idx) const -> Content {
  Content c(leaf_nodes_.size(), 0);
  c[idx] = 1;
  return c;
}

auto CompatModel::range_sum(const Content& c, int node) const -> int {
  int s = 0;
  for (int p = lo_[node]; p < hi_[node]; ++p) s += c[p];
  return s;
}

auto CompatModel::level(const Content& c) const -> int {
  int a = -1, b = -1;
  for (int p = 0; p < num_leaves(); ++p)
    if (c[p] > 0) {
      if (a < 0) a = p;
      b = p;
    }
  if (a < 0) return kInvalid;
  int x = leaf_nodes_[a];
  while (hi_[x] <= b) x = t_.nodes[x].parent;
  const int full = copies_prefix_[hi_[x]] - copies_prefix_[lo_[x]];
  if (range_sum(c, x) == full) return x == 0 ? kDone : t_.nodes[x].parent;
  if (t_.nodes[x].is_leaf()) return x;
  for (int y : t_.nodes[x].children) {
    int s = range_sum(c, y);
    if (s != 0 && s != copies_prefix_[hi_[y]] - copies_prefix_[lo_[y]]) return kInvalid;
  }
  return x;
}

auto CompatModel::min_lineages(int last_group) const -> int {
  const int nn = t_.size();
  std::vector<char> full(nn, 0);
  // Children have larger preorder ids than parents.
  for (int u = nn - 1; u >= 0; --u) {
    const auto& v = t_.nodes[u];
    if (v.is_leaf()) {
      full[u] = v.group <= last_group;
    } else {
      full[u] = 1;
      for (int c : v.children) full[u] &= full[c];
    }
  }
  int count = full[0] ? 1 : 0;
  for (int u = 0; u < nn; ++u) {
    const auto& v = t_.nodes[u];
    if (v.is_leaf() || full[u]) continue;
    for (int c : v.children)
      if (full[c]) {
        ++count;
        break;
      }
  }
  return count;
}

auto add_vector_feasible(const PerfectPhylogeny& t, const std::vector<int>& add) -> bool {
  const auto& sched = t.schedule;
  const int m = sched.m();
  if (static_cast<int>(add.size()) != m || add[0] != 0) return false;
  CompatModel cm(t);
  int sampled = sched.n[0];
  for (int j = 1; j < m; ++j) {
    if (add[j] < add[j - 1]) return false;
    if (add[j] > sampled - cm.min_lineages(j - 1)) return false;
    sampled += sched.n[j];
  }
  return true;
}

namespace {

struct KLineage {
  Content content;
  int level;
  int vintage;  // 0 for a singleton
  int leaf;     // leaf position for singletons
};

auto sample_kingman(const CompatModel& cm, const std::vector<int>& add, Rng& rng)
    -> TopologySample {
  const auto& sched = cm.tree().schedule;
  const int n = sched.total();
  const int m = sched.m();
  TopologySample out;
  std::vector<KLineage> lins;
  int next_group = 0;
  for (int r = 1; r <= n - 1; ++r) {
    while (next_group < m && add[next_group] <= r - 1) {
      for (int p : cm.leaves_of_group(next_group))
        for (int c = 0; c < cm.leaf_copies(p); ++c)
          lins.push_back({cm.singleton(p), cm.singleton_level(p), 0, p});
      ++next_group;
    }
    // Admissible pairs share a level.
    std::vector<std::pair<int, int>> pairs;
    for (size_t i = 0; i < lins.size(); ++i)
      for (size_t j = i + 1; j < lins.size(); ++j)
        if (lins[i].level == lins[j].level && lins[i].level >= 0)
          pairs.emplace_back(static_cast<int>(i), static_cast<int>(j));
    if (pairs.empty()) return TopologySample{};
    out.log_prob -= std::log(static_cast<double>(pairs.size()));
    auto [i, j] = pairs[uniform_int(rng, 0, static_cast<int>(pairs.size()) - 1)];
    KLineage p = lins[i];
    KLineage q = lins[j];
    if (p.vintage > 0 && q.vintage == 0) std::swap(p, q);
    if (p.vintage == 0 && q.vintage == 0 && cm.leaf_group(p.leaf) > cm.leaf_group(q.leaf))
      std::swap(p, q);
    if (p.vintage == 0 && q.vintage == 0) {
      out.events.push_back(CoalescentEvent::cross(cm.leaf_group(p.leaf), cm.leaf_group(q.leaf)));
      out.leaf_labels.push_back(cm.leaf_node(p.leaf));
      out.leaf_labels.push_back(cm.leaf_node(q.leaf));
    } else if (p.vintage == 0) {
      out.events.push_back(CoalescentEvent::single_vintage(cm.leaf_group(p.leaf), q.vintage));
      out.leaf_labels.push_back(cm.leaf_node(p.leaf));
    } else {
      out.events.push_back(CoalescentEvent::vintages(p.vintage, q.vintage));
    }
    Content merged = p.content;
    for (size_t k = 0; k < merged.size(); ++k) merged[k] += q.content[k];
    lins.erase(lins.begin() + j);
    lins.erase(lins.begin() + i);
    lins.push_back({merged, cm.level(merged), r, -1});
  }
  out.compatible = true;
  return out;
}

// Tajima interpretations: contents of the alive vintages, in ascending label order.
using Interp = std::vector<Content>;

auto sample_tajima(const CompatModel& cm, const std::vector<int>& add, Rng& rng)
    -> TopologySample {
  const auto& sched = cm.tree().schedule;
  const int n = sched.total();
  const int m = sched.m();
  const int L = cm.num_leaves();
  TopologySample out;
  std::vector<int> avail(L, 0);
  std::vector<int> a(m, 0);
  std::vector<int> alive;  // vintage labels
  std::set<Interp> interps{Interp{}};
  int next_group = 0;

  for (int r = 1; r <= n - 1; ++r) {
    while (next_group < m && add[next_group] <= r - 1) {
      for (int p : cm.leaves_of_group(next_group)) avail[p] = cm.leaf_copies(p);
      a[next_group] = sched.n[next_group];
      ++next_group;
    }
    std::vector<CoalescentEvent> cands;
    for (int i = 0; i < m; ++i) {
      if (a[i] >= 2) cands.push_back(CoalescentEvent::same(i));
      for (int j = i + 1; j < m; ++j)
        if (a[i] >= 1 && a[j] >= 1) cands.push_back(CoalescentEvent::cross(i, j));
      if (a[i] >= 1)
        for (int v : alive) cands.push_back(CoalescentEvent::single_vintage(i, v));
    }
    for (size_t x = 0; x < alive.size(); ++x)
      for (size_t y = x + 1; y < alive.size(); ++y)
        cands.push_back(CoalescentEvent::vintages(alive[x], alive[y]));

    auto pos_of = [&](int v) {
      return static_cast<int>(std::lower_bound(alive.begin(), alive.end(), v) - alive.begin());
    };
    auto expand = [&](const CoalescentEvent& e) {
      std::set<Interp> res;
      for (const auto& it : interps) {
        std::vector<int> rem = avail;
        for (const auto& c : it)
          for (int p = 0; p < L; ++p) rem[p] -= c[p];
        auto emit = [&](const Content& merged, int drop1, int drop2) {
          Interp next;
          for (size_t k = 0; k < it.size(); ++k)
            if (static_cast<int>(k) != drop1 && static_cast<int>(k) != drop2) next.push_back(it[k]);
          next.push_back(merged);
          res.insert(std::move(next));
        };
        auto leaves_with = [&](int g, int need) {
          std::vector<int> out_l;
          for (int p : cm.leaves_of_group(g))
            if (rem[p] >= need) out_l.push_back(p);
          return out_l;
        };
        switch (e.kind) {
          case EventKind::SingletonSameGroup: {
            auto ls = leaves_with(e.x, 1);
            for (size_t u = 0; u < ls.size(); ++u)
              for (size_t w = u; w < ls.size(); ++w) {
                if (u == w && rem[ls[u]] < 2) continue;
                if (cm.singleton_level(ls[u]) != cm.singleton_level(ls[w])) continue;
                Content c(L, 0);
                c[ls[u]] += 1;
                c[ls[w]] += 1;
                emit(c, -1, -1);
              }
            break;
          }
          case EventKind::SingletonCrossGroup: {
            for (int p : leaves_with(e.x, 1))
              for (int q : leaves_with(e.y, 1)) {
                if (cm.singleton_level(p) != cm.singleton_level(q)) continue;
                Content c(L, 0);
                c[p] = 1;
                c[q] = 1;
                emit(c, -1, -1);
              }
            break;
          }
          case EventKind::SingletonVintage: {
            int k = pos_of(e.y);
            int lv = cm.level(it[k]);
            for (int p : leaves_with(e.x, 1)) {
              if (cm.singleton_level(p) != lv) continue;
              Content c = it[k];
              c[p] += 1;
              emit(c, k, -1);
            }
            break;
          }
          case EventKind::VintageVintage: {
            int k1 = pos_of(e.x);
            int k2 = pos_of(e.y);
            int lv = cm.level(it[k1]);
            if (lv < 0 || lv != cm.level(it[k2])) break;
            Content c = it[k1];
            for (int p = 0; p < L; ++p) c[p] += it[k2][p];
            emit(c, k1, k2);
            break;
          }
        }
      }
      return res;
    };

    std::vector<std::pair<CoalescentEvent, std::set<Interp>>> viable;
    for (const auto& e : cands) {
      auto res = expand(e);
      if (!res.empty()) viable.emplace_back(e, std::move(res));
    }
    if (viable.empty()) return TopologySample{};
    out.log_prob -= std::log(static_cast<double>(viable.size()));
    auto& pick = viable[uniform_int(rng, 0, static_cast<int>(viable.size()) - 1)];
    const auto& e = pick.first;
    out.events.push_back(e);
    switch (e.kind) {
      case EventKind::SingletonSameGroup:
        a[e.x] -= 2;
        break;
      case EventKind::SingletonCrossGroup:
        a[e.x] -= 1;
        a[e.y] -= 1;
        break;
      case EventKind::SingletonVintage:
        a[e.x] -= 1;
        alive.erase(std::find(alive.begin(), alive.end(), e.y));
        break;
      case EventKind::VintageVintage:
        alive.erase(std::find(alive.begin(), alive.end(), e.x));
        alive.erase(std::find(alive.begin(), alive.end(), e.y));
        break;
    }
    alive.push_back(r);
    interps = std::move(pick.second);
  }
  out.compatible = true;
  return out;
}

}  // namespace

auto sample_compatible_topology(const PerfectPhylogeny& t, const std::vector<int>& add,
                                Resolution res, Rng& rng) -> TopologySample {
  if (!add_vector_feasible(t, add)) return TopologySample{};
  CompatModel cm(t);
  return res == Resolution::Kingman ? sample_kingman(cm, add, rng) : sample_tajima(cm, add, rng);
}

auto estimate_count(const PerfectPhylogeny& t, const std::vector<int>& add, Resolution res,
                    int N, Rng& rng) -> CountEstimate {
  if (N < 1) throw std::invalid_argument("estimate_count needs N >= 1");
  CountEstimate est;
  est.n = N;
  if (!add_vector_feasible(t, add)) {
    est.log_mean = -std::numeric_limits<double>::infinity();
    return est;
  }
  CompatModel cm(t);
  std::vector<double> logw;
  logw.reserve(N);
  for (int i = 0; i < N; ++i) {
    auto s = res == Resolution::Kingman ? sample_kingman(cm, add, rng) : sample_tajima(cm, add, rng);
    logw.push_back(s.compatible ? -s.log_prob : -std::numeric_limits<double>::infinity());
  }
  double mx = *std::max_element(logw.begin(), logw.end());
  if (!std::isfinite(mx)) {
    est.log_mean = mx;
    return est;
  }
  double s1 = 0.0, s2 = 0.0;
  for (double lw : logw) {
    double w = std::exp(lw - mx);
    s1 += w;
    s2 += w * w;
  }
  const double mean_s = s1 / N;
  const double var_s = N > 1 ? std::max(0.0, (s2 - N * mean_s * mean_s) / (N - 1)) : 0.0;
  est.log_mean = mx + std::log(mean_s);
  est.mean = std::exp(est.log_mean);
  est.stderr_ = std::exp(mx) * std::sqrt(var_s / N);
  est.cv = mean_s > 0 ? std::sqrt(var_s) / mean_s : 0.0;
  return est;
}

auto estimate_count(const PerfectPhylogeny& t, const std::vector<double>& times, Resolution res,
                    int N, Rng& rng) -> CountEstimate {
  return estimate_count(t, events_before_sampling(t.schedule, times), res, N, rng);
}

}  // namespace tajima
