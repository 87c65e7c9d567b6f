#include "tajima/allocation.hpp"

#include <algorithm>
#include <sstream>

namespace tajima {

auto singleton_edge_partition(const PerfectPhylogeny& t, int v) -> std::vector<std::map<int, int>> {
  const auto eff = t.effective();
  std::vector<std::map<int, int>> out(eff.schedule.m());
  for (int c : eff.nodes[v].children) {
    const auto& w = eff.nodes[c];
    if (w.size == 1) out[w.group][w.edge_mutations] += 1;
  }
  return out;
}

auto enumerate_allocations(const PerfectPhylogeny& t, const RankedGenealogy& g, std::size_t cap)
    -> AllocationMatrix {
  const auto eff = t.effective();
  const int n = g.n();
  if (eff.schedule.s != g.schedule().s || eff.schedule.n != g.schedule().n)
    throw std::invalid_argument("phylogeny and genealogy use different schedules");
  const int nn = eff.size();
  std::vector<int> allowed(nn, 0);
  std::vector<std::vector<int>> big_children(nn);
  for (int u = 0; u < nn; ++u) {
    const auto& v = eff.nodes[u];
    allowed[u] = v.is_leaf() ? v.size - 1 : static_cast<int>(v.children.size()) - 1;
    for (int c : v.children)
      if (eff.nodes[c].size > 1) big_children[u].push_back(c);
  }
  std::vector<std::vector<int>> sub(n);
  for (int i = 1; i < n; ++i) sub[i] = g.subtree_vintages(i);

  AllocationMatrix a;
  if (n < 2) return a;
  a.rows.push_back(std::vector<int>(n - 1, 0));
  for (int i = n - 2; i >= 1; --i) {
    const int gi = g.leaf_count(i);
    std::vector<std::vector<int>> next;
    next.reserve(a.rows.size());
    for (auto& row : a.rows) {
      const int v = row[i - 1];
      const auto& node = eff.nodes[v];
      std::vector<int> targets;
      if (!node.is_leaf()) {
        for (int c : big_children[v])
          if (eff.nodes[c].size == gi) targets.push_back(c);
        if (node.children.size() >= 3) targets.push_back(v);
      }
      if (targets.empty()) targets.push_back(v);
      for (int w : targets) {
        if (w != v && eff.nodes[w].group_counts != g.group_counts(i)) continue;
        std::vector<int> r = row;
        for (int u : sub[i]) r[u - 1] = w;
        int count = 0;
        for (int c = i - 1; c < n - 1; ++c) count += r[c] == w;
        if (count > allowed[w]) continue;
        next.push_back(std::move(r));
        if (next.size() > cap) throw AllocationCapExceeded("allocation matrix exceeds the row cap");
      }
    }
    a.rows = std::move(next);
    if (a.rows.empty()) return a;
  }
  // Final multiplicity check on complete rows.
  std::vector<std::vector<int>> kept;
  for (auto& row : a.rows) {
    std::vector<int> count(nn, 0);
    for (int v : row) ++count[v];
    bool ok = true;
    for (int u = 0; u < nn && ok; ++u)
      if (eff.nodes[u].size > 1 && count[u] != allowed[u]) ok = false;
    if (ok) kept.push_back(std::move(row));
  }
  std::sort(kept.begin(), kept.end());
  kept.erase(std::unique(kept.begin(), kept.end()), kept.end());
  a.rows = std::move(kept);
  return a;
}

auto allocation_to_csv(const AllocationMatrix& a) -> std::string {
  std::ostringstream os;
  const size_t cols = a.rows.empty() ? 0 : a.rows[0].size();
  for (size_t c = 0; c < cols; ++c) os << (c ? "," : "") << "vintage_" << c + 1;
  os << '\n';
  for (const auto& r : a.rows) {
    for (size_t c = 0; c < r.size(); ++c) os << (c ? "," : "") << 'V' << r[c];
    os << '\n';
  }
  return os.str();
}

}  // namespace tajima
