#include "tajima/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <limits>
#include <unordered_map>

namespace tajima {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

auto log_add(double a, double b) -> double {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

// Log of the sum over distinct assignments of mutation counts to branches of
// prod (mu l)^e / e!.
auto log_matching_sum(const std::map<int, int>& items, const std::vector<double>& lengths,
                      double mu) -> double {
  std::vector<int> vals, cnts;
  for (auto [e, c] : items) {
    vals.push_back(e);
    cnts.push_back(c);
  }
  const int d = static_cast<int>(vals.size());
  if (d == 0) return 0.0;
  auto term = [&](int e, double l) {
    if (e == 0) return 0.0;
    double x = mu * l;
    if (x <= 0.0) return kNegInf;
    return e * std::log(x) - std::lgamma(e + 1.0);
  };
  if (d == 1) {
    double s = 0.0;
    for (double l : lengths) s += term(vals[0], l);
    return s;
  }
  // Mixed-radix state: used counts per distinct value.
  std::vector<long> radix(d + 1, 1);
  for (int k = 0; k < d; ++k) radix[k + 1] = radix[k] * (cnts[k] + 1);
  std::unordered_map<long, double> cur{{0, 0.0}};
  for (double l : lengths) {
    std::unordered_map<long, double> next;
    for (auto [code, lv] : cur) {
      for (int k = 0; k < d; ++k) {
        int used = static_cast<int>((code / radix[k]) % (cnts[k] + 1));
        if (used == cnts[k]) continue;
        double v = lv + term(vals[k], l);
        auto [it, fresh] = next.emplace(code + radix[k], v);
        if (!fresh) it->second = log_add(it->second, v);
      }
    }
    cur = std::move(next);
  }
  double out = kNegInf;
  for (auto [code, lv] : cur) out = log_add(out, lv);
  return out;
}

struct RegionKey {
  int v;
  std::vector<int> region;
  auto operator==(const RegionKey&) const -> bool = default;
};

struct RegionHash {
  auto operator()(const RegionKey& k) const -> std::size_t {
    std::size_t h = std::hash<int>()(k.v);
    for (int x : k.region) h = h * 1000003u ^ std::hash<int>()(x);
    return h;
  }
};

auto region_logfactor(const PerfectPhylogeny& t, int v, const std::vector<int>& region,
                      const RankedGenealogy& g, double mu) -> double {
  const auto& node = t.nodes[v];
  const int m = g.schedule().m();
  const int top = region.back();
  const double l = g.branch_length(g.node_of_vintage(top));
  double total = 0.0;
  std::vector<std::vector<double>> slots(m);
  for (int i : region) {
    const int u = g.node_of_vintage(i);
    total += g.branch_length(u);
    for (int c : g.children(u))
      if (g.is_leaf(c)) {
        double bl = g.branch_length(c);
        total += bl;
        slots[g.leaf_group(c)].push_back(bl);
      }
  }
  double lf = -mu * total;
  if (node.edge_mutations > 0) {
    if (mu * l <= 0.0) return kNegInf;
    lf += node.edge_mutations * std::log(mu * l) - std::lgamma(node.edge_mutations + 1.0);
  }
  if (node.is_leaf()) return lf;
  std::vector<std::map<int, int>> part(m);
  for (int c : node.children) {
    const auto& w = t.nodes[c];
    if (w.size == 1) part[w.group][w.edge_mutations] += 1;
  }
  for (int j = 0; j < m; ++j) {
    int k = 0;
    for (auto [e, cnt] : part[j]) k += cnt;
    if (k != static_cast<int>(slots[j].size())) return kNegInf;
    lf += log_matching_sum(part[j], slots[j], mu);
  }
  return lf;
}

auto loglik_rows(const PerfectPhylogeny& eff, const AllocationMatrix& a, const RankedGenealogy& g,
                 double mu, double log_aut) -> double {
  if (a.empty()) return kNegInf;
  const int nn = eff.size();
  std::unordered_map<RegionKey, double, RegionHash> cache;
  std::vector<std::vector<int>> regions(nn);
  double out = kNegInf;
  for (const auto& row : a.rows) {
    for (auto& r : regions) r.clear();
    for (size_t i = 0; i < row.size(); ++i) regions[row[i]].push_back(static_cast<int>(i) + 1);
    double s = 0.0;
    for (int v = 0; v < nn && s != kNegInf; ++v) {
      if (regions[v].empty()) continue;
      RegionKey key{v, regions[v]};
      auto it = cache.find(key);
      if (it == cache.end()) it = cache.emplace(key, region_logfactor(eff, v, regions[v], g, mu)).first;
      s += it->second;
    }
    out = log_add(out, s);
  }
  return out - log_aut;
}

}  // namespace

auto log_automorphisms(const PerfectPhylogeny& eff) -> double {
  double out = 0.0;
  std::function<std::string(int)> form = [&](int x) {
    const auto& nd = eff.nodes[x];
    std::string s = "(" + std::to_string(nd.edge_mutations) + ":" + std::to_string(nd.size);
    if (nd.is_leaf()) return s + "g" + std::to_string(nd.group) + ")";
    std::vector<std::string> parts;
    std::map<std::string, int> repeats;
    for (int c : nd.children) {
      parts.push_back(form(c));
      if (eff.nodes[c].size > 1) ++repeats[parts.back()];
    }
    for (auto [f, k] : repeats) out += std::lgamma(k + 1.0);
    std::sort(parts.begin(), parts.end());
    for (const auto& p : parts) s += p;
    return s + ")";
  };
  form(0);
  return out;
}

auto matching_multiplicity(const std::vector<std::map<int, int>>& partition) -> double {
  double lg = 0.0;
  for (const auto& grp : partition) {
    int k = 0;
    for (auto [e, c] : grp) {
      k += c;
      lg -= std::lgamma(c + 1.0);
    }
    lg += std::lgamma(k + 1.0);
  }
  return std::round(std::exp(lg));
}

auto node_logfactor(const PerfectPhylogeny& t, int v, const std::vector<int>& row,
                    const RankedGenealogy& g, double mu) -> double {
  std::vector<int> region;
  for (size_t i = 0; i < row.size(); ++i)
    if (row[i] == v) region.push_back(static_cast<int>(i) + 1);
  if (region.empty()) throw std::invalid_argument("node is not present in the allocation row");
  return region_logfactor(t, v, region, g, mu);
}

auto tajima_loglik(const PerfectPhylogeny& t, const AllocationMatrix& a, const RankedGenealogy& g,
                   double mu) -> double {
  const auto eff = t.effective();
  return loglik_rows(eff, a, g, mu, log_automorphisms(eff));
}

auto tajima_loglik(const PerfectPhylogeny& t, const RankedGenealogy& g, double mu, std::size_t cap)
    -> double {
  const auto eff = t.effective();
  return loglik_rows(eff, enumerate_allocations(eff, g, cap), g, mu, log_automorphisms(eff));
}

TajimaLikelihood::TajimaLikelihood(const PerfectPhylogeny& t, std::size_t cap)
    : eff_(t.effective()), log_aut_(log_automorphisms(eff_)), cap_(cap) {}

void TajimaLikelihood::set_topology(const RankedGenealogy& g) {
  a_ = enumerate_allocations(eff_, g, cap_);
}

auto TajimaLikelihood::loglik(const RankedGenealogy& g, double mu) const -> double {
  return loglik_rows(eff_, a_, g, mu, log_aut_);
}

auto TajimaLikelihood::allocate(const RankedGenealogy& g) const -> AllocationMatrix {
  return enumerate_allocations(eff_, g, cap_);
}

auto TajimaLikelihood::loglik(const AllocationMatrix& a, const RankedGenealogy& g, double mu) const
    -> double {
  return loglik_rows(eff_, a, g, mu, log_aut_);
}

auto kingman_loglik(const PerfectPhylogeny& t, const RankedGenealogy& g,
                    const std::vector<int>& leaf_labels, double mu) -> double {
  const auto eff = t.effective();
  const int n = g.n();
  if (static_cast<int>(leaf_labels.size()) != n)
    throw std::invalid_argument("one label per genealogy leaf required");
  std::vector<int> used(eff.size(), 0);
  for (int leaf = 0; leaf < n; ++leaf) {
    int x = leaf_labels[leaf];
    if (x < 0 || x >= eff.size() || !eff.nodes[x].is_leaf())
      throw std::invalid_argument("label is not a phylogeny leaf");
    if (eff.nodes[x].group != g.leaf_group(leaf))
      throw std::invalid_argument("label sampling group differs from the leaf group");
    ++used[x];
  }
  for (int x = 0; x < eff.size(); ++x)
    if (eff.nodes[x].is_leaf() && used[x] != eff.nodes[x].size)
      throw std::invalid_argument("labels do not cover the phylogeny leaves");

  // Phylogeny ancestors of every labeled leaf.
  std::vector<std::vector<char>> under(eff.size(), std::vector<char>(n, 0));
  for (int leaf = 0; leaf < n; ++leaf)
    for (int x = leaf_labels[leaf]; x >= 0; x = eff.nodes[x].parent) under[x][leaf] = 1;

  double ll = -mu * g.tree_length();
  for (int x = 1; x < eff.size(); ++x) {
    const int e = eff.nodes[x].edge_mutations;
    if (e == 0) continue;
    int first = -1, count = 0;
    for (int leaf = 0; leaf < n; ++leaf)
      if (under[x][leaf]) {
        if (first < 0) first = leaf;
        ++count;
      }
    // Climb from one member until the clade holds all members.
    int u = first;
    int held = 1;
    while (held < count) {
      u = g.parent(u);
      held = g.leaf_count(g.vintage_of_node(u));
    }
    if (held != count) return kNegInf;
    // Verify the clade holds only members.
    std::vector<int> stack{u};
    while (!stack.empty()) {
      int w = stack.back();
      stack.pop_back();
      if (g.is_leaf(w)) {
        if (!under[x][w]) return kNegInf;
        continue;
      }
      stack.push_back(g.children(w)[0]);
      stack.push_back(g.children(w)[1]);
    }
    double l = g.branch_length(u);
    if (mu * l <= 0.0) return kNegInf;
    ll += e * std::log(mu * l) - std::lgamma(e + 1.0);
  }
  return ll;
}

}  // namespace tajima
