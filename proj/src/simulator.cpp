#include "tajima/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <unordered_map>

#include "tajima/coalescent_prior.hpp"
#include "tajima/likelihood.hpp"

namespace tajima {

auto log_poisson(int k, double lambda) -> double {
  if (lambda <= 0.0) return k == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
  return k * std::log(lambda) - lambda - std::lgamma(k + 1.0);
}

auto place_mutations(const RankedGenealogy& g, int M, Rng& rng) -> std::vector<int> {
  std::vector<double> cum;
  std::vector<int> nodes;
  double acc = 0.0;
  for (int u = 0; u < g.num_nodes(); ++u) {
    double bl = g.branch_length(u);
    if (bl <= 0.0) continue;
    acc += bl;
    cum.push_back(acc);
    nodes.push_back(u);
  }
  std::vector<int> out;
  out.reserve(M);
  for (int k = 0; k < M; ++k) {
    double x = uniform01(rng) * acc;
    auto it = std::upper_bound(cum.begin(), cum.end(), x);
    if (it == cum.end()) --it;
    out.push_back(nodes[it - cum.begin()]);
  }
  return out;
}

namespace {

auto leaves_below(const RankedGenealogy& g, int u) -> std::vector<int> {
  std::vector<int> out;
  std::vector<int> stack{u};
  while (!stack.empty()) {
    int w = stack.back();
    stack.pop_back();
    if (g.is_leaf(w)) {
      out.push_back(w);
      continue;
    }
    stack.push_back(g.children(w)[0]);
    stack.push_back(g.children(w)[1]);
  }
  return out;
}

auto leaf_mask(const RankedGenealogy& g, int u) -> std::uint64_t {
  std::uint64_t m = 0;
  for (int l : leaves_below(g, u)) m |= std::uint64_t{1} << l;
  return m;
}

}  // namespace

auto dataset_from_mutations(const RankedGenealogy& g, std::vector<int> mutation_nodes)
    -> SimulatedDataset {
  SimulatedDataset d;
  d.g = g;
  d.M = static_cast<int>(mutation_nodes.size());
  d.tree_length = g.tree_length();
  std::sort(mutation_nodes.begin(), mutation_nodes.end());
  d.mutation_nodes = mutation_nodes;
  const int n = g.n();
  const int z = d.M;
  std::vector<std::vector<int>> rows(n, std::vector<int>(z, 0));
  for (int s = 0; s < z; ++s)
    for (int l : leaves_below(g, mutation_nodes[s])) rows[l][s] = 1;
  std::map<std::vector<int>, int> hap;
  d.leaf_haplotype.assign(n, -1);
  for (int l = 0; l < n; ++l) {
    auto [it, fresh] = hap.emplace(rows[l], d.y1.k());
    if (fresh) {
      d.y1.rows.push_back(rows[l]);
      d.y1.haplotype_ids.push_back("h" + std::to_string(d.y1.k()));
      d.y2.counts.emplace_back(g.schedule().m(), 0);
    }
    d.leaf_haplotype[l] = it->second;
    d.y2.counts[it->second][g.leaf_group(l)] += 1;
  }
  for (int s = 0; s < z; ++s) d.y1.site_ids.push_back("s" + std::to_string(s + 1));
  return d;
}

auto simulate_dataset(const SamplingSchedule& sched, const Trajectory& traj, double mu, Rng& rng)
    -> SimulatedDataset {
  auto g = sample_genealogy(sched, traj, rng);
  const double L = g.tree_length();
  int M = 0;
  if (mu > 0.0) M = static_cast<int>(std::poisson_distribution<long>(mu * L)(rng));
  return dataset_from_mutations(g, place_mutations(g, M, rng));
}

auto phylogeny_with_labels(const SimulatedDataset& d)
    -> std::pair<PerfectPhylogeny, std::vector<int>> {
  auto t = build_perfect_phylogeny(d.y1, d.y2, d.g.schedule()).effective();
  std::map<std::pair<int, int>, std::vector<int>> slots;
  for (int u = 0; u < t.size(); ++u)
    if (t.nodes[u].is_leaf())
      for (int c = 0; c < t.nodes[u].size; ++c)
        slots[{t.nodes[u].haplotype, t.nodes[u].group}].push_back(u);
  std::vector<int> labels(d.g.n());
  for (int l = 0; l < d.g.n(); ++l) {
    auto& v = slots[{d.leaf_haplotype[l], d.g.leaf_group(l)}];
    labels[l] = v.back();
    v.pop_back();
  }
  return {t, labels};
}

auto unlabeled_key(const RankedGenealogy& g, const std::vector<int>& mutation_nodes)
    -> std::string {
  const int n = g.n();
  if (n > 64) throw std::invalid_argument("dataset keys support at most 64 samples");
  std::map<std::uint64_t, int> clades;
  for (int u : mutation_nodes) ++clades[leaf_mask(g, u)];
  const std::uint64_t all = n == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << n) - 1;
  std::vector<std::uint64_t> masks{all};
  std::vector<int> mult{0};
  for (auto [mk, c] : clades) {
    masks.push_back(mk);
    mult.push_back(c);
  }
  const int nc = static_cast<int>(masks.size());
  auto pc = [](std::uint64_t x) { return __builtin_popcountll(x); };
  std::vector<int> parent(nc, -1);
  for (int c = 1; c < nc; ++c) {
    int best = 0;
    for (int d = 1; d < nc; ++d)
      if (d != c && (masks[d] & masks[c]) == masks[c] && pc(masks[d]) > pc(masks[c]) &&
          pc(masks[d]) < pc(masks[best]))
        best = d;
    parent[c] = best;
  }
  const int m = g.schedule().m();
  std::vector<std::vector<int>> direct(nc, std::vector<int>(m, 0));
  for (int l = 0; l < n; ++l) {
    int home = 0;
    for (int c = 1; c < nc; ++c)
      if ((masks[c] >> l & 1) && pc(masks[c]) < pc(masks[home])) home = c;
    direct[home][g.leaf_group(l)] += 1;
  }
  std::vector<std::vector<int>> kids(nc);
  for (int c = 1; c < nc; ++c) kids[parent[c]].push_back(c);
  // Children have fewer leaves, so process by ascending popcount.
  std::vector<int> order(nc);
  for (int c = 0; c < nc; ++c) order[c] = c;
  std::sort(order.begin(), order.end(), [&](int a, int b) { return pc(masks[a]) < pc(masks[b]); });
  std::vector<std::string> repr(nc);
  for (int c : order) {
    std::vector<std::string> parts;
    for (int k : kids[c]) parts.push_back(repr[k]);
    std::sort(parts.begin(), parts.end());
    std::ostringstream os;
    os << '(' << mult[c] << ':';
    for (int j = 0; j < m; ++j) os << direct[c][j] << (j + 1 < m ? "," : "");
    for (const auto& p : parts) os << p;
    os << ')';
    repr[c] = os.str();
  }
  return repr[0];
}

auto labeled_key(const RankedGenealogy& g, const std::vector<int>& mutation_nodes) -> std::string {
  if (g.n() > 64) throw std::invalid_argument("dataset keys support at most 64 samples");
  std::vector<std::uint64_t> masks;
  for (int u : mutation_nodes) masks.push_back(leaf_mask(g, u));
  std::sort(masks.begin(), masks.end());
  std::ostringstream os;
  for (auto mk : masks) os << std::hex << mk << ';';
  return os.str();
}

auto frequency_oracle(const RankedGenealogy& g, int M, long draws, Resolution res, long floor,
                      Rng& rng) -> OracleReport {
  OracleReport rep;
  rep.resolution = res;
  rep.draws = draws;
  struct Seen {
    long count = 0;
    std::vector<int> nodes;
  };
  std::unordered_map<std::string, Seen> seen;
  // Leaf masks per node are reused across draws.
  std::vector<std::uint64_t> mask(g.num_nodes());
  for (int u = 0; u < g.num_nodes(); ++u) mask[u] = leaf_mask(g, u);
  for (long d = 0; d < draws; ++d) {
    auto nodes = place_mutations(g, M, rng);
    std::string key;
    if (res == Resolution::Kingman) {
      std::vector<std::uint64_t> ms;
      for (int u : nodes) ms.push_back(mask[u]);
      std::sort(ms.begin(), ms.end());
      key.assign(reinterpret_cast<const char*>(ms.data()), ms.size() * sizeof(std::uint64_t));
    } else {
      key = unlabeled_key(g, nodes);
    }
    auto& s = seen[key];
    if (s.count++ == 0) s.nodes = std::move(nodes);
  }
  rep.distinct = static_cast<long>(seen.size());
  const double mu = 1.0;
  const double lp = log_poisson(M, mu * g.tree_length());
  double sum = 0.0, sum2 = 0.0;
  for (auto& [key, s] : seen) {
    if (s.count < floor) {
      ++rep.excluded;
      continue;
    }
    auto data = dataset_from_mutations(g, s.nodes);
    double ll;
    if (res == Resolution::Kingman) {
      auto [t, labels] = phylogeny_with_labels(data);
      ll = kingman_loglik(t, g, labels, mu);
    } else {
      auto t = build_perfect_phylogeny(data.y1, data.y2, g.schedule());
      ll = tajima_loglik(t, g, mu);
    }
    OracleEntry e;
    e.key = res == Resolution::Kingman ? labeled_key(g, s.nodes) : key;
    e.count = s.count;
    e.frequency = static_cast<double>(s.count) / draws;
    e.likelihood = std::exp(ll - lp);
    e.ratio = e.likelihood / e.frequency;
    sum += e.ratio;
    sum2 += e.ratio * e.ratio;
    rep.retained_mass += e.likelihood;
    rep.retained.push_back(std::move(e));
  }
  const double k = static_cast<double>(rep.retained.size());
  if (k > 0) {
    rep.mean_ratio = sum / k;
    rep.var_ratio = k > 1 ? std::max(0.0, (sum2 - k * rep.mean_ratio * rep.mean_ratio) / (k - 1)) : 0.0;
  }
  std::sort(rep.retained.begin(), rep.retained.end(),
            [](const OracleEntry& a, const OracleEntry& b) { return a.key < b.key; });
  return rep;
}

auto validation_preset(const std::string& name) -> SamplingSchedule {
  SamplingSchedule s;
  if (name == "supp-a")
    s = {{0.0, 0.2}, {3, 2}};
  else if (name == "supp-b")
    s = {{0.0, 0.15, 0.3}, {2, 2, 2}};
  else if (name == "supp-c")
    s = {{0.0, 0.1, 0.2, 0.3, 0.4}, {2, 2, 2, 2, 2}};
  else
    throw std::invalid_argument("unknown preset: " + name);
  return s;
}

auto validate_likelihood(const std::string& preset, Resolution res, long draws, int replicates,
                         const std::vector<int>& mutation_counts, long floor, std::uint64_t seed)
    -> ValidationSummary {
  const auto sched = validation_preset(preset);
  ValidationSummary out;
  out.preset = preset;
  out.resolution = res;
  out.draws = draws;
  out.floor = floor;
  const auto traj = Trajectory::constant(1.0);
  long excluded = 0, distinct = 0;
  for (int M : mutation_counts)
    for (int r = 0; r < replicates; ++r) {
      Rng grng(derive_seed(seed, 1000u * static_cast<unsigned>(M) + r));
      auto g = sample_genealogy(sched, traj, grng);
      Rng rng(derive_seed(seed ^ 0x5bd1e995u, 1000u * static_cast<unsigned>(M) + r));
      auto rep = frequency_oracle(g, M, draws, res, floor, rng);
      out.mean_ratio += rep.mean_ratio;
      out.mean_variance += rep.var_ratio;
      excluded += rep.excluded;
      distinct += rep.distinct;
      out.mutation_counts.push_back(M);
      out.runs.push_back(std::move(rep));
    }
  const double k = static_cast<double>(out.runs.size());
  if (k > 0) {
    out.mean_ratio /= k;
    out.mean_variance /= k;
  }
  out.excluded_fraction = distinct > 0 ? static_cast<double>(excluded) / distinct : 0.0;
  return out;
}

}  // namespace tajima
