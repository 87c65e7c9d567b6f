#include "tajima/ism_data.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "tajima/counting.hpp"
#include "tajima/io.hpp"

namespace tajima {

auto IncidenceMatrix::column(int site) const -> std::vector<int> {
  std::vector<int> c(rows.size());
  for (size_t h = 0; h < rows.size(); ++h) c[h] = rows[h][site];
  return c;
}

namespace {

// Three-gamete test on two columns.
auto conflicting(const IncidenceMatrix& y1, int a, int b) -> bool {
  bool both = false, only_a = false, only_b = false;
  for (const auto& r : y1.rows) {
    both |= r[a] && r[b];
    only_a |= r[a] && !r[b];
    only_b |= !r[a] && r[b];
  }
  return both && only_a && only_b;
}

}  // namespace

auto check_ism(const IncidenceMatrix& y1) -> IsmReport {
  IsmReport rep;
  for (int a = 0; a < y1.z(); ++a)
    for (int b = a + 1; b < y1.z(); ++b)
      if (conflicting(y1, a, b)) rep.conflicts.emplace_back(a, b);
  rep.ok = rep.conflicts.empty();
  return rep;
}

auto remove_ism_conflicts(const IncidenceMatrix& y1) -> std::vector<int> {
  const int z = y1.z();
  std::vector<std::vector<int>> adj(z);
  for (auto [a, b] : check_ism(y1).conflicts) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  std::vector<char> removed(z, 0);
  std::vector<int> degree(z);
  for (int s = 0; s < z; ++s) degree[s] = static_cast<int>(adj[s].size());
  std::vector<int> out;
  for (;;) {
    int best = -1;
    for (int s = 0; s < z; ++s)
      if (!removed[s] && degree[s] > 0 && (best < 0 || degree[s] > degree[best])) best = s;
    if (best < 0) break;
    removed[best] = 1;
    out.push_back(best);
    for (int o : adj[best])
      if (!removed[o]) --degree[o];
    degree[best] = 0;
  }
  std::sort(out.begin(), out.end());
  return out;
}

auto PerfectPhylogeny::total_mutations() const -> int {
  int s = 0;
  for (const auto& v : nodes) s += v.edge_mutations;
  return s;
}

auto PerfectPhylogeny::leaf_sites(int leaf) const -> std::vector<int> {
  std::vector<int> out;
  for (int u = leaf; u >= 0; u = nodes[u].parent)
    out.insert(out.end(), nodes[u].sites.begin(), nodes[u].sites.end());
  std::sort(out.begin(), out.end());
  return out;
}

auto PerfectPhylogeny::effective() const -> PerfectPhylogeny {
  PerfectPhylogeny out = *this;
  const int original = size();
  for (int u = 0; u < original; ++u) {
    const PhyloNode v = out.nodes[u];
    if (!v.is_leaf() || v.edge_mutations > 0 || v.size <= 1 || v.parent < 0) continue;
    out.nodes[u].size = 1;
    out.nodes[u].group_counts.assign(schedule.m(), 0);
    out.nodes[u].group_counts[v.group] = 1;
    std::vector<int> extra;
    for (int c = 1; c < v.size; ++c) {
      PhyloNode copy = out.nodes[u];
      extra.push_back(out.size());
      out.nodes.push_back(copy);
    }
    auto& siblings = out.nodes[v.parent].children;
    auto pos = std::find(siblings.begin(), siblings.end(), u) - siblings.begin();
    siblings.insert(siblings.begin() + pos + 1, extra.begin(), extra.end());
  }
  return out;
}

auto build_perfect_phylogeny(const IncidenceMatrix& y1, const FrequencyMatrix& y2,
                             const SamplingSchedule& sched) -> PerfectPhylogeny {
  sched.validate();
  const int k = y1.k();
  const int z = y1.z();
  const int m = sched.m();
  if (k < 1) throw DataError("incidence matrix has no haplotypes");
  for (const auto& r : y1.rows)
    if (static_cast<int>(r.size()) != z) throw DataError("incidence rows have unequal length");
  if (static_cast<int>(y2.counts.size()) != k) throw DataError("Y1/Y2 haplotype count mismatch");
  std::vector<int> colsum(m, 0);
  for (int h = 0; h < k; ++h) {
    if (static_cast<int>(y2.counts[h].size()) != m)
      throw DataError("frequency matrix width differs from the number of sampling times");
    int rs = 0;
    for (int j = 0; j < m; ++j) {
      if (y2.counts[h][j] < 0) throw DataError("negative frequency");
      rs += y2.counts[h][j];
      colsum[j] += y2.counts[h][j];
    }
    if (rs < 1) throw DataError("haplotype with zero count");
  }
  if (colsum != sched.n) throw DataError("frequency column sums differ from the schedule");
  {
    std::set<std::vector<int>> distinct(y1.rows.begin(), y1.rows.end());
    if (static_cast<int>(distinct.size()) != k) throw DataError("duplicate haplotype rows");
  }
  auto rep = check_ism(y1);
  if (!rep.ok) {
    auto [a, b] = rep.conflicts.front();
    throw DataError("ISM violation between sites " + std::to_string(a) + " and " +
                    std::to_string(b));
  }

  // Clades: distinct columns, identical columns share one edge.
  std::map<std::vector<int>, std::vector<int>> clade_sites;
  for (int s = 0; s < z; ++s) {
    auto col = y1.column(s);
    int ones = std::accumulate(col.begin(), col.end(), 0);
    if (ones == 0) throw DataError("site " + std::to_string(s) + " is not polymorphic");
    if (ones == k) throw DataError("site " + std::to_string(s) + " is mutant in every sequence");
    clade_sites[col].push_back(s);
  }
  struct Clade {
    std::vector<int> members;
    std::vector<int> sites;
    int hap_count;
  };
  std::vector<Clade> clades;
  clades.push_back({std::vector<int>(k, 1), {}, k});  // root
  for (auto& [col, sites] : clade_sites)
    clades.push_back({col, sites, std::accumulate(col.begin(), col.end(), 0)});
  const int nc = static_cast<int>(clades.size());
  auto contains = [&](int a, int b) {
    for (int h = 0; h < k; ++h)
      if (clades[b].members[h] && !clades[a].members[h]) return false;
    return true;
  };
  std::vector<int> cparent(nc, -1);
  for (int c = 1; c < nc; ++c) {
    int best = 0;
    for (int d = 1; d < nc; ++d)
      if (d != c && clades[d].hap_count > clades[c].hap_count && contains(d, c) &&
          clades[d].hap_count < clades[best].hap_count)
        best = d;
    cparent[c] = best;
  }
  std::vector<int> home(k, 0);  // minimal clade containing each haplotype
  for (int h = 0; h < k; ++h)
    for (int c = 1; c < nc; ++c)
      if (clades[c].members[h] && clades[c].hap_count < clades[home[h]].hap_count) home[h] = c;

  // Intermediate tree, renumbered by preorder below.
  struct Tmp {
    int parent = -1;
    std::vector<int> children;
    std::vector<int> sites;
    int haplotype = -1;
    int group = -1;
    int size = 0;
    std::vector<int> gc;
  };
  std::vector<Tmp> tmp(nc);
  for (int c = 0; c < nc; ++c) {
    tmp[c].sites = clades[c].sites;
    tmp[c].parent = cparent[c];
    if (c > 0) tmp[cparent[c]].children.push_back(c);
  }
  auto add_leaf = [&](int parent, int h, int j) {
    Tmp t;
    t.parent = parent;
    t.haplotype = h;
    t.group = j;
    tmp.push_back(t);
    int id = static_cast<int>(tmp.size()) - 1;
    tmp[parent].children.push_back(id);
    return id;
  };
  for (int h = 0; h < k; ++h) {
    std::vector<int> groups;
    for (int j = 0; j < m; ++j)
      if (y2.counts[h][j] > 0) groups.push_back(j);
    const int c = home[h];
    if (c > 0 && clades[c].hap_count == 1 && groups.size() == 1) {
      tmp[c].haplotype = h;
      tmp[c].group = groups[0];
    } else {
      for (int j : groups) add_leaf(c, h, j);
    }
  }
  // Sizes and group counts bottom-up.
  std::vector<int> order;
  std::vector<int> stack{0};
  while (!stack.empty()) {
    int u = stack.back();
    stack.pop_back();
    order.push_back(u);
    for (int c : tmp[u].children) stack.push_back(c);
  }
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    auto& t = tmp[*it];
    t.gc.assign(m, 0);
    if (t.children.empty()) {
      if (t.haplotype < 0) throw DataError("internal error: unlabeled leaf");
      t.size = y2.counts[t.haplotype][t.group];
      t.gc[t.group] = t.size;
    } else {
      for (int c : t.children) {
        t.size += tmp[c].size;
        for (int j = 0; j < m; ++j) t.gc[j] += tmp[c].gc[j];
      }
    }
  }
  auto first_group = [&](int u) {
    for (int j = 0; j < m; ++j)
      if (tmp[u].gc[j] > 0) return j;
    return m;
  };
  auto min_hap = [&](int u) {
    int best = k;
    std::vector<int> st{u};
    while (!st.empty()) {
      int w = st.back();
      st.pop_back();
      if (tmp[w].haplotype >= 0) best = std::min(best, tmp[w].haplotype);
      for (int c : tmp[w].children) st.push_back(c);
    }
    return best;
  };
  for (auto& t : tmp) {
    std::sort(t.children.begin(), t.children.end(), [&](int a, int b) {
      auto key = [&](int u) {
        return std::make_tuple(-tmp[u].size, tmp[u].children.empty() ? 1 : 0, first_group(u),
                               min_hap(u));
      };
      return key(a) < key(b);
    });
  }

  PerfectPhylogeny out;
  out.schedule = sched;
  out.num_sites = z;
  std::vector<int> newid(tmp.size(), -1);
  std::vector<int> pre;
  stack = {0};
  while (!stack.empty()) {
    int u = stack.back();
    stack.pop_back();
    newid[u] = static_cast<int>(pre.size());
    pre.push_back(u);
    for (auto it = tmp[u].children.rbegin(); it != tmp[u].children.rend(); ++it)
      stack.push_back(*it);
  }
  out.nodes.resize(pre.size());
  for (size_t i = 0; i < pre.size(); ++i) {
    const auto& t = tmp[pre[i]];
    auto& v = out.nodes[i];
    v.parent = t.parent < 0 ? -1 : newid[t.parent];
    for (int c : t.children) v.children.push_back(newid[c]);
    v.sites = t.sites;
    v.edge_mutations = static_cast<int>(t.sites.size());
    v.size = t.size;
    v.group_counts = t.gc;
    if (t.children.empty()) {
      v.haplotype = t.haplotype;
      v.group = t.group;
    }
  }
  return out;
}

auto incidence_from_phylogeny(const PerfectPhylogeny& t)
    -> std::pair<IncidenceMatrix, FrequencyMatrix> {
  IncidenceMatrix y1;
  FrequencyMatrix y2;
  std::map<int, int> row_of_hap;
  for (int u = 0; u < t.size(); ++u) {
    const auto& v = t.nodes[u];
    if (!v.is_leaf()) continue;
    auto [it, fresh] = row_of_hap.emplace(v.haplotype, y1.k());
    if (fresh) {
      std::vector<int> row(t.num_sites, 0);
      for (int s : t.leaf_sites(u)) row[s] = 1;
      y1.rows.push_back(row);
      y1.haplotype_ids.push_back("h" + std::to_string(v.haplotype));
      y2.counts.emplace_back(t.schedule.m(), 0);
    }
    y2.counts[it->second][v.group] += v.size;
  }
  for (int s = 0; s < t.num_sites; ++s) y1.site_ids.push_back("s" + std::to_string(s));
  return {y1, y2};
}

auto compute_constraints(const PerfectPhylogeny& t) -> std::vector<int> {
  const auto& sched = t.schedule;
  const int m = sched.m();
  std::vector<int> c(m, 0);
  int before = 0;
  for (int i = 0; i < m; ++i) {
    c[i] = std::max(0, before - 1);
    before += sched.n[i];
  }
  const auto eff = t.effective();
  for (int i = 1; i < m; ++i) {
    std::vector<int> add = c;
    int target = c[i];
    for (int j = i; j < m; ++j) add[j] = target;
    while (!add_vector_feasible(eff, add)) {
      for (int j = i; j < m; ++j) --add[j];
      if (add[i] < c[i - 1]) throw DataError("no compatible topology for the data");
    }
    c[i] = add[i];
    for (int j = i + 1; j < m; ++j) c[j] = std::max(c[j], c[i]);
  }
  return c;
}

auto to_json(const PerfectPhylogeny& t) -> nlohmann::json {
  nlohmann::json nodes = nlohmann::json::array();
  for (int u = 0; u < t.size(); ++u) {
    const auto& v = t.nodes[u];
    nlohmann::json j{{"id", u},
                     {"parent", v.parent},
                     {"children", v.children},
                     {"edge_mutations", v.edge_mutations},
                     {"sites", v.sites},
                     {"size", v.size}};
    if (v.is_leaf()) j["leaf"] = {{"haplotype", v.haplotype}, {"group", v.group}};
    nodes.push_back(j);
  }
  return {{"schedule", to_json(t.schedule)}, {"num_sites", t.num_sites}, {"nodes", nodes}};
}

auto parse_fasta(const std::string& text) -> std::vector<SequenceRecord> {
  std::vector<SequenceRecord> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '>') {
      std::string id = line.substr(1);
      auto sp = id.find_first_of(" \t");
      if (sp != std::string::npos) id = id.substr(0, sp);
      out.push_back({id, ""});
    } else {
      if (out.empty()) throw DataError("FASTA sequence data before the first header");
      for (char ch : line)
        if (!std::isspace(static_cast<unsigned char>(ch)))
          out.back().seq += static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    }
  }
  return out;
}

auto parse_date(const std::string& s) -> double {
  int y = 0, mo = 0, d = 0;
  char c1 = 0, c2 = 0;
  std::istringstream in(s);
  if (s.size() >= 10 && s[4] == '-' && (in >> y >> c1 >> mo >> c2 >> d) && c1 == '-' &&
      c2 == '-') {
    if (mo < 1 || mo > 12 || d < 1 || d > 31) throw DataError("bad date: " + s);
    static const int cum[] = {0, 31, 59, 90, 120, 151, 181, 212, 243, 273, 304, 334};
    bool leap = (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
    int doy = cum[mo - 1] + d - 1 + (leap && mo > 2 ? 1 : 0);
    return y + doy / (leap ? 366.0 : 365.0);
  }
  try {
    size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw DataError("bad date: " + s);
    return v;
  } catch (const std::logic_error&) {
    throw DataError("bad date: " + s);
  }
}

auto parse_metadata_csv(const std::string& text) -> std::vector<std::pair<std::string, double>> {
  std::vector<std::pair<std::string, double>> out;
  auto rows = parse_csv(text);
  for (size_t r = 0; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() < 2) throw DataError("metadata row needs sequence_id,date");
    if (r == 0 && row[1] == "date") continue;
    out.emplace_back(row[0], parse_date(row[1]));
  }
  return out;
}

auto ingest_alignment(const std::vector<SequenceRecord>& seqs, const std::string& ancestral,
                      const std::vector<std::pair<std::string, double>>& dates,
                      const IngestOptions& opt) -> IngestResult {
  IngestResult res;
  if (seqs.size() < 2) throw DataError("need at least two sequences");
  const size_t len = seqs[0].seq.size();
  for (const auto& r : seqs)
    if (r.seq.size() != len) throw DataError("sequence " + r.id + " has a different length");
  std::map<std::string, double> date_of(dates.begin(), dates.end());
  for (const auto& r : seqs)
    if (!date_of.count(r.id)) throw DataError("no sampling date for sequence " + r.id);

  auto is_base = [](char c) { return c == 'A' || c == 'C' || c == 'G' || c == 'T'; };
  std::string anc;
  if (opt.use_majority || ancestral.empty()) {
    res.warnings.push_back("ancestral state taken by majority rule");
    anc.assign(len, 'N');
    for (size_t p = 0; p < len; ++p) {
      std::map<char, int> tally;
      for (const auto& r : seqs)
        if (is_base(r.seq[p])) ++tally[r.seq[p]];
      int best = -1;
      for (auto [ch, cnt] : tally)
        if (cnt > best) best = cnt, anc[p] = ch;
    }
  } else {
    anc = ancestral;
    for (auto& ch : anc) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    if (anc.size() != len) throw DataError("ancestral reference length differs from alignment");
  }

  std::vector<int> columns;  // alignment positions kept as candidate sites
  for (size_t p = 0; p < len; ++p) {
    bool ambiguous = !is_base(anc[p]);
    std::set<char> derived;
    for (const auto& r : seqs) {
      if (!is_base(r.seq[p])) ambiguous = true;
      else if (r.seq[p] != anc[p]) derived.insert(r.seq[p]);
    }
    if (ambiguous) {
      res.ambiguous_sites.push_back(static_cast<int>(p));
      continue;
    }
    if (derived.empty()) continue;
    if (derived.size() > 1) {
      res.dropped_sites.push_back(static_cast<int>(p));
      continue;
    }
    size_t mutants = 0;
    for (const auto& r : seqs) mutants += r.seq[p] != anc[p];
    if (mutants == seqs.size()) {
      res.dropped_sites.push_back(static_cast<int>(p));
      continue;
    }
    columns.push_back(static_cast<int>(p));
  }

  IncidenceMatrix full;
  for (const auto& r : seqs) {
    std::vector<int> row;
    for (int p : columns) row.push_back(r.seq[p] != anc[p] ? 1 : 0);
    full.rows.push_back(row);
  }
  auto removed = remove_ism_conflicts(full);
  std::vector<int> keep;
  for (size_t c = 0; c < columns.size(); ++c)
    if (!std::binary_search(removed.begin(), removed.end(), static_cast<int>(c)))
      keep.push_back(static_cast<int>(c));
  for (int c : removed) res.dropped_sites.push_back(columns[c]);
  std::sort(res.dropped_sites.begin(), res.dropped_sites.end());

  // Sampling groups: most recent date is time 0.
  double latest = -std::numeric_limits<double>::infinity();
  for (const auto& r : seqs) latest = std::max(latest, date_of[r.id]);
  std::vector<double> times;
  for (const auto& r : seqs) times.push_back((latest - date_of[r.id]) * opt.units_per_year);
  std::vector<double> distinct = times;
  std::sort(distinct.begin(), distinct.end());
  std::vector<double> groups;
  for (double t : distinct)
    if (groups.empty() || t - groups.back() > 1e-9) groups.push_back(t);
  auto group_of = [&](double t) {
    for (size_t j = 0; j < groups.size(); ++j)
      if (std::abs(t - groups[j]) <= 1e-9) return static_cast<int>(j);
    return -1;
  };
  groups[0] = 0.0;
  res.schedule.s = groups;
  res.schedule.n.assign(groups.size(), 0);

  std::map<std::vector<int>, int> hap;
  for (size_t i = 0; i < seqs.size(); ++i) {
    std::vector<int> row;
    for (int c : keep) row.push_back(full.rows[i][c]);
    auto [it, fresh] = hap.emplace(row, res.y1.k());
    if (fresh) {
      res.y1.rows.push_back(row);
      res.y1.haplotype_ids.push_back("h" + std::to_string(res.y1.k()));
      res.y2.counts.emplace_back(groups.size(), 0);
    }
    int j = group_of(times[i]);
    res.y2.counts[it->second][j] += 1;
    res.schedule.n[j] += 1;
  }
  for (int c : keep) res.y1.site_ids.push_back(std::to_string(columns[c] + 1));
  return res;
}

auto incidence_to_csv(const IncidenceMatrix& y1) -> std::string {
  std::ostringstream os;
  os << "haplotype";
  for (int s = 0; s < y1.z(); ++s)
    os << ',' << (s < static_cast<int>(y1.site_ids.size()) ? y1.site_ids[s] : std::to_string(s));
  os << '\n';
  for (int h = 0; h < y1.k(); ++h) {
    os << (h < static_cast<int>(y1.haplotype_ids.size()) ? y1.haplotype_ids[h]
                                                         : "h" + std::to_string(h));
    for (int v : y1.rows[h]) os << ',' << v;
    os << '\n';
  }
  return os.str();
}

auto incidence_from_csv(const std::string& text) -> IncidenceMatrix {
  auto rows = parse_csv(text);
  if (rows.empty()) throw DataError("empty incidence CSV");
  IncidenceMatrix y1;
  y1.site_ids.assign(rows[0].begin() + 1, rows[0].end());
  for (size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != rows[0].size()) throw DataError("incidence CSV row width mismatch");
    y1.haplotype_ids.push_back(rows[r][0]);
    std::vector<int> row;
    for (size_t c = 1; c < rows[r].size(); ++c) {
      if (rows[r][c] != "0" && rows[r][c] != "1") throw DataError("incidence entries must be 0/1");
      row.push_back(rows[r][c] == "1");
    }
    y1.rows.push_back(row);
  }
  return y1;
}

auto frequency_to_csv(const FrequencyMatrix& y2, const SamplingSchedule& sched,
                      const std::vector<std::string>& haplotype_ids) -> std::string {
  std::ostringstream os;
  os << "haplotype";
  for (double s : sched.s) os << ',' << format_double(s);
  os << '\n';
  for (size_t h = 0; h < y2.counts.size(); ++h) {
    os << (h < haplotype_ids.size() ? haplotype_ids[h] : "h" + std::to_string(h));
    for (int c : y2.counts[h]) os << ',' << c;
    os << '\n';
  }
  return os.str();
}

auto frequency_from_csv(const std::string& text) -> std::pair<FrequencyMatrix, SamplingSchedule> {
  auto rows = parse_csv(text);
  if (rows.empty()) throw DataError("empty frequency CSV");
  SamplingSchedule sched;
  for (size_t c = 1; c < rows[0].size(); ++c) {
    try {
      sched.s.push_back(std::stod(rows[0][c]));
    } catch (const std::logic_error&) {
      throw DataError("frequency CSV header must hold sampling times");
    }
  }
  sched.n.assign(sched.s.size(), 0);
  FrequencyMatrix y2;
  for (size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != rows[0].size()) throw DataError("frequency CSV row width mismatch");
    std::vector<int> counts;
    for (size_t c = 1; c < rows[r].size(); ++c) {
      int v = 0;
      try {
        v = std::stoi(rows[r][c]);
      } catch (const std::logic_error&) {
        throw DataError("frequency entries must be integers");
      }
      counts.push_back(v);
      sched.n[c - 1] += v;
    }
    y2.counts.push_back(counts);
  }
  return {y2, sched};
}

}  // namespace tajima
