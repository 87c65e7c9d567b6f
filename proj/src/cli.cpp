#include "tajima/cli.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "tajima/coalescent_prior.hpp"
#include "tajima/counting.hpp"
#include "tajima/diagnostics.hpp"
#include "tajima/io.hpp"
#include "tajima/ism_data.hpp"
#include "tajima/mcmc.hpp"
#include "tajima/simulator.hpp"

namespace tajima {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

template <class T>
auto parse_list(const std::string& text) -> std::vector<T> {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    size_t used = 0;
    if constexpr (std::is_same_v<T, int>)
      out.push_back(std::stoi(item, &used));
    else
      out.push_back(std::stod(item, &used));
    if (used != item.size()) throw std::invalid_argument("bad list element: " + item);
  }
  return out;
}

auto with_suffix(const fs::path& dir, const std::string& stem, const std::string& ext, int chain,
                 int chains) -> std::string {
  std::string name = stem;
  if (chains > 1) name += "_chain" + std::to_string(chain + 1);
  return (dir / (name + ext)).string();
}

auto median_of(std::vector<double> v) -> double {
  std::sort(v.begin(), v.end());
  const size_t k = v.size();
  return k % 2 ? v[k / 2] : 0.5 * (v[k / 2 - 1] + v[k / 2]);
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string scenario;
  std::string n = "8,3,3";
  std::string s = "0,0.4,0.6";
  double mu = 12.0;
  int loci = 1;
  std::uint64_t seed = 1;
  std::string out;
};

auto cmd_simulate(const SimulateArgs& a, std::ostream& out) -> int {
  SamplingSchedule sched{parse_list<double>(a.s), parse_list<int>(a.n)};
  sched.validate();
  if (!(a.mu >= 0.0)) throw std::invalid_argument("mu must be non-negative");
  if (a.loci < 1) throw std::invalid_argument("loci must be at least 1");
  const auto traj = Trajectory::scenario(a.scenario);
  fs::create_directories(a.out);
  json cfg{{"scenario", a.scenario}, {"n", sched.n}, {"s", sched.s}, {"mu", a.mu}, {"loci", a.loci}};
  const auto hash = fnv1a64(cfg.dump());
  const auto header = metadata_line("simulate", hash, a.seed);
  json summary{{"metadata", {{"command", "simulate"}, {"seed", a.seed}, {"config_hash", hex64(hash)}}},
               {"config", cfg},
               {"loci", json::array()}};
  double t2 = 0.0;
  for (int l = 0; l < a.loci; ++l) {
    Rng rng(derive_seed(a.seed, static_cast<std::uint64_t>(l)));
    auto d = simulate_dataset(sched, traj, a.mu, rng);
    const std::string sfx = a.loci > 1 ? "_" + std::to_string(l + 1) : "";
    write_file((fs::path(a.out) / ("y1" + sfx + ".csv")).string(), header + incidence_to_csv(d.y1));
    write_file((fs::path(a.out) / ("y2" + sfx + ".csv")).string(),
               header + frequency_to_csv(d.y2, sched, d.y1.haplotype_ids));
    json gj = to_json(d.g);
    gj["metadata"] = {{"command", "simulate"}, {"seed", a.seed}, {"config_hash", hex64(hash)}};
    write_file((fs::path(a.out) / ("genealogy" + sfx + ".json")).string(), gj.dump(2) + "\n");
    summary["loci"].push_back({{"M", d.M}, {"tree_length", d.tree_length},
                               {"tmrca", d.g.height()}, {"haplotypes", d.y1.k()}});
    if (l == 0) t2 = d.g.height();
  }
  std::ostringstream truth;
  truth << header << "time,ne\n";
  for (double t : evaluation_grid(t2 / 0.6, 200))
    truth << format_double(t) << ',' << format_double(traj.evaluate(t)) << '\n';
  write_file((fs::path(a.out) / "truth.csv").string(), truth.str());
  write_file((fs::path(a.out) / "simulation.json").string(), summary.dump(2) + "\n");
  out << summary.dump(2) << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- infer

struct InferArgs {
  std::string config;
  std::vector<std::string> y1, y2;
  std::string fasta, meta, ancestral;
  bool majority = false;
  double units_per_year = 1.0;
  std::string out;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int chains = 1;
  long iterations = 0;
  double eval_end = 0.0;
};

auto load_loci(const InferArgs& a, std::ostream& err) -> std::vector<LocusData> {
  std::vector<LocusData> loci;
  if (!a.fasta.empty()) {
    if (a.meta.empty()) throw std::invalid_argument("--fasta requires --meta");
    if (a.ancestral.empty() && !a.majority)
      throw std::invalid_argument("--fasta requires --ancestral or --majority");
    std::string anc;
    if (!a.ancestral.empty()) {
      auto recs = parse_fasta(read_file(a.ancestral));
      if (recs.empty()) throw DataError("ancestral FASTA is empty");
      anc = recs.front().seq;
    }
    IngestOptions opt;
    opt.use_majority = a.majority;
    opt.units_per_year = a.units_per_year;
    auto res = ingest_alignment(parse_fasta(read_file(a.fasta)), anc,
                                parse_metadata_csv(read_file(a.meta)), opt);
    for (const auto& w : res.warnings) err << "warning: " << w << "\n";
    loci.push_back(LocusData::from_data(res.y1, res.y2, res.schedule, a.fasta));
  }
  if (a.y1.size() != a.y2.size()) throw std::invalid_argument("--y1 and --y2 must be paired");
  for (size_t l = 0; l < a.y1.size(); ++l) {
    auto y1 = incidence_from_csv(read_file(a.y1[l]));
    auto [y2, sched] = frequency_from_csv(read_file(a.y2[l]));
    auto rep = check_ism(y1);
    if (!rep.ok) throw DataError("locus " + a.y1[l] + " violates the infinite sites model");
    loci.push_back(LocusData::from_data(y1, y2, sched, a.y1[l]));
  }
  if (loci.empty()) throw std::invalid_argument("no data given (use --y1/--y2 or --fasta)");
  return loci;
}

auto cmd_infer(const InferArgs& a, std::ostream& out, std::ostream& err) -> int {
  McmcConfig cfg;
  if (!a.config.empty()) {
    json j;
    try {
      j = json::parse(read_file(a.config));
    } catch (const json::parse_error& e) {
      throw std::invalid_argument(std::string("config is not valid JSON: ") + e.what());
    }
    cfg = config_from_json(j);
  }
  if (a.seed_set) cfg.seed = a.seed;
  if (a.iterations > 0) {
    cfg.iterations = a.iterations;
    if (cfg.burnin >= cfg.iterations) cfg.burnin = cfg.iterations / 4;
  }
  cfg.validate();
  if (a.chains < 1) throw std::invalid_argument("--chains must be at least 1");
  auto loci = load_loci(a, err);
  fs::create_directories(a.out);
  const auto hash = fnv1a64(to_json(cfg).dump());

  struct ChainOutput {
    std::exception_ptr error;
    ChainResult result;
  };
  std::vector<ChainOutput> outputs(a.chains);
  auto work = [&](int k) {
    try {
      McmcConfig c = cfg;
      c.seed = a.chains > 1 ? derive_seed(cfg.seed, static_cast<std::uint64_t>(k)) : cfg.seed;
      Sampler sampler(loci, c);
      std::ofstream nd(with_suffix(a.out, "samples", ".ndjson", k, a.chains));
      json meta{{"command", "infer"}, {"seed", c.seed}, {"config_hash", hex64(hash)},
                {"chain", k + 1},     {"config", to_json(c)},
                {"grid", sampler.state().field.boundaries}};
      nd << json{{"metadata", meta}}.dump() << "\n";
      auto res = sampler.run([&](const IterationRecord& r) { nd << to_json(r).dump() << "\n"; });
      outputs[k].result = std::move(res);
    } catch (...) {
      outputs[k].error = std::current_exception();
    }
  };
  std::vector<std::thread> threads;
  for (int k = 1; k < a.chains; ++k) threads.emplace_back(work, k);
  work(0);
  for (auto& t : threads) t.join();
  for (auto& o : outputs)
    if (o.error) std::rethrow_exception(o.error);

  json report = json::array();
  for (int k = 0; k < a.chains; ++k) {
    const auto& res = outputs[k].result;
    if (res.samples.empty()) throw std::invalid_argument("no samples stored; check burnin and thin");
    std::vector<double> heights;
    for (const auto& r : res.samples) heights.push_back(r.tree_height[0]);
    const double end = a.eval_end > 0.0 ? a.eval_end : 0.6 * median_of(heights);
    auto times = evaluation_grid(end / 0.6);
    auto summary = summarize_posterior(res.samples, res.grid, times);
    const auto seed = a.chains > 1 ? derive_seed(cfg.seed, static_cast<std::uint64_t>(k)) : cfg.seed;
    const auto header = metadata_line("infer", hash, seed);
    write_file(with_suffix(a.out, "summary", ".csv", k, a.chains), header + summary_to_csv(summary));
    write_file(with_suffix(a.out, "trajectory", ".svg", k, a.chains),
               render_svg(summary, {}, "posterior N_e"));
    json run{{"metadata", {{"command", "infer"}, {"seed", seed}, {"config_hash", hex64(hash)}}},
             {"samples", res.samples.size()},
             {"field_accept_rate", res.field_accept_rate},
             {"time_accept_rate", res.time_accept_rate},
             {"topology_accept_rate", res.topology_accept_rate},
             {"mu_accept_rate", res.mu_accept_rate},
             {"max_energy_error", res.max_energy_error},
             {"beyond_grid_fraction", res.beyond_grid_fraction}};
    if (res.beyond_grid_fraction > 0.05)
      err << "warning: " << res.beyond_grid_fraction * 100.0
          << "% of the tree length lies beyond the grid\n";
    write_file(with_suffix(a.out, "run", ".json", k, a.chains), run.dump(2) + "\n");
    report.push_back(run);
  }
  out << report.dump(2) << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- count

struct CountArgs {
  std::string y1, y2, resolution = "tajima", add, times, out;
  int N = 5000;
  std::uint64_t seed = 1;
};

auto cmd_count(const CountArgs& a, std::ostream& out) -> int {
  auto y1 = incidence_from_csv(read_file(a.y1));
  auto [y2, sched] = frequency_from_csv(read_file(a.y2));
  if (!check_ism(y1).ok) throw DataError("data violate the infinite sites model");
  const auto t = build_perfect_phylogeny(y1, y2, sched);
  const auto res = parse_resolution(a.resolution);
  const auto c = compute_constraints(t);
  if (a.N < 1) throw std::invalid_argument("--N must be positive");
  Rng rng(a.seed);
  CountEstimate est;
  json j{{"resolution", resolution_name(res)}, {"N", a.N}, {"c", c}};
  if (!a.times.empty()) {
    auto times = parse_list<double>(a.times);
    est = estimate_count(t, times, res, a.N, rng);
    j["times"] = times;
  } else {
    auto add = a.add.empty() ? c : parse_list<int>(a.add);
    if (static_cast<int>(add.size()) != sched.m())
      throw std::invalid_argument("--add needs one entry per sampling time");
    est = estimate_count(t, add, res, a.N, rng);
    j["add"] = add;
  }
  const auto hash = fnv1a64(j.dump());
  j["mean"] = est.mean;
  j["stderr"] = est.stderr_;
  j["log_mean"] = est.log_mean;
  j["cv"] = est.cv;
  j["metadata"] = {{"command", "count"}, {"seed", a.seed}, {"config_hash", hex64(hash)}};
  if (!a.out.empty()) write_file(a.out, j.dump(2) + "\n");
  out << j.dump(2) << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- validate-likelihood

struct ValidateArgs {
  std::string preset = "supp-a";
  long draws = 1000000;
  int replicates = 4;
  std::string mutations = "1,2,4,6";
  long floor = 0;
  std::string resolution = "both";
  std::uint64_t seed = 1;
  std::string out;
};

auto cmd_validate(const ValidateArgs& a, std::ostream& out) -> int {
  validation_preset(a.preset);
  if (a.draws < 1 || a.replicates < 1) throw std::invalid_argument("draws and replicates must be positive");
  const auto Ms = parse_list<int>(a.mutations);
  for (int M : Ms)
    if (M < 0) throw std::invalid_argument("mutation counts must be non-negative");
  const long floor = a.floor > 0 ? a.floor : std::max<long>(1, std::lround(1e-5 * a.draws));
  std::vector<Resolution> rs;
  if (a.resolution == "both")
    rs = {Resolution::Tajima, Resolution::Kingman};
  else
    rs = {parse_resolution(a.resolution)};
  json cfg{{"preset", a.preset}, {"draws", a.draws}, {"replicates", a.replicates}, {"M", Ms}, {"floor", floor}};
  const auto hash = fnv1a64(cfg.dump());
  json j{{"metadata", {{"command", "validate-likelihood"}, {"seed", a.seed}, {"config_hash", hex64(hash)}}},
         {"config", cfg},
         {"results", json::array()}};
  for (auto r : rs) {
    auto v = validate_likelihood(a.preset, r, a.draws, a.replicates, Ms, floor, a.seed);
    json runs = json::array();
    for (size_t k = 0; k < v.runs.size(); ++k)
      runs.push_back({{"M", v.mutation_counts[k]}, {"distinct", v.runs[k].distinct},
                      {"excluded", v.runs[k].excluded}, {"mean_ratio", v.runs[k].mean_ratio},
                      {"var_ratio", v.runs[k].var_ratio}, {"retained_mass", v.runs[k].retained_mass}});
    j["results"].push_back({{"resolution", resolution_name(r)}, {"mean_ratio", v.mean_ratio},
                            {"mean_variance", v.mean_variance},
                            {"excluded_fraction", v.excluded_fraction}, {"runs", runs}});
  }
  if (!a.out.empty()) write_file(a.out, j.dump(2) + "\n");
  out << j.dump(2) << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- summarize

struct SummarizeArgs {
  std::string samples, truth, out;
  double t2 = 0.0;
  int k = 100;
};

auto cmd_summarize(const SummarizeArgs& a, std::ostream& out) -> int {
  std::ifstream in(a.samples);
  if (!in) throw std::invalid_argument("cannot open " + a.samples);
  std::string line;
  GridField grid;
  json meta;
  std::vector<IterationRecord> samples;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto j = json::parse(line);
    if (j.contains("metadata")) {
      meta = j["metadata"];
      grid.boundaries = meta.at("grid").get<std::vector<double>>();
      continue;
    }
    IterationRecord r;
    r.iteration = j.at("iteration").get<long>();
    r.log_posterior = j.at("log_posterior").get<double>();
    r.theta = j.at("theta").get<std::vector<double>>();
    r.tau = j.at("tau").get<double>();
    r.mu = j.at("mu").get<double>();
    for (const auto& l : j.at("per_locus")) {
      r.tree_height.push_back(l.at("tree_height").get<double>());
      r.n_accepts.push_back(l.at("n_accepts").get<long>());
    }
    samples.push_back(std::move(r));
  }
  if (grid.boundaries.empty()) throw DataError("samples file lacks the metadata line");
  if (samples.empty()) throw DataError("samples file holds no samples");
  grid.theta = samples.front().theta;
  grid.validate();
  std::vector<double> heights;
  for (const auto& r : samples) heights.push_back(r.tree_height[0]);
  const double t2 = a.t2 > 0.0 ? a.t2 : median_of(heights);
  auto times = evaluation_grid(t2, a.k);
  auto summary = summarize_posterior(samples, grid, times);

  json metrics{{"samples", samples.size()}, {"t2", t2}};
  std::vector<double> truth;
  if (!a.truth.empty()) {
    auto traj = Trajectory::scenario(a.truth);
    for (double t : times) truth.push_back(traj.evaluate(t));
    auto acc = accuracy_metrics(summary, truth);
    metrics["SRE"] = acc.sre;
    metrics["MRW"] = acc.mrw;
    metrics["ENV"] = acc.env;
  }
  if (samples.size() >= 10) {
    double mean_ess = 0.0;
    std::vector<double> series(samples.size());
    for (double t : times) {
      const int b = grid.cell_of(t);
      for (size_t s = 0; s < samples.size(); ++s) series[s] = samples[s].theta[b];
      mean_ess += ess(series).ess;
    }
    metrics["ess_log_ne"] = mean_ess / times.size();
    for (size_t s = 0; s < samples.size(); ++s) series[s] = samples[s].tree_height[0];
    auto e = ess(series);
    metrics["ess_tmrca"] = e.ess;
    metrics["ess_tmrca_flag"] = e.constant || e.clipped;
  }
  const auto hash = fnv1a64(metrics.dump());
  const std::uint64_t seed = meta.value("seed", std::uint64_t{0});
  metrics["metadata"] = {{"command", "summarize"}, {"seed", seed}, {"config_hash", hex64(hash)},
                         {"source", a.samples}};
  if (!a.out.empty()) {
    fs::create_directories(a.out);
    const auto header = metadata_line("summarize", hash, seed);
    write_file((fs::path(a.out) / "summary.csv").string(), header + summary_to_csv(summary));
    write_file((fs::path(a.out) / "metrics.json").string(), metrics.dump(2) + "\n");
    write_file((fs::path(a.out) / "trajectory.svg").string(), render_svg(summary, truth, "posterior N_e"));
  }
  out << metrics.dump(2) << "\n";
  return kExitOk;
}

}  // namespace

auto metadata_line(const std::string& command, std::uint64_t config_hash, std::uint64_t seed)
    -> std::string {
  return "# tajima " + command + " seed=" + std::to_string(seed) + " config_hash=" +
         hex64(config_hash) + "\n";
}

auto render_svg(const TrajectorySummary& s, const std::vector<double>& truth,
                const std::string& title) -> std::string {
  const double W = 640, H = 400, ml = 70, mr = 20, mt = 30, mb = 50;
  double ymin = std::numeric_limits<double>::infinity(), ymax = 0.0;
  auto widen = [&](double v) {
    if (v > 0.0 && std::isfinite(v)) {
      ymin = std::min(ymin, v);
      ymax = std::max(ymax, v);
    }
  };
  for (size_t i = 0; i < s.time.size(); ++i) {
    widen(s.q025[i]);
    widen(s.q975[i]);
    widen(s.median[i]);
  }
  for (double v : truth) widen(v);
  if (!(ymax > 0.0)) ymin = 0.1, ymax = 10.0;
  double ly0 = std::floor(std::log10(ymin)), ly1 = std::ceil(std::log10(ymax));
  if (ly1 <= ly0) ly1 = ly0 + 1;
  const double x0 = s.time.empty() ? 0.0 : s.time.front();
  double x1 = s.time.empty() ? 1.0 : s.time.back();
  if (x1 <= x0) x1 = x0 + 1.0;
  auto px = [&](double t) { return ml + (t - x0) / (x1 - x0) * (W - ml - mr); };
  auto py = [&](double v) {
    double l = std::log10(std::max(v, 1e-300));
    return mt + (ly1 - l) / (ly1 - ly0) * (H - mt - mb);
  };
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\" viewBox=\"0 0 " << W << ' ' << H << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!title.empty())
    os << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << title
       << "</text>\n";
  os << "<line x1=\"" << ml << "\" y1=\"" << H - mb << "\" x2=\"" << W - mr << "\" y2=\"" << H - mb
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << H - mb
     << "\" stroke=\"black\"/>\n";
  for (int e = static_cast<int>(ly0); e <= static_cast<int>(ly1); ++e) {
    const double y = py(std::pow(10.0, e));
    os << "<line x1=\"" << ml - 5 << "\" y1=\"" << y << "\" x2=\"" << ml << "\" y2=\"" << y
       << "\" stroke=\"black\"/><text x=\"" << ml - 8 << "\" y=\"" << y + 4
       << "\" text-anchor=\"end\" font-size=\"11\">1e" << e << "</text>\n";
  }
  for (int k = 0; k <= 4; ++k) {
    const double t = x0 + (x1 - x0) * k / 4.0;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", t);
    os << "<text x=\"" << px(t) << "\" y=\"" << H - mb + 16 << "\" text-anchor=\"middle\" font-size=\"11\">"
       << buf << "</text>\n";
  }
  os << "<text x=\"" << (ml + W - mr) / 2 << "\" y=\"" << H - 10
     << "\" text-anchor=\"middle\" font-size=\"12\">time before present</text>\n";
  if (!s.time.empty()) {
    os << "<polygon fill=\"#9ecae1\" fill-opacity=\"0.6\" stroke=\"none\" points=\"";
    for (size_t i = 0; i < s.time.size(); ++i) os << px(s.time[i]) << ',' << py(s.q975[i]) << ' ';
    for (size_t i = s.time.size(); i-- > 0;) os << px(s.time[i]) << ',' << py(s.q025[i]) << ' ';
    os << "\"/>\n<polyline fill=\"none\" stroke=\"black\" stroke-width=\"2\" points=\"";
    for (size_t i = 0; i < s.time.size(); ++i) os << px(s.time[i]) << ',' << py(s.median[i]) << ' ';
    os << "\"/>\n";
  }
  if (truth.size() == s.time.size() && !truth.empty()) {
    os << "<polyline fill=\"none\" stroke=\"#d62728\" stroke-dasharray=\"6,4\" points=\"";
    for (size_t i = 0; i < s.time.size(); ++i) os << px(s.time[i]) << ',' << py(truth[i]) << ' ';
    os << "\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

auto run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) -> int {
  CLI::App app{"Tajima coalescent inference for heterochronous data", "tajima"};
  app.require_subcommand(1);

  SimulateArgs sa;
  auto* sim = app.add_subcommand("simulate", "simulate a genealogy and ISM data");
  sim->add_option("--scenario", sa.scenario, "bottleneck, drop or exp")->required();
  sim->add_option("--n", sa.n, "samples per sampling time, comma separated");
  sim->add_option("--s", sa.s, "sampling times, comma separated");
  sim->add_option("--mu", sa.mu, "mutation rate");
  sim->add_option("--loci", sa.loci, "independent loci");
  sim->add_option("--seed", sa.seed);
  sim->add_option("--out", sa.out, "output directory")->required();

  InferArgs ia;
  auto* inf = app.add_subcommand("infer", "posterior sampling of N_e");
  inf->add_option("--config", ia.config, "config JSON");
  inf->add_option("--y1", ia.y1, "incidence CSV (repeat per locus)");
  inf->add_option("--y2", ia.y2, "frequency CSV (repeat per locus)");
  inf->add_option("--fasta", ia.fasta, "alignment FASTA");
  inf->add_option("--meta", ia.meta, "sequence_id,date CSV");
  inf->add_option("--ancestral", ia.ancestral, "ancestral sequence FASTA");
  inf->add_flag("--majority", ia.majority, "ancestral state by majority rule");
  inf->add_option("--units-per-year", ia.units_per_year);
  inf->add_option("--out", ia.out, "output directory")->required();
  auto* seed_opt = inf->add_option("--seed", ia.seed);
  inf->add_option("--chains", ia.chains);
  inf->add_option("--iterations", ia.iterations, "override the configured iterations");
  inf->add_option("--eval-end", ia.eval_end, "end of the summary time grid");

  CountArgs ca;
  auto* cnt = app.add_subcommand("count", "estimate the number of compatible topologies");
  cnt->add_option("--y1", ca.y1)->required();
  cnt->add_option("--y2", ca.y2)->required();
  cnt->add_option("--resolution", ca.resolution, "tajima or kingman");
  cnt->add_option("--N", ca.N, "importance samples");
  cnt->add_option("--add", ca.add, "events before each sampling time (default: the constraint vector)");
  cnt->add_option("--times", ca.times, "coalescent times, comma separated");
  cnt->add_option("--seed", ca.seed);
  cnt->add_option("--out", ca.out);

  ValidateArgs va;
  auto* val = app.add_subcommand("validate-likelihood", "compare likelihoods with simulated frequencies");
  val->add_option("--preset", va.preset, "supp-a, supp-b or supp-c");
  val->add_option("--draws", va.draws);
  val->add_option("--replicates", va.replicates);
  val->add_option("--M", va.mutations, "mutation counts, comma separated");
  val->add_option("--floor", va.floor, "minimum count to retain a dataset (default 1e-5 x draws)");
  val->add_option("--resolution", va.resolution, "tajima, kingman or both");
  val->add_option("--seed", va.seed);
  val->add_option("--out", va.out);

  SummarizeArgs ma;
  auto* sum = app.add_subcommand("summarize", "posterior summary and accuracy metrics");
  sum->add_option("--samples", ma.samples)->required();
  sum->add_option("--truth", ma.truth, "true scenario name");
  sum->add_option("--t2", ma.t2, "true TMRCA; the grid ends at 0.6 t2");
  sum->add_option("--k", ma.k, "grid points");
  sum->add_option("--out", ma.out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  ia.seed_set = seed_opt->count() > 0;

  try {
    if (*sim) return cmd_simulate(sa, out);
    if (*inf) return cmd_infer(ia, out, err);
    if (*cnt) return cmd_count(ca, out);
    if (*val) return cmd_validate(va, out);
    if (*sum) return cmd_summarize(ma, out);
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const InvalidGenealogy& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const json::exception& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  }
  return kExitUsage;
}

}  // namespace tajima
