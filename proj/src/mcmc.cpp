#include "tajima/mcmc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

#include "tajima/counting.hpp"

namespace tajima {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

auto harmonic(int n) -> double {
  double a = 0.0;
  for (int i = 1; i < n; ++i) a += 1.0 / i;
  return a;
}

}  // namespace

auto MuPrior::logpdf(double mu) const -> double {
  if (!(mu > 0.0)) return kNegInf;
  if (kind == Kind::Uniform) return mu >= a && mu <= b ? -std::log(b - a) : kNegInf;
  return a * std::log(b) - std::lgamma(a) + (a - 1.0) * std::log(mu) - b * mu;
}

void McmcConfig::validate() const {
  if (version != 1) throw std::invalid_argument("unsupported config version");
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  if (Z < 1) throw std::invalid_argument("Z must be at least 1");
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
  if (iterations < 1) throw std::invalid_argument("iterations must be positive");
  if (burnin < 0 || burnin >= iterations) throw std::invalid_argument("burnin must be below iterations");
  if (thin < 1) throw std::invalid_argument("thin must be at least 1");
  if (B < 1) throw std::invalid_argument("B must be at least 1");
  if (!(alpha > 0.0) || !(beta > 0.0)) throw std::invalid_argument("alpha and beta must be positive");
  if (leapfrog_steps < 1) throw std::invalid_argument("leapfrog_steps must be at least 1");
  if (!(mu > 0.0)) throw std::invalid_argument("mu must be positive");
  if (!(mu_step > 0.0)) throw std::invalid_argument("mu_step must be positive");
  if (mu_prior.kind == MuPrior::Kind::Uniform && !(mu_prior.a < mu_prior.b))
    throw std::invalid_argument("uniform mu prior needs a < b");
  if (mu_prior.kind == MuPrior::Kind::Gamma && (!(mu_prior.a > 0.0) || !(mu_prior.b > 0.0)))
    throw std::invalid_argument("gamma mu prior needs positive shape and rate");
  if (horizon < 0.0) throw std::invalid_argument("horizon must be non-negative");
  if (initializer != "sis" && initializer != "upgma")
    throw std::invalid_argument("initializer must be sis or upgma");
  if (field_update != "joint" && field_update != "gibbs")
    throw std::invalid_argument("field_update must be joint or gibbs");
  if (fixed_field) fixed_field->validate();
}

auto to_json(const McmcConfig& c) -> nlohmann::json {
  nlohmann::json j{{"version", c.version},
                   {"epsilon", c.epsilon},
                   {"Z", c.Z},
                   {"sigma", c.sigma},
                   {"iterations", c.iterations},
                   {"burnin", c.burnin},
                   {"thin", c.thin},
                   {"seed", c.seed},
                   {"B", c.B},
                   {"alpha", c.alpha},
                   {"beta", c.beta},
                   {"leapfrog_steps", c.leapfrog_steps},
                   {"mu", c.mu},
                   {"estimate_mu", c.estimate_mu},
                   {"mu_prior",
                    {{"kind", c.mu_prior.kind == MuPrior::Kind::Gamma ? "gamma" : "uniform"},
                     {"a", c.mu_prior.a},
                     {"b", c.mu_prior.b}}},
                   {"mu_step", c.mu_step},
                   {"horizon", c.horizon},
                   {"initializer", c.initializer},
                   {"field_update", c.field_update},
                   {"prior_only", c.prior_only},
                   {"allocation_cap", c.allocation_cap}};
  if (c.fixed_field)
    j["fixed_field"] = {{"boundaries", c.fixed_field->boundaries}, {"theta", c.fixed_field->theta}};
  return j;
}

auto config_from_json(const nlohmann::json& j) -> McmcConfig {
  McmcConfig c;
  static const std::vector<std::string> known{
      "version", "epsilon", "Z", "sigma", "iterations", "burnin", "thin", "seed", "B", "alpha",
      "beta", "leapfrog_steps", "mu", "estimate_mu", "mu_prior", "mu_step", "horizon",
      "initializer", "field_update", "prior_only", "allocation_cap", "fixed_field"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find(known.begin(), known.end(), it.key()) == known.end())
      throw std::invalid_argument("unknown config field: " + it.key());
  if (!j.contains("version")) throw std::invalid_argument("config needs a version field");
  c.version = j.at("version").get<int>();
  auto get = [&](const char* k, auto& v) {
    if (j.contains(k)) v = j.at(k).get<std::decay_t<decltype(v)>>();
  };
  get("epsilon", c.epsilon);
  get("Z", c.Z);
  get("sigma", c.sigma);
  get("iterations", c.iterations);
  get("burnin", c.burnin);
  get("thin", c.thin);
  get("seed", c.seed);
  get("B", c.B);
  get("alpha", c.alpha);
  get("beta", c.beta);
  get("leapfrog_steps", c.leapfrog_steps);
  get("mu", c.mu);
  get("estimate_mu", c.estimate_mu);
  get("mu_step", c.mu_step);
  get("horizon", c.horizon);
  get("initializer", c.initializer);
  get("field_update", c.field_update);
  get("prior_only", c.prior_only);
  get("allocation_cap", c.allocation_cap);
  if (j.contains("mu_prior")) {
    const auto& p = j.at("mu_prior");
    auto kind = p.value("kind", std::string("gamma"));
    if (kind == "gamma")
      c.mu_prior.kind = MuPrior::Kind::Gamma;
    else if (kind == "uniform")
      c.mu_prior.kind = MuPrior::Kind::Uniform;
    else
      throw std::invalid_argument("mu_prior kind must be gamma or uniform");
    c.mu_prior.a = p.value("a", c.mu_prior.a);
    c.mu_prior.b = p.value("b", c.mu_prior.b);
  }
  if (j.contains("fixed_field")) {
    GridField f;
    f.boundaries = j.at("fixed_field").at("boundaries").get<std::vector<double>>();
    f.theta = j.at("fixed_field").at("theta").get<std::vector<double>>();
    c.fixed_field = f;
  }
  c.validate();
  return c;
}

auto LocusData::from_data(const IncidenceMatrix& y1, const FrequencyMatrix& y2,
                          const SamplingSchedule& sched, std::string name) -> LocusData {
  LocusData d;
  d.name = std::move(name);
  d.tree = build_perfect_phylogeny(y1, y2, sched);
  d.c = compute_constraints(d.tree);
  return d;
}

// ---------------------------------------------------------------- field

auto FieldPrior::build(const GridField& grid) -> FieldPrior {
  const int B = grid.cells();
  FieldPrior p;
  p.Q = Eigen::MatrixXd::Zero(B, B);
  std::vector<double> mid(B);
  for (int b = 0; b < B; ++b) mid[b] = 0.5 * (grid.boundaries[b] + grid.boundaries[b + 1]);
  for (int b = 0; b + 1 < B; ++b) {
    double w = 1.0 / (mid[b + 1] - mid[b]);
    p.Q(b, b) += w;
    p.Q(b + 1, b + 1) += w;
    p.Q(b, b + 1) -= w;
    p.Q(b + 1, b) -= w;
  }
  p.Q(0, 0) += 0.01;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(p.Q);
  p.eigenvalues = es.eigenvalues().cwiseMax(0.0);
  p.eigenvectors = es.eigenvectors();
  return p;
}

namespace {

auto coalescent_part(const Eigen::VectorXd& theta, const std::vector<GridStats>& stats) -> double {
  double s = 0.0;
  for (const auto& st : stats)
    for (int b = 0; b < theta.size(); ++b)
      s -= st.count[b] * theta[b] + st.weight[b] * std::exp(-theta[b]);
  return s;
}

auto coalescent_gradient(const Eigen::VectorXd& theta, const std::vector<GridStats>& stats)
    -> Eigen::VectorXd {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(theta.size());
  for (const auto& st : stats)
    for (int b = 0; b < theta.size(); ++b) g[b] += -st.count[b] + st.weight[b] * std::exp(-theta[b]);
  for (int b = 0; b < theta.size(); ++b)
    if (!std::isfinite(g[b]))
      throw std::runtime_error("non-finite field gradient at cell " + std::to_string(b));
  return g;
}

}  // namespace

auto field_log_posterior(const Eigen::VectorXd& theta, const std::vector<GridStats>& stats,
                         const FieldPrior& prior, double tau) -> double {
  return coalescent_part(theta, stats) - 0.5 * tau * theta.dot(prior.Q * theta);
}

auto field_gradient(const Eigen::VectorXd& theta, const std::vector<GridStats>& stats,
                    const FieldPrior& prior, double tau) -> Eigen::VectorXd {
  return coalescent_gradient(theta, stats) - tau * (prior.Q * theta);
}

// ---------------------------------------------------------------- times

auto time_lower_bound(const std::vector<double>& times, const SamplingSchedule& sched,
                      const std::vector<int>& c, int i) -> double {
  const int n1 = static_cast<int>(times.size());
  const double dt = times[i - 1] - (i >= 2 ? times[i - 2] : 0.0);
  double lo = 0.0;
  for (int j = 0; j < sched.m(); ++j) {
    if (c[j] >= n1 || i > c[j] + 1) continue;
    lo = std::max(lo, sched.s[j] - (times[c[j]] - dt));
  }
  return lo;
}

auto propose_times(const std::vector<double>& times, const SamplingSchedule& sched,
                   const std::vector<int>& c, int Z, double sigma, Rng& rng) -> TimeProposal {
  const int n1 = static_cast<int>(times.size());
  TimeProposal p;
  p.times = times;
  if (n1 == 0) return p;
  const int k = uniform_int(rng, 1, std::min(Z, n1));
  std::vector<int> idx(n1);
  std::iota(idx.begin(), idx.end(), 1);
  for (int a = 0; a < k; ++a) std::swap(idx[a], idx[uniform_int(rng, a, n1 - 1)]);
  idx.resize(k);
  // Sequential updates; the reverse path visits the same indices in reverse
  // order and sees the same bounds.
  for (int i : idx) {
    const double dt = p.times[i - 1] - (i >= 2 ? p.times[i - 2] : 0.0);
    const double lo = time_lower_bound(p.times, sched, c, i);
    const double nd = truncated_normal(rng, dt, sigma * dt, lo);
    p.log_hastings += truncated_normal_logpdf(dt, nd, sigma * nd, lo) -
                      truncated_normal_logpdf(nd, dt, sigma * dt, lo);
    const double shift = nd - dt;
    for (int r = i - 1; r < n1; ++r) p.times[r] += shift;
  }
  p.moved = idx;
  return p;
}

// ---------------------------------------------------------------- topology

namespace {

struct Operand {
  bool vintage;
  int id;
};

auto operands(const CoalescentEvent& e) -> std::array<Operand, 2> {
  switch (e.kind) {
    case EventKind::SingletonSameGroup:
    case EventKind::SingletonCrossGroup:
      return {Operand{false, e.x}, Operand{false, e.y}};
    case EventKind::SingletonVintage:
      return {Operand{false, e.x}, Operand{true, e.y}};
    case EventKind::VintageVintage:
      break;
  }
  return {Operand{true, e.x}, Operand{true, e.y}};
}

auto make_event(Operand a, Operand b) -> CoalescentEvent {
  if (!a.vintage && !b.vintage)
    return a.id == b.id ? CoalescentEvent::same(a.id)
                        : CoalescentEvent::cross(std::min(a.id, b.id), std::max(a.id, b.id));
  if (a.vintage && b.vintage) return CoalescentEvent::vintages(std::min(a.id, b.id), std::max(a.id, b.id));
  if (a.vintage) std::swap(a, b);
  return CoalescentEvent::single_vintage(a.id, b.id);
}

auto relabel(const CoalescentEvent& e, int v1, int v2) -> CoalescentEvent {
  auto ops = operands(e);
  for (auto& o : ops)
    if (o.vintage) {
      if (o.id == v1)
        o.id = v2;
      else if (o.id == v2)
        o.id = v1;
    }
  return make_event(ops[0], ops[1]);
}

auto neighbors_of(const std::vector<CoalescentEvent>& ev)
    -> std::map<std::vector<CoalescentEvent>, double> {
  std::map<std::vector<CoalescentEvent>, double> out;
  const int n1 = static_cast<int>(ev.size());
  if (n1 < 2) return out;
  const double pi = 1.0 / (n1 - 1);
  for (int i = 1; i < n1; ++i) {
    // Events of vintages i and i + 1 sit at positions i - 1 and i.
    const auto lower = ev[i - 1];
    const auto upper = ev[i];
    auto up = operands(upper);
    int child_pos = -1;
    for (int k = 0; k < 2; ++k)
      if (up[k].vintage && up[k].id == i) child_pos = k;
    if (child_pos < 0) {
      auto next = ev;
      next[i - 1] = upper;
      next[i] = lower;
      for (int r = i + 1; r < n1; ++r) next[r] = relabel(ev[r], i, i + 1);
      out[next] += pi;
      continue;
    }
    const Operand x = up[1 - child_pos];
    auto lo = operands(lower);
    for (int k = 0; k < 2; ++k) {
      auto next = ev;
      next[i - 1] = make_event(x, lo[1 - k]);
      next[i] = make_event(Operand{true, i}, lo[k]);
      out[next] += 0.5 * pi;
    }
  }
  return out;
}

}  // namespace

auto topology_neighbors(const RankedGenealogy& g)
    -> std::vector<std::pair<std::vector<CoalescentEvent>, double>> {
  auto m = neighbors_of(g.events());
  return {m.begin(), m.end()};
}

auto propose_topology(const RankedGenealogy& g, Rng& rng) -> TopologyProposal {
  TopologyProposal p;
  p.events = g.events();
  auto fwd = neighbors_of(g.events());
  if (fwd.empty()) return p;
  double u = uniform01(rng);
  auto chosen = fwd.begin();
  for (auto it = fwd.begin(); it != fwd.end(); ++it) {
    chosen = it;
    u -= it->second;
    if (u < 0.0) break;
  }
  p.events = chosen->first;
  if (first_invalid_rank(g.schedule(), g.times(), p.events) != 0) {
    p.valid = false;
    return p;
  }
  auto rev = neighbors_of(p.events);
  auto back = rev.find(g.events());
  if (back == rev.end()) throw std::logic_error("topology move is not reversible");
  p.log_hastings = std::log(back->second) - std::log(chosen->second);
  return p;
}

// ---------------------------------------------------------------- initialization

auto initial_genealogy(const LocusData& d, const Trajectory& traj, Rng& rng) -> RankedGenealogy {
  const auto& sched = d.schedule();
  const int n1 = sched.total() - 1;
  auto tp = sample_coalescent_times(sched, traj, rng);
  auto prior_add = events_before_sampling(sched, tp);
  std::vector<int> add(sched.m());
  bool changed = false;
  for (int j = 0; j < sched.m(); ++j) {
    add[j] = std::min(prior_add[j], d.c[j]);
    changed = changed || add[j] != prior_add[j];
  }
  if (!add_vector_feasible(d.tree, add)) {
    std::fill(add.begin(), add.end(), 0);
    changed = true;
  }
  std::vector<double> times = tp;
  if (changed) {
    times.clear();
    for (int j = 1; j < sched.m(); ++j) {
      const int k = add[j] - add[j - 1];
      for (int r = 1; r <= k; ++r)
        times.push_back(sched.s[j - 1] + (sched.s[j] - sched.s[j - 1]) * r / (k + 1.0));
    }
    const double last = sched.s.back();
    const int rest = n1 - static_cast<int>(times.size());
    const double h = std::max(tp.back() - last, 1e-6 * (1.0 + last)) / rest;
    for (int r = 1; r <= rest; ++r) times.push_back(last + h * r);
  }
  auto ts = sample_compatible_topology(d.tree, add, Resolution::Kingman, rng);
  if (!ts.compatible) throw std::runtime_error("initialization failure: no compatible topology");
  return RankedGenealogy(sched, times, ts.events);
}

auto serial_upgma_genealogy(const LocusData& d, double mu) -> RankedGenealogy {
  const auto eff = d.tree.effective();
  const auto& sched = d.schedule();
  struct Cluster {
    bool vintage;
    int id;  // group for a single sample, vintage otherwise
    std::vector<int> members;
    double top_sample;  // latest sampling time among members
  };
  std::vector<std::vector<int>> sites;
  std::vector<int> leaf_of;
  std::vector<Cluster> cl;
  for (int x = 0; x < eff.size(); ++x) {
    if (!eff.nodes[x].is_leaf()) continue;
    auto ls = eff.leaf_sites(x);
    for (int c = 0; c < eff.nodes[x].size; ++c) {
      const int idx = static_cast<int>(sites.size());
      sites.push_back(ls);
      leaf_of.push_back(x);
      const int grp = eff.nodes[x].group;
      cl.push_back({false, grp, {idx}, sched.s[grp]});
    }
  }
  const int n = static_cast<int>(sites.size());
  // in_clade[x][i]: sample i lies below node x.
  std::vector<std::vector<char>> in_clade(eff.size(), std::vector<char>(n, 0));
  for (int i = 0; i < n; ++i)
    for (int x = leaf_of[i]; x >= 0; x = eff.nodes[x].parent) in_clade[x][i] = 1;
  // A merged cluster must be nested in, contain, or avoid every clade.
  auto respects_clades = [&](const Cluster& p, const Cluster& q) {
    const size_t total = p.members.size() + q.members.size();
    for (int x = 1; x < eff.size(); ++x) {
      size_t inside = 0;
      for (int a : p.members) inside += in_clade[x][a];
      for (int b : q.members) inside += in_clade[x][b];
      if (inside == 0 || inside == total) continue;
      if (inside != static_cast<size_t>(eff.nodes[x].size)) return false;
    }
    return true;
  };
  std::vector<std::vector<double>> dist(n, std::vector<double>(n, 0.0));
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b) {
      std::vector<int> diff;
      std::set_symmetric_difference(sites[a].begin(), sites[a].end(), sites[b].begin(),
                                    sites[b].end(), std::back_inserter(diff));
      dist[a][b] = dist[b][a] = static_cast<double>(diff.size());
    }
  auto cdist = [&](const Cluster& p, const Cluster& q) {
    double s = 0.0;
    for (int a : p.members)
      for (int b : q.members) s += dist[a][b];
    return s / (p.members.size() * q.members.size());
  };
  const double eps = 1e-6 * (1.0 + sched.s.back());
  std::vector<double> times;
  std::vector<CoalescentEvent> events;
  double prev = 0.0;
  while (cl.size() > 1) {
    double best = std::numeric_limits<double>::infinity();
    int ba = -1, bb = -1;
    for (size_t a = 0; a < cl.size(); ++a)
      for (size_t b = a + 1; b < cl.size(); ++b) {
        if (!respects_clades(cl[a], cl[b])) continue;
        // Height of the merge: half the mean distance in time units, no
        // earlier than the latest sample it contains.
        double h = std::max(cdist(cl[a], cl[b]) / (2.0 * mu),
                            std::max(cl[a].top_sample, cl[b].top_sample) + eps);
        if (h < best) {
          best = h;
          ba = static_cast<int>(a);
          bb = static_cast<int>(b);
        }
      }
    const double t = std::max(best, prev + eps);
    prev = t;
    events.push_back(make_event(Operand{cl[ba].vintage, cl[ba].id}, Operand{cl[bb].vintage, cl[bb].id}));
    times.push_back(t);
    Cluster merged{true, static_cast<int>(events.size()), cl[ba].members,
                   std::max(cl[ba].top_sample, cl[bb].top_sample)};
    merged.members.insert(merged.members.end(), cl[bb].members.begin(), cl[bb].members.end());
    cl.erase(cl.begin() + bb);
    cl.erase(cl.begin() + ba);
    cl.push_back(std::move(merged));
  }
  return RankedGenealogy(sched, times, events);
}

// ---------------------------------------------------------------- sampler

Sampler::Sampler(std::vector<LocusData> data, McmcConfig config)
    : data_(std::move(data)), config_(std::move(config)), rng_(config_.seed) {
  config_.validate();
  if (data_.empty()) throw std::invalid_argument("at least one locus is required");
  if (config_.prior_only)
    for (auto& d : data_) {
      // Without data the only limit is the number of lineages already sampled.
      int before = 0;
      for (int j = 0; j < d.schedule().m(); ++j) {
        d.c[j] = std::max(0, before - 1);
        before += d.schedule().n[j];
      }
    }
  initialize();
}

void Sampler::initialize() {
  state_.mu = config_.mu;
  // Constant N_e matching the segregating sites: E[S] = 2 mu N a_n.
  double ne_sum = 0.0;
  for (const auto& d : data_) {
    const int n = d.schedule().total();
    const double s = d.tree.total_mutations();
    ne_sum += s > 0 ? s / (2.0 * state_.mu * harmonic(n)) : 1.0;
  }
  const double ne = std::clamp(ne_sum / data_.size(), 1e-3, 1e6);
  const auto traj = config_.fixed_field ? Trajectory(*config_.fixed_field) : Trajectory::constant(ne);

  std::vector<RankedGenealogy> gs;
  for (const auto& d : data_) {
    std::optional<RankedGenealogy> g;
    if (config_.initializer == "upgma") {
      try {
        auto u = serial_upgma_genealogy(d, state_.mu);
        if (config_.prior_only ||
            tajima_loglik(d.tree, u, state_.mu, config_.allocation_cap) > kNegInf)
          g = u;
      } catch (const std::exception&) {
      }
    }
    for (int attempt = 0; !g && attempt < 100; ++attempt) {
      auto cand = initial_genealogy(d, traj, rng_);
      if (config_.prior_only ||
          tajima_loglik(d.tree, cand, state_.mu, config_.allocation_cap) > kNegInf)
        g = cand;
    }
    if (!g) throw std::runtime_error("initialization failure for locus " + d.name);
    gs.push_back(*g);
  }

  if (config_.fixed_field) {
    state_.field = *config_.fixed_field;
  } else {
    double h = config_.horizon;
    if (h <= 0.0) {
      for (const auto& g : gs) h = std::max(h, g.height());
      h *= 1.2;
    }
    state_.field = GridField::regular(h, config_.B, std::log(ne));
  }
  prior_ = FieldPrior::build(state_.field);
  state_.tau = 1.0;

  state_.loci.clear();
  for (size_t l = 0; l < data_.size(); ++l) {
    LocusState s;
    s.g = gs[l];
    s.lik = TajimaLikelihood(data_[l].tree, config_.allocation_cap);
    if (!config_.prior_only) {
      s.lik.set_topology(s.g);
      s.loglik = s.lik.loglik(s.g, state_.mu);
    }
    s.topo_logprior = topology_logprior(s.g);
    s.stats = grid_stats(s.g.schedule(), s.g.times(), state_.field);
    state_.loci.push_back(std::move(s));
  }
}

auto Sampler::locus_times_logprior(const LocusState& s) const -> double {
  return grid_times_logprior(s.stats, state_.field.theta);
}

auto Sampler::log_posterior() const -> double {
  double lp = 0.0;
  for (const auto& s : state_.loci) lp += s.loglik + s.topo_logprior + locus_times_logprior(s);
  if (!config_.fixed_field) {
    Eigen::Map<const Eigen::VectorXd> th(state_.field.theta.data(), state_.field.cells());
    const double B = state_.field.cells();
    lp += 0.5 * B * std::log(state_.tau) - 0.5 * state_.tau * th.dot(prior_.Q * th);
    lp += (config_.alpha - 1.0) * std::log(state_.tau) - config_.beta * state_.tau;
  }
  if (config_.estimate_mu) lp += config_.mu_prior.logpdf(state_.mu);
  return lp;
}

void Sampler::update_field() {
  if (config_.fixed_field) return;
  ++field_tries_;
  const int B = state_.field.cells();
  std::vector<GridStats> stats;
  for (const auto& s : state_.loci) stats.push_back(s.stats);
  const double tau = state_.tau;
  Eigen::VectorXd theta = Eigen::Map<const Eigen::VectorXd>(state_.field.theta.data(), B);
  Eigen::VectorXd p(B);
  std::normal_distribution<double> nd;
  for (int b = 0; b < B; ++b) p[b] = nd(rng_);
  const double h0 = -field_log_posterior(theta, stats, prior_, tau) + 0.5 * p.squaredNorm();
  const int steps = uniform_int(rng_, 1, config_.leapfrog_steps);
  const double eps = config_.epsilon;
  const auto& V = prior_.eigenvectors;
  Eigen::VectorXd omega = (tau * prior_.eigenvalues).cwiseSqrt();
  Eigen::VectorXd x = theta;
  Eigen::VectorXd grad = coalescent_gradient(x, stats);
  for (int s = 0; s < steps; ++s) {
    p += 0.5 * eps * grad;
    // Exact flow of the Gaussian part in the eigenbasis.
    Eigen::VectorXd xr = V.transpose() * x;
    Eigen::VectorXd pr = V.transpose() * p;
    for (int b = 0; b < B; ++b) {
      const double w = omega[b];
      const double c = std::cos(w * eps), sn = std::sin(w * eps);
      const double x0 = xr[b], p0 = pr[b];
      xr[b] = w > 0.0 ? x0 * c + p0 / w * sn : x0 + p0 * eps;
      pr[b] = -x0 * w * sn + p0 * c;
    }
    x = V * xr;
    p = V * pr;
    grad = coalescent_gradient(x, stats);
    p += 0.5 * eps * grad;
  }
  const double h1 = -field_log_posterior(x, stats, prior_, tau) + 0.5 * p.squaredNorm();
  if (std::isfinite(h1)) max_energy_error_ = std::max(max_energy_error_, std::abs(h1 - h0));
  if (std::isfinite(h1) && std::log(uniform01(rng_)) < h0 - h1) {
    state_.field.theta.assign(x.data(), x.data() + B);
    ++field_accepts_;
  }
}

void Sampler::update_tau() {
  if (config_.fixed_field) return;
  const int B = state_.field.cells();
  Eigen::Map<const Eigen::VectorXd> th(state_.field.theta.data(), B);
  const double shape = config_.alpha + 0.5 * B;
  const double rate = config_.beta + 0.5 * th.dot(prior_.Q * th);
  state_.tau = std::gamma_distribution<double>(shape, 1.0 / rate)(rng_);
}

void Sampler::update_field_tau() {
  if (config_.fixed_field) return;
  ++field_tries_;
  const int B = state_.field.cells();
  std::vector<GridStats> stats;
  for (const auto& s : state_.loci) stats.push_back(s.stats);
  // Non-centered coordinates z = theta * sqrt(tau), eta = log tau: z has the
  // tau-free prior N(0, Q^-1), integrated exactly; the rest enters through its
  // gradient.
  auto energy = [&](const Eigen::VectorXd& z, double eta) {
    return -coalescent_part(z * std::exp(-0.5 * eta), stats) + 0.5 * z.dot(prior_.Q * z) -
           config_.alpha * eta + config_.beta * std::exp(eta);
  };
  auto force = [&](const Eigen::VectorXd& z, double eta, Eigen::VectorXd& fz, double& fe) {
    const double sc = std::exp(-0.5 * eta);
    const Eigen::VectorXd th = z * sc;
    const Eigen::VectorXd g = coalescent_gradient(th, stats);
    fz = g * sc;
    fe = -0.5 * g.dot(th) + config_.alpha - config_.beta * std::exp(eta);
  };
  double eta = std::log(state_.tau);
  Eigen::VectorXd z = Eigen::Map<const Eigen::VectorXd>(state_.field.theta.data(), B) * std::exp(0.5 * eta);
  Eigen::VectorXd p(B);
  std::normal_distribution<double> nd;
  for (int b = 0; b < B; ++b) p[b] = nd(rng_);
  double pe = nd(rng_);
  const double h0 = energy(z, eta) + 0.5 * (p.squaredNorm() + pe * pe);
  const int steps = uniform_int(rng_, 1, config_.leapfrog_steps);
  const double eps = config_.epsilon;
  const auto& V = prior_.eigenvectors;
  const Eigen::VectorXd omega = prior_.eigenvalues.cwiseSqrt();
  Eigen::VectorXd fz;
  double fe = 0.0;
  try {
    force(z, eta, fz, fe);
    for (int s = 0; s < steps; ++s) {
      p += 0.5 * eps * fz;
      pe += 0.5 * eps * fe;
      Eigen::VectorXd zr = V.transpose() * z;
      Eigen::VectorXd pr = V.transpose() * p;
      for (int b = 0; b < B; ++b) {
        const double w = omega[b];
        const double c = std::cos(w * eps), sn = std::sin(w * eps);
        const double z0 = zr[b], p0 = pr[b];
        zr[b] = w > 0.0 ? z0 * c + p0 / w * sn : z0 + p0 * eps;
        pr[b] = -z0 * w * sn + p0 * c;
      }
      z = V * zr;
      p = V * pr;
      eta += eps * pe;
      if (!std::isfinite(eta) || std::abs(eta) > 700.0) return;
      force(z, eta, fz, fe);
      p += 0.5 * eps * fz;
      pe += 0.5 * eps * fe;
    }
  } catch (const std::runtime_error&) {
    return;  // trajectory left the region where the density is finite
  }
  const double h1 = energy(z, eta) + 0.5 * (p.squaredNorm() + pe * pe);
  if (std::isfinite(h1)) max_energy_error_ = std::max(max_energy_error_, std::abs(h1 - h0));
  if (std::isfinite(h1) && std::log(uniform01(rng_)) < h0 - h1) {
    const Eigen::VectorXd th = z * std::exp(-0.5 * eta);
    state_.field.theta.assign(th.data(), th.data() + B);
    state_.tau = std::exp(eta);
    ++field_accepts_;
  }
}

void Sampler::update_times(int locus) {
  auto& s = state_.loci[locus];
  const auto& d = data_[locus];
  ++time_tries_;
  auto prop = propose_times(s.g.times(), d.schedule(), d.c, config_.Z, config_.sigma, rng_);
  if (prop.moved.empty()) return;
  if (first_invalid_rank(d.schedule(), prop.times, s.g.events()) != 0) return;
  auto g2 = s.g.with_times(prop.times);
  auto st2 = grid_stats(d.schedule(), prop.times, state_.field);
  const double topo2 = topology_logprior(g2);
  const double ll2 = config_.prior_only ? 0.0 : s.lik.loglik(g2, state_.mu);
  if (ll2 == kNegInf) return;
  const double cur = s.loglik + s.topo_logprior + locus_times_logprior(s);
  const double nxt = ll2 + topo2 + grid_times_logprior(st2, state_.field.theta);
  if (std::log(uniform01(rng_)) < nxt - cur + prop.log_hastings) {
    s.g = std::move(g2);
    s.stats = std::move(st2);
    s.topo_logprior = topo2;
    s.loglik = ll2;
    ++s.time_accepts;
    ++time_accepts_;
  }
}

void Sampler::update_topology(int locus) {
  auto& s = state_.loci[locus];
  ++topo_tries_;
  auto prop = propose_topology(s.g, rng_);
  if (!prop.valid || prop.events == s.g.events()) return;
  RankedGenealogy g2(s.g.schedule(), s.g.times(), prop.events);
  const double topo2 = topology_logprior(g2);
  double ll2 = 0.0;
  AllocationMatrix a2;
  if (!config_.prior_only) {
    try {
      a2 = s.lik.allocate(g2);
    } catch (const AllocationCapExceeded&) {
      return;
    }
    ll2 = s.lik.loglik(a2, g2, state_.mu);
    if (ll2 == kNegInf) return;
  }
  if (std::log(uniform01(rng_)) < ll2 + topo2 - s.loglik - s.topo_logprior + prop.log_hastings) {
    s.g = std::move(g2);
    s.topo_logprior = topo2;
    s.loglik = ll2;
    if (!config_.prior_only) s.lik.set_allocations(std::move(a2));
    ++s.topo_accepts;
    ++topo_accepts_;
  }
}

void Sampler::update_mu() {
  if (!config_.estimate_mu) return;
  ++mu_tries_;
  const double mu2 = state_.mu * std::exp(config_.mu_step * std::normal_distribution<double>()(rng_));
  const double lp2 = config_.mu_prior.logpdf(mu2);
  if (lp2 == kNegInf) return;
  std::vector<double> ll2(state_.loci.size(), 0.0);
  double delta = lp2 - config_.mu_prior.logpdf(state_.mu) + std::log(mu2) - std::log(state_.mu);
  if (!config_.prior_only)
    for (size_t l = 0; l < state_.loci.size(); ++l) {
      ll2[l] = state_.loci[l].lik.loglik(state_.loci[l].g, mu2);
      delta += ll2[l] - state_.loci[l].loglik;
    }
  if (std::log(uniform01(rng_)) < delta) {
    state_.mu = mu2;
    for (size_t l = 0; l < state_.loci.size(); ++l) state_.loci[l].loglik = ll2[l];
    ++mu_accepts_;
  }
}

void Sampler::sweep() {
  update_field();
  update_tau();
  if (config_.field_update == "joint") update_field_tau();
  for (int l = 0; l < static_cast<int>(state_.loci.size()); ++l) {
    update_topology(l);
    update_times(l);
  }
  update_mu();
}

auto Sampler::record(long it) const -> IterationRecord {
  IterationRecord r;
  r.iteration = it;
  r.log_posterior = log_posterior();
  r.theta = state_.field.theta;
  r.tau = state_.tau;
  r.mu = state_.mu;
  for (const auto& s : state_.loci) {
    r.tree_height.push_back(s.g.height());
    r.n_accepts.push_back(s.time_accepts + s.topo_accepts);
  }
  return r;
}

auto Sampler::run(const std::function<void(const IterationRecord&)>& on_sample) -> ChainResult {
  ChainResult res;
  for (long it = 1; it <= config_.iterations; ++it) {
    sweep();
    if (it > config_.burnin && (it - config_.burnin) % config_.thin == 0) {
      auto r = record(it);
      if (on_sample) on_sample(r);
      res.samples.push_back(std::move(r));
    }
  }
  res.grid = state_.field;
  auto rate = [](long a, long t) { return t > 0 ? static_cast<double>(a) / t : 0.0; };
  res.field_accept_rate = rate(field_accepts_, field_tries_);
  res.time_accept_rate = rate(time_accepts_, time_tries_);
  res.topology_accept_rate = rate(topo_accepts_, topo_tries_);
  res.mu_accept_rate = rate(mu_accepts_, mu_tries_);
  res.max_energy_error = max_energy_error_;
  const double end = state_.field.boundaries.back();
  double beyond = 0.0, total = 0.0;
  for (const auto& s : state_.loci)
    for (const auto& iv : interval_decomposition(s.g.schedule(), s.g.times())) {
      total += iv.lineages * (iv.end - iv.start);
      beyond += iv.lineages * std::max(0.0, iv.end - std::max(iv.start, end));
    }
  res.beyond_grid_fraction = total > 0.0 ? beyond / total : 0.0;
  return res;
}

auto run_chain(const std::vector<LocusData>& data, const McmcConfig& config,
               const std::function<void(const IterationRecord&)>& on_sample) -> ChainResult {
  Sampler s(data, config);
  return s.run(on_sample);
}

auto to_json(const IterationRecord& r) -> nlohmann::json {
  nlohmann::json loci = nlohmann::json::array();
  for (size_t l = 0; l < r.tree_height.size(); ++l)
    loci.push_back({{"tree_height", r.tree_height[l]}, {"n_accepts", r.n_accepts[l]}});
  return {{"iteration", r.iteration}, {"log_posterior", r.log_posterior}, {"theta", r.theta},
          {"tau", r.tau},             {"mu", r.mu},                       {"per_locus", loci}};
}

auto summarize_posterior(const std::vector<IterationRecord>& samples, const GridField& grid,
                         const std::vector<double>& times) -> TrajectorySummary {
  if (samples.empty()) throw std::invalid_argument("no samples to summarize");
  auto quantile = [](const std::vector<double>& v, double q) {
    const double pos = q * (v.size() - 1);
    const size_t lo = static_cast<size_t>(std::floor(pos));
    const size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - lo) * (v[hi] - v[lo]);
  };
  TrajectorySummary s;
  std::vector<double> vals(samples.size());
  for (double t : times) {
    const int b = grid.cell_of(t);
    for (size_t k = 0; k < samples.size(); ++k) vals[k] = std::exp(samples[k].theta[b]);
    std::sort(vals.begin(), vals.end());
    s.time.push_back(t);
    s.median.push_back(quantile(vals, 0.5));
    s.q025.push_back(quantile(vals, 0.025));
    s.q975.push_back(quantile(vals, 0.975));
  }
  return s;
}

}  // namespace tajima
