#include "tajima/coalescent_prior.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tajima {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

auto log_choose(int n, int k) -> double {
  if (k < 0 || k > n) return kNegInf;
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

auto pairs(int k) -> double { return 0.5 * k * (k - 1.0); }

}  // namespace

auto transition_logprob(const JumpChainState& before, const JumpChainState& after) -> double {
  if (before.a.size() != after.a.size()) throw std::invalid_argument("state size mismatch");
  const int L = before.lineages();
  if (L < 2) throw std::invalid_argument("transition needs at least two lineages");
  if (after.lineages() != L - 1) return kNegInf;
  int removed = 0;
  for (int v : before.b)
    if (std::find(after.b.begin(), after.b.end(), v) == after.b.end()) ++removed;
  int added = 0;
  for (int v : after.b)
    if (std::find(before.b.begin(), before.b.end(), v) == before.b.end()) ++added;
  if (added != 1) return kNegInf;
  int consumed = removed;
  double lognum = 0.0;
  for (size_t j = 0; j < before.a.size(); ++j) {
    int d = before.a[j] - after.a[j];
    if (d < 0) return kNegInf;
    consumed += d;
    lognum += log_choose(before.a[j], d);
  }
  if (consumed != 2) return kNegInf;
  return lognum - std::log(pairs(L));
}

auto holding_logdensity(double t_prev, double t_next, int events_so_far,
                        const SamplingSchedule& sched, const Trajectory& traj) -> double {
  if (!(t_next > t_prev)) return kNegInf;
  const int at_event = sched.sampled_by(t_next) - events_so_far;
  if (at_event < 2) return kNegInf;
  double integral = 0.0;
  double cur = t_prev;
  int lineages = sched.sampled_by(t_prev) - events_so_far;
  for (int j = 0; j < sched.m(); ++j) {
    double sj = sched.s[j];
    if (sj <= t_prev + kTimeTol || sj > t_next + kTimeTol) continue;
    integral += pairs(lineages) * traj.inverse_integral(cur, sj);
    cur = sj;
    lineages += sched.n[j];
  }
  integral += pairs(lineages) * traj.inverse_integral(cur, std::max(cur, t_next));
  return std::log(pairs(at_event)) - traj.log_evaluate(t_next) - integral;
}

auto topology_logprior(const RankedGenealogy& g) -> double {
  auto chain = jump_chain(g);
  double lp = 0.0;
  for (size_t i = 1; i < chain.size(); ++i) {
    const auto& prev = chain[i - 1].state;
    const auto& cur = chain[i].state;
    if (cur.lineages() == prev.lineages() - 1) lp += transition_logprob(prev, cur);
  }
  return lp;
}

auto times_logprior(const SamplingSchedule& sched, const std::vector<double>& times,
                    const Trajectory& traj) -> double {
  double lp = 0.0;
  double prev = 0.0;
  for (size_t r = 0; r < times.size(); ++r) {
    lp += holding_logdensity(prev, times[r], static_cast<int>(r), sched, traj);
    prev = times[r];
  }
  return lp;
}

auto genealogy_logprior(const RankedGenealogy& g, const Trajectory& traj) -> double {
  return topology_logprior(g) + times_logprior(g.schedule(), g.times(), traj);
}

auto grid_stats(const SamplingSchedule& sched, const std::vector<double>& times,
                const GridField& field) -> GridStats {
  const int B = field.cells();
  GridStats st{std::vector<double>(B, 0.0), std::vector<double>(B, 0.0), 0.0};
  auto add_segment = [&](double u, double v, double c) {
    if (v <= u || c == 0.0) return;
    int b = field.cell_of(u);
    while (u < v) {
      double end = b + 1 < B ? field.boundaries[b + 1] : std::numeric_limits<double>::infinity();
      double w = std::min(v, end);
      st.weight[b] += c * (w - u);
      u = w;
      ++b;
    }
  };
  for (const auto& iv : interval_decomposition(sched, times)) add_segment(iv.start, iv.end, iv.pairs());
  for (size_t r = 0; r < times.size(); ++r) {
    st.count[field.cell_of(times[r])] += 1.0;
    int at_event = sched.sampled_by(times[r]) - static_cast<int>(r);
    st.log_const += std::log(pairs(at_event));
  }
  return st;
}

auto grid_times_logprior(const GridStats& st, const std::vector<double>& theta) -> double {
  double lp = st.log_const;
  for (size_t b = 0; b < theta.size(); ++b)
    lp -= st.count[b] * theta[b] + st.weight[b] * std::exp(-theta[b]);
  return lp;
}

auto sample_coalescent_times(const SamplingSchedule& sched, const Trajectory& traj, Rng& rng)
    -> std::vector<double> {
  const int n = sched.total();
  std::exponential_distribution<double> expo(1.0);
  std::vector<double> times;
  double t = 0.0;
  int lineages = sched.n[0];
  int next_group = 1;
  while (static_cast<int>(times.size()) < n - 1) {
    double next_s = next_group < sched.m() ? sched.s[next_group]
                                           : std::numeric_limits<double>::infinity();
    if (lineages < 2) {
      t = next_s;
      lineages += sched.n[next_group++];
      continue;
    }
    double target = expo(rng) / pairs(lineages);
    double u = traj.solve_inverse_integral(t, target);
    if (u < next_s) {
      times.push_back(u);
      t = u;
      lineages -= 1;
    } else {
      t = next_s;
      lineages += sched.n[next_group++];
    }
  }
  return times;
}

auto sample_topology(const SamplingSchedule& sched, const std::vector<double>& times, Rng& rng)
    -> std::vector<CoalescentEvent> {
  struct Lin {
    bool vintage;
    int id;
  };
  std::vector<Lin> lin;
  int next_group = 0;
  std::vector<CoalescentEvent> events;
  for (size_t r = 1; r <= times.size(); ++r) {
    while (next_group < sched.m() && sched.s[next_group] <= times[r - 1] + kTimeTol) {
      for (int c = 0; c < sched.n[next_group]; ++c) lin.push_back({false, next_group});
      ++next_group;
    }
    const int L = static_cast<int>(lin.size());
    int i = uniform_int(rng, 0, L - 1);
    int j = uniform_int(rng, 0, L - 2);
    if (j >= i) ++j;
    Lin p = lin[i];
    Lin q = lin[j];
    if (p.vintage && !q.vintage) std::swap(p, q);
    if (!p.vintage && !q.vintage)
      events.push_back(CoalescentEvent::cross(p.id, q.id));
    else if (!p.vintage)
      events.push_back(CoalescentEvent::single_vintage(p.id, q.id));
    else
      events.push_back(CoalescentEvent::vintages(p.id, q.id));
    lin.erase(lin.begin() + std::max(i, j));
    lin.erase(lin.begin() + std::min(i, j));
    lin.push_back({true, static_cast<int>(r)});
  }
  return events;
}

auto sample_genealogy(const SamplingSchedule& sched, const Trajectory& traj, Rng& rng)
    -> RankedGenealogy {
  sched.validate();
  auto times = sample_coalescent_times(sched, traj, rng);
  auto events = sample_topology(sched, times, rng);
  return RankedGenealogy(sched, std::move(times), std::move(events));
}

}  // namespace tajima
