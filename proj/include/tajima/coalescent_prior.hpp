#pragma once

#include <vector>

#include "tajima/demographic.hpp"
#include "tajima/genealogy.hpp"
#include "tajima/random.hpp"

namespace tajima {

// Log of the jump-chain transition probability; -inf when after is not one merge away.
auto transition_logprob(const JumpChainState& before, const JumpChainState& after) -> double;

// Log-density of the next coalescent time t_next given the previous one t_prev,
// with events_so_far coalescences already completed by t_prev.
auto holding_logdensity(double t_prev, double t_next, int events_so_far,
                        const SamplingSchedule& sched, const Trajectory& traj) -> double;

// Topology term: sum of log transition probabilities along the jump chain.
auto topology_logprior(const RankedGenealogy& g) -> double;
// Time term: sum of holding-time log-densities.
auto times_logprior(const SamplingSchedule& sched, const std::vector<double>& times,
                    const Trajectory& traj) -> double;
auto genealogy_logprior(const RankedGenealogy& g, const Trajectory& traj) -> double;

// Sufficient statistics of the time density for a grid field:
// log p(t | theta) = const - sum_b count_b * theta_b - sum_b exp(-theta_b) * weight_b.
struct GridStats {
  std::vector<double> count;
  std::vector<double> weight;
  double log_const = 0.0;  // sum of log C_{0,k}
};
auto grid_stats(const SamplingSchedule& sched, const std::vector<double>& times,
                const GridField& field) -> GridStats;
auto grid_times_logprior(const GridStats& st, const std::vector<double>& theta) -> double;

auto sample_coalescent_times(const SamplingSchedule& sched, const Trajectory& traj, Rng& rng)
    -> std::vector<double>;
auto sample_genealogy(const SamplingSchedule& sched, const Trajectory& traj, Rng& rng)
    -> RankedGenealogy;
// Uniform-pair topology draw given fixed coalescent times.
auto sample_topology(const SamplingSchedule& sched, const std::vector<double>& times, Rng& rng)
    -> std::vector<CoalescentEvent>;

}  // namespace tajima
