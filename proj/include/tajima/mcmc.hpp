#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "tajima/coalescent_prior.hpp"
#include "tajima/demographic.hpp"
#include "tajima/diagnostics.hpp"
#include "tajima/genealogy.hpp"
#include "tajima/ism_data.hpp"
#include "tajima/likelihood.hpp"
#include "tajima/random.hpp"

namespace tajima {

struct MuPrior {
  enum class Kind { Gamma, Uniform };
  Kind kind = Kind::Gamma;
  double a = 1.0;  // Gamma shape or Uniform lower bound
  double b = 1.0;  // Gamma rate or Uniform upper bound

  auto logpdf(double mu) const -> double;
};

struct McmcConfig {
  int version = 1;
  double epsilon = 0.07;
  int Z = 2;
  double sigma = 0.02;
  long iterations = 200000;
  long burnin = 50000;
  long thin = 100;
  std::uint64_t seed = 1;
  int B = 100;
  double alpha = 0.01;
  double beta = 0.01;
  int leapfrog_steps = 10;  // maximum; each update draws uniformly from 1..leapfrog_steps
  double mu = 1.0;          // known rate, or starting value when estimated
  bool estimate_mu = false;
  MuPrior mu_prior;
  double mu_step = 0.1;     // sd of the log-scale random walk
  double horizon = 0.0;     // grid end; 0 = 1.2 x initial tree height
  std::string initializer = "upgma";  // or "sis"
  // "joint" adds an HMC move on (theta, log tau) to the theta HMC and tau Gibbs steps.
  std::string field_update = "joint";  // or "gibbs"
  bool prior_only = false;
  std::optional<GridField> fixed_field;  // skip the field update
  std::size_t allocation_cap = kDefaultAllocationCap;

  void validate() const;
};

auto to_json(const McmcConfig& c) -> nlohmann::json;
auto config_from_json(const nlohmann::json& j) -> McmcConfig;

struct LocusData {
  std::string name;
  PerfectPhylogeny tree;
  std::vector<int> c;  // constraint vector

  static auto from_data(const IncidenceMatrix& y1, const FrequencyMatrix& y2,
                        const SamplingSchedule& sched, std::string name = {}) -> LocusData;
  auto schedule() const -> const SamplingSchedule& { return tree.schedule; }
};

struct LocusState {
  RankedGenealogy g;
  TajimaLikelihood lik;
  double loglik = 0.0;
  double topo_logprior = 0.0;
  GridStats stats;
  long time_accepts = 0;
  long topo_accepts = 0;
};

struct ChainState {
  std::vector<LocusState> loci;
  GridField field;
  double tau = 1.0;
  double mu = 1.0;
};

// Brownian-motion precision structure on cell midpoints; the full prior
// precision is tau * Q.
struct FieldPrior {
  Eigen::MatrixXd Q;
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenvectors;

  static auto build(const GridField& grid) -> FieldPrior;
};

// Coalescent log-density of all loci's times as a function of theta plus the
// Gaussian prior, and its gradient.
auto field_log_posterior(const Eigen::VectorXd& theta, const std::vector<GridStats>& stats,
                         const FieldPrior& prior, double tau) -> double;
auto field_gradient(const Eigen::VectorXd& theta, const std::vector<GridStats>& stats,
                    const FieldPrior& prior, double tau) -> Eigen::VectorXd;

struct TimeProposal {
  std::vector<double> times;
  double log_hastings = 0.0;
  std::vector<int> moved;  // 1-based indices of updated inter-coalescent times
};

// Lower truncation bound for inter-coalescent time i (1-based) so that the
// (c_j + 1)-th event stays at or after s_j.
auto time_lower_bound(const std::vector<double>& times, const SamplingSchedule& sched,
                      const std::vector<int>& c, int i) -> double;
auto propose_times(const std::vector<double>& times, const SamplingSchedule& sched,
                   const std::vector<int>& c, int Z, double sigma, Rng& rng) -> TimeProposal;

struct TopologyProposal {
  std::vector<CoalescentEvent> events;
  double log_hastings = 0.0;
  bool valid = true;  // false when the result violates the sampling times
};

// Every topology reachable by one local move with its proposal probability;
// identical results are merged.
auto topology_neighbors(const RankedGenealogy& g)
    -> std::vector<std::pair<std::vector<CoalescentEvent>, double>>;
auto propose_topology(const RankedGenealogy& g, Rng& rng) -> TopologyProposal;

struct IterationRecord {
  long iteration = 0;
  double log_posterior = 0.0;
  std::vector<double> theta;
  double tau = 0.0;
  double mu = 0.0;
  std::vector<double> tree_height;
  std::vector<long> n_accepts;
};

auto to_json(const IterationRecord& r) -> nlohmann::json;

struct ChainResult {
  GridField grid;
  std::vector<IterationRecord> samples;
  double field_accept_rate = 0.0;
  double time_accept_rate = 0.0;
  double topology_accept_rate = 0.0;
  double mu_accept_rate = 0.0;
  double max_energy_error = 0.0;
  double beyond_grid_fraction = 0.0;  // tree length beyond the grid end, last state
};

class Sampler {
 public:
  Sampler(std::vector<LocusData> data, McmcConfig config);

  auto state() const -> const ChainState& { return state_; }
  auto config() const -> const McmcConfig& { return config_; }
  auto prior() const -> const FieldPrior& { return prior_; }
  auto log_posterior() const -> double;

  // HMC on theta at the current tau.
  void update_field();
  // Gamma full conditional of tau.
  void update_tau();
  // HMC on (theta, log tau) jointly, in non-centered coordinates.
  void update_field_tau();
  void update_times(int locus);
  void update_topology(int locus);
  void update_mu();
  void sweep();

  // Runs the configured iterations; on_sample is called for every stored sample.
  auto run(const std::function<void(const IterationRecord&)>& on_sample = {}) -> ChainResult;

 private:
  void initialize();
  auto locus_times_logprior(const LocusState& s) const -> double;
  auto record(long it) const -> IterationRecord;

  std::vector<LocusData> data_;
  McmcConfig config_;
  Rng rng_;
  ChainState state_;
  FieldPrior prior_;
  long field_tries_ = 0, field_accepts_ = 0;
  long time_tries_ = 0, time_accepts_ = 0;
  long topo_tries_ = 0, topo_accepts_ = 0;
  long mu_tries_ = 0, mu_accepts_ = 0;
  double max_energy_error_ = 0.0;
};

// Convenience wrapper over Sampler.
auto run_chain(const std::vector<LocusData>& data, const McmcConfig& config,
               const std::function<void(const IterationRecord&)>& on_sample = {}) -> ChainResult;

// Initial genealogy compatible with the data: topology from the SIS proposal,
// times consistent with c.
auto initial_genealogy(const LocusData& d, const Trajectory& traj, Rng& rng) -> RankedGenealogy;
// Serial UPGMA on Hamming distances between sampled sequences.
auto serial_upgma_genealogy(const LocusData& d, double mu) -> RankedGenealogy;

// Pointwise N_e quantiles at the given times.
auto summarize_posterior(const std::vector<IterationRecord>& samples, const GridField& grid,
                         const std::vector<double>& times) -> TrajectorySummary;

}  // namespace tajima
