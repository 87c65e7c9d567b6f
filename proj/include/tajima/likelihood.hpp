#pragma once

#include <map>
#include <vector>

#include "tajima/allocation.hpp"
#include "tajima/genealogy.hpp"
#include "tajima/ism_data.hpp"

namespace tajima {

// Number of distinct matchings of singleton mutation counts to singleton branches.
auto matching_multiplicity(const std::vector<std::map<int, int>>& partition) -> double;

// Log of the Poisson placement probability of E_V on the region of g mapped to v
// in row; t must already be effective (see PerfectPhylogeny::effective).
auto node_logfactor(const PerfectPhylogeny& t, int v, const std::vector<int>& row,
                    const RankedGenealogy& g, double mu) -> double;

// Log number of symmetries of the effective tree t that exchange identical
// sibling subtrees of more than one sample. Allocation rows related by such a
// symmetry describe the same mutation placement.
auto log_automorphisms(const PerfectPhylogeny& t) -> double;

// log P(Y | g, mu): Poisson-process probability of the observed unlabeled data.
auto tajima_loglik(const PerfectPhylogeny& t, const RankedGenealogy& g, double mu,
                   std::size_t cap = kDefaultAllocationCap) -> double;
// Same, reusing a precomputed allocation matrix for g's topology.
auto tajima_loglik(const PerfectPhylogeny& t, const AllocationMatrix& a, const RankedGenealogy& g,
                   double mu) -> double;

// Labeled likelihood: leaf_labels[leaf of g] is the phylogeny leaf node (of the
// effective tree) that the sample belongs to. -inf when a clade is split.
auto kingman_loglik(const PerfectPhylogeny& t, const RankedGenealogy& g,
                    const std::vector<int>& leaf_labels, double mu) -> double;

// Likelihood evaluator holding the effective tree and the allocation matrix of
// the current topology.
class TajimaLikelihood {
 public:
  TajimaLikelihood() = default;
  explicit TajimaLikelihood(const PerfectPhylogeny& t, std::size_t cap = kDefaultAllocationCap);

  // Recomputes the allocation matrix for g's topology.
  void set_topology(const RankedGenealogy& g);
  auto allocations() const -> const AllocationMatrix& { return a_; }
  auto loglik(const RankedGenealogy& g, double mu) const -> double;
  // Evaluation against an allocation matrix computed for g's topology.
  auto allocate(const RankedGenealogy& g) const -> AllocationMatrix;
  auto loglik(const AllocationMatrix& a, const RankedGenealogy& g, double mu) const -> double;
  void set_allocations(AllocationMatrix a) { a_ = std::move(a); }
  auto tree() const -> const PerfectPhylogeny& { return eff_; }

 private:
  PerfectPhylogeny eff_;
  double log_aut_ = 0.0;
  AllocationMatrix a_;
  std::size_t cap_ = kDefaultAllocationCap;
};

}  // namespace tajima
