#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "tajima/genealogy.hpp"
#include "tajima/ism_data.hpp"

namespace tajima {

class AllocationCapExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kDefaultAllocationCap = 10'000'000;

// Row r, entry i-1: phylogeny node mapped to the subtree with vintage i.
struct AllocationMatrix {
  std::vector<std::vector<int>> rows;
  auto size() const -> std::size_t { return rows.size(); }
  auto empty() const -> bool { return rows.empty(); }
};

// Node ids refer to t (mutation-free multi-copy leaves are treated as single-copy slots).
auto enumerate_allocations(const PerfectPhylogeny& t, const RankedGenealogy& g,
                           std::size_t cap = kDefaultAllocationCap) -> AllocationMatrix;

// Singleton children of v grouped by sampling group, then by mutation count:
// result[j][e] = number of singleton children at s_j carrying e mutations.
auto singleton_edge_partition(const PerfectPhylogeny& t, int v) -> std::vector<std::map<int, int>>;

auto allocation_to_csv(const AllocationMatrix& a) -> std::string;

}  // namespace tajima
