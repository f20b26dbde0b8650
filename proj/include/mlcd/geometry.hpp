#pragma once

#include <span>

#include "mlcd/common.hpp"

namespace mlcd {

struct PairDistance {
  double distance = 0.0;
  AgentId first = 0;
  AgentId second = 0;
};

// Exact closest pair (sweep along x). Ties resolve to the lexicographically
// smallest (first, second). Row i of `positions` is agent i + 1.
PairDistance min_pairwise_distance(const Positions& positions);

// Same, restricted to the listed agents of `positions`.
PairDistance min_pairwise_distance(const Positions& positions, std::span<const AgentId> subset);

}  // namespace mlcd
