#include "mlcd/geometry.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <vector>

namespace mlcd {
namespace {

PairDistance closest_pair(const Positions& positions, std::vector<int> rows) {
  if (rows.size() < 2) {
    throw InputError("min_pairwise_distance: fewer than 2 positions");
  }
  std::sort(rows.begin(), rows.end(), [&](int a, int b) {
    const double xa = positions(a, 0);
    const double xb = positions(b, 0);
    return xa < xb || (xa == xb && a < b);
  });

  PairDistance best;
  best.distance = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const int a = rows[i];
    for (std::size_t j = i + 1; j < rows.size(); ++j) {
      const int b = rows[j];
      // Pairs with an x gap equal to the current best can still tie it.
      if (positions(b, 0) - positions(a, 0) > best.distance) break;
      const double d = (positions.row(a) - positions.row(b)).norm();
      const AgentId lo = std::min(a, b) + 1;
      const AgentId hi = std::max(a, b) + 1;
      if (d < best.distance ||
          (d == best.distance && (lo < best.first || (lo == best.first && hi < best.second)))) {
        best = {d, lo, hi};
      }
    }
  }
  return best;
}

}  // namespace

PairDistance min_pairwise_distance(const Positions& positions) {
  std::vector<int> rows(static_cast<std::size_t>(positions.rows()));
  std::iota(rows.begin(), rows.end(), 0);
  return closest_pair(positions, std::move(rows));
}

PairDistance min_pairwise_distance(const Positions& positions, std::span<const AgentId> subset) {
  std::vector<int> rows;
  rows.reserve(subset.size());
  for (AgentId id : subset) {
    if (id < 1 || id > positions.rows()) {
      throw InputError("min_pairwise_distance: agent id out of range");
    }
    rows.push_back(id - 1);
  }
  return closest_pair(positions, std::move(rows));
}

}  // namespace mlcd
