#pragma once

#include <cmath>

#include "json.hpp"

namespace mlcd::testing {

// Three boundary leaders on a circle of radius 6 around the core, one
// follower per cell centroid (p_min = 2); safety bounds mode, 10 s helix.
// The team is planar, so its cells only certify when 2(δ+ε)/p_min <= 1.
inline nlohmann::json triangle_json() {
  using nlohmann::json;
  const double c = 3.0 * std::sqrt(3.0);
  json positions = json::array({{6.0, 0.0, 0.0}, {-3.0, c, 0.0}, {-3.0, -c, 0.0}, {0.0, 0.0, 0.0}});
  for (int j = 0; j < 3; ++j) {
    json p = json::array();
    for (int axis = 0; axis < 3; ++axis) {
      p.push_back((positions[j][axis].get<double>() + positions[(j + 1) % 3][axis].get<double>()) / 3.0);
    }
    positions.push_back(p);
  }
  return {
      {"schema", "mlcd-scenario/1"},
      {"team",
       {{"N", 7},
        {"layers", json::array({{{"ids", {1, 2, 3, 4}}}, {{"from", 5}, {"to", 7}}})},
        {"positions", positions}}},
      {"safety", {{"delta", 0.1}, {"epsilon", 0.4}, {"a_max", 101.0}}},
      {"trajectory", {{"kind", "helix"}, {"T", 10.0}}},
  };
}

}  // namespace mlcd::testing
