#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "mlcd/scenario.hpp"
#include "mlcd/team_model.hpp"

namespace mlcd::testing {

inline SafetyParameters default_safety() { return {0.1, 0.4, 101.0, std::nullopt}; }

// Three boundary leaders on a circle of radius 2 around the core (agent 4),
// one follower at each cell centroid (agents 5, 6, 7).
inline TeamConfiguration triangle_team(SafetyParameters safety = default_safety()) {
  const double r = 2.0;
  const double c = std::sqrt(3.0);
  std::vector<Vec3> positions{Vec3(r, 0, 0), Vec3(-1, c, 0), Vec3(-1, -c, 0), Vec3::Zero()};
  for (int j = 0; j < 3; ++j) positions.push_back((positions[j] + positions[(j + 1) % 3]) / 3.0);
  LayerPartition partition{{{1, 2, 3, 4}, {5, 6, 7}}};
  return make_team(7, partition, positions, safety);
}

inline const Scenario& helix67() {
  static const Scenario scenario = load_scenario(helix67_document());
  return scenario;
}

// O(n^2) closest-pair scan.
inline double brute_force_min_distance(const Positions& p) {
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < p.rows(); ++j) best = std::min(best, (p.row(i) - p.row(j)).norm());
  }
  return best;
}

struct Halfspace {
  Vec3 normal;
  double offset = 0.0;  // points inside satisfy normal . x <= offset
};

// Every supporting plane through three of `points`, found by brute-force
// enumeration. Requires a full-dimensional hull.
inline std::vector<Halfspace> supporting_planes(const std::vector<Vec3>& points) {
  double scale = 1.0;
  for (const Vec3& p : points) scale = std::max(scale, p.norm());
  std::vector<Halfspace> out;
  const std::size_t n = points.size();
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      for (std::size_t c = b + 1; c < n; ++c) {
        Vec3 normal = (points[b] - points[a]).cross(points[c] - points[a]);
        if (normal.norm() <= 1e-12 * scale * scale) continue;
        normal.normalize();
        double lo = 0.0;
        double hi = 0.0;
        for (const Vec3& p : points) {
          const double d = normal.dot(p - points[a]);
          lo = std::min(lo, d);
          hi = std::max(hi, d);
        }
        const double tol = 1e-12 * scale;
        const double offset = normal.dot(points[a]);
        if (hi <= tol) out.push_back({normal, offset});
        if (lo >= -tol) out.push_back({-normal, -offset});
      }
    }
  }
  return out;
}

inline double hull_excess(const std::vector<Halfspace>& planes, const Vec3& x) {
  double worst = -std::numeric_limits<double>::infinity();
  for (const Halfspace& h : planes) worst = std::max(worst, h.normal.dot(x) - h.offset);
  return worst;
}

// Largest signed distance of `x` outside the convex hull of `points`.
inline double hull_excess(const std::vector<Vec3>& points, const Vec3& x) {
  return hull_excess(supporting_planes(points), x);
}

inline Eigen::Matrix3d random_rotation(std::mt19937& rng) {
  std::normal_distribution<double> g;
  Eigen::Matrix3d m;
  for (int i = 0; i < 9; ++i) m(i / 3, i % 3) = g(rng);
  Eigen::HouseholderQR<Eigen::Matrix3d> qr(m);
  Eigen::Matrix3d q = qr.householderQ();
  if (q.determinant() < 0) q.col(0) = -q.col(0);
  return q;
}

}  // namespace mlcd::testing
