#pragma once

#include <vector>

#include "mlcd/common.hpp"

namespace mlcd {

// s(t) = [a_x ω t, a_y sin(π ω t), a_z cos(π ω t)].
struct HelixParameters {
  double omega = 0.01;               // [1/s]
  Vec3 amplitudes{0.4, 0.4, 0.6};    // [m]
};

Vec3 helix_reference(double t, double omega);
Vec3 helix_reference(double t, const HelixParameters& params);

struct Waypoint {
  double t = 0.0;
  Vec3 position = Vec3::Zero();
};

// Desired team position s(t) over [0, duration].
class ReferenceTrajectory {
 public:
  enum class Kind { kHelix, kWaypointSpline };

  static ReferenceTrajectory helix(HelixParameters params, double duration);
  // Catmull-Rom spline through strictly time-ordered waypoints; the first
  // waypoint must be at t = 0. Held constant outside the waypoint span.
  static ReferenceTrajectory waypoint_spline(std::vector<Waypoint> waypoints);

  Kind kind() const { return kind_; }
  double duration() const { return duration_; }
  const HelixParameters& helix_parameters() const { return helix_; }
  const std::vector<Waypoint>& waypoints() const { return waypoints_; }

  void set_duration(double duration);
  Vec3 position(double t) const;

 private:
  Kind kind_ = Kind::kHelix;
  double duration_ = 0.0;
  HelixParameters helix_;
  std::vector<Waypoint> waypoints_;
};

// Samples 0, dt, ..., T. Throws InputError when dt <= 0, T < 0 or dt does not
// divide T within rounding.
std::vector<double> time_grid(double duration, double dt);

}  // namespace mlcd
