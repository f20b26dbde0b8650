#include "mlcd/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

namespace mlcd {

Vec3 helix_reference(double t, double omega) {
  return helix_reference(t, HelixParameters{omega, Vec3(0.4, 0.4, 0.6)});
}

Vec3 helix_reference(double t, const HelixParameters& params) {
  const double phase = std::numbers::pi * params.omega * t;
  return {params.amplitudes.x() * params.omega * t, params.amplitudes.y() * std::sin(phase),
          params.amplitudes.z() * std::cos(phase)};
}

ReferenceTrajectory ReferenceTrajectory::helix(HelixParameters params, double duration) {
  ReferenceTrajectory out;
  out.kind_ = Kind::kHelix;
  out.helix_ = params;
  out.set_duration(duration);
  return out;
}

ReferenceTrajectory ReferenceTrajectory::waypoint_spline(std::vector<Waypoint> waypoints) {
  if (waypoints.empty()) throw InputError("waypoint spline needs at least one waypoint");
  if (waypoints.front().t != 0.0) throw InputError("first waypoint must be at t = 0");
  for (std::size_t i = 1; i < waypoints.size(); ++i) {
    if (!(waypoints[i].t > waypoints[i - 1].t)) {
      throw InputError("waypoint times must be strictly increasing");
    }
  }
  for (const Waypoint& w : waypoints) {
    if (!w.position.allFinite()) throw InputError("waypoint positions must be finite");
  }
  ReferenceTrajectory out;
  out.kind_ = Kind::kWaypointSpline;
  out.duration_ = waypoints.back().t;
  out.waypoints_ = std::move(waypoints);
  return out;
}

void ReferenceTrajectory::set_duration(double duration) {
  if (!(duration >= 0.0) || !std::isfinite(duration)) {
    throw InputError("trajectory duration must be finite and >= 0");
  }
  duration_ = duration;
}

Vec3 ReferenceTrajectory::position(double t) const {
  if (kind_ == Kind::kHelix) return helix_reference(t, helix_);

  const auto& w = waypoints_;
  if (w.size() == 1 || t <= w.front().t) return w.front().position;
  if (t >= w.back().t) return w.back().position;

  const auto upper = std::upper_bound(w.begin(), w.end(), t,
                                      [](double value, const Waypoint& p) { return value < p.t; });
  const std::size_t i = static_cast<std::size_t>(upper - w.begin()) - 1;
  const auto tangent = [&](std::size_t j) -> Vec3 {
    const std::size_t a = j == 0 ? 0 : j - 1;
    const std::size_t b = std::min(j + 1, w.size() - 1);
    return (w[b].position - w[a].position) / (w[b].t - w[a].t);
  };
  const double h = w[i + 1].t - w[i].t;
  const double u = (t - w[i].t) / h;
  const double u2 = u * u;
  const double u3 = u2 * u;
  return (2 * u3 - 3 * u2 + 1) * w[i].position + (u3 - 2 * u2 + u) * h * tangent(i) +
         (-2 * u3 + 3 * u2) * w[i + 1].position + (u3 - u2) * h * tangent(i + 1);
}

std::vector<double> time_grid(double duration, double dt) {
  if (!(dt > 0.0)) throw InputError("nonpositive step: dt must be > 0");
  if (!(duration >= 0.0) || !std::isfinite(duration)) throw InputError("T must be >= 0");
  const double ratio = duration / dt;
  const long long n = std::llround(ratio);
  if (std::abs(static_cast<double>(n) * dt - duration) > 1e-9 * std::max(1.0, duration)) {
    throw InputError(fmt::format("dt = {} does not divide T = {}", dt, duration));
  }
  std::vector<double> grid(static_cast<std::size_t>(n) + 1);
  for (long long i = 0; i <= n; ++i) {
    grid[static_cast<std::size_t>(i)] =
        n == 0 ? 0.0 : duration * static_cast<double>(i) / static_cast<double>(n);
  }
  return grid;
}

}  // namespace mlcd
