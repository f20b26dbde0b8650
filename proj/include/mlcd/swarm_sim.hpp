#pragma once

#include <vector>

#include "mlcd/common.hpp"
#include "mlcd/hierarchy.hpp"
#include "mlcd/qp_planner.hpp"
#include "mlcd/team_model.hpp"
#include "mlcd/trajectory.hpp"

namespace mlcd {

struct AgentState {
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
};

struct ControllerGains {
  double kp = 4.0;  // [1/s^2]
  double kd = 4.0;  // [1/s]

  bool overdamped_or_critical() const { return kd * kd >= 4.0 * kp; }
};

// Semi-implicit Euler on a double integrator with PD acceleration
// kp (p_des - r) + kd (v_des - v). Throws InputError for dt <= 0.
AgentState step_agent(const AgentState& state, const Vec3& desired_position,
                      const Vec3& desired_velocity, const ControllerGains& gains, double dt);

enum class SimMode { kOpenLoop, kClosedLoop };
enum class InitialState { kDesired, kMaterial };

struct SimSettings {
  double dt = 0.1;
  ControllerGains gains;
  SimMode mode = SimMode::kClosedLoop;
  InitialState initial = InitialState::kDesired;
  double divergence_factor = 100.0;  // abort when tracking error > factor * δ
  double transient = 10.0;           // [s] excluded from the δ tracking check
};

struct SimLog {
  std::vector<double> time;
  std::vector<Positions> desired;
  std::vector<Positions> actual;
  std::vector<ScheduleEntry> plan;
  std::vector<double> min_distance;        // actual positions, per step
  std::vector<double> max_tracking_error;  // per step
  std::vector<int> flagged_steps;          // closed loop: error > δ

  int step_count() const { return static_cast<int>(time.size()); }
  int agent_count() const { return desired.empty() ? 0 : static_cast<int>(desired.front().rows()); }
};

SimLog run_simulation(const TeamConfiguration& team, const std::vector<LayerWeights>& weights,
                      const ReferenceTrajectory& trajectory, const PlannerSettings& planner,
                      const SimSettings& settings);

struct TrackingErrorSummary {
  std::vector<double> per_step;
  double max = 0.0;
  int step = 0;
  AgentId agent = 0;
};

TrackingErrorSummary tracking_error(const SimLog& log);

}  // namespace mlcd
