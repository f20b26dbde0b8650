#include "mlcd/swarm_sim.hpp"

#include <fmt/format.h>

#include "mlcd/geometry.hpp"

namespace mlcd {

AgentState step_agent(const AgentState& state, const Vec3& desired_position,
                      const Vec3& desired_velocity, const ControllerGains& gains, double dt) {
  if (!(dt > 0.0)) throw InputError("nonpositive step: dt must be > 0");
  const Vec3 acceleration = gains.kp * (desired_position - state.position) +
                            gains.kd * (desired_velocity - state.velocity);
  AgentState next;
  next.velocity = state.velocity + dt * acceleration;
  next.position = state.position + dt * next.velocity;
  return next;
}

SimLog run_simulation(const TeamConfiguration& team, const std::vector<LayerWeights>& weights,
                      const ReferenceTrajectory& trajectory, const PlannerSettings& planner,
                      const SimSettings& settings) {
  if (!(settings.gains.kp > 0.0) || !(settings.gains.kd > 0.0)) {
    throw InputError("controller gains must be positive");
  }
  SimLog log;
  log.time = time_grid(trajectory.duration(), settings.dt);
  log.plan = alpha_schedule(team, weights, trajectory, log.time, planner);

  const std::size_t steps = log.time.size();
  log.desired.reserve(steps);
  for (const ScheduleEntry& entry : log.plan) {
    log.desired.push_back(forward_pass(team, weights, entry.alpha, entry.s));
  }

  if (settings.mode == SimMode::kOpenLoop) {
    log.actual = log.desired;
  } else {
    // Desired velocities by forward differences; the last step reuses the
    // previous difference.
    std::vector<Positions> velocity(steps, Positions::Zero(team.agent_count, 3));
    for (std::size_t k = 0; k + 1 < steps; ++k) {
      velocity[k] = (log.desired[k + 1] - log.desired[k]) / (log.time[k + 1] - log.time[k]);
    }
    if (steps > 1) velocity[steps - 1] = velocity[steps - 2];

    std::vector<AgentState> state(static_cast<std::size_t>(team.agent_count));
    for (int i = 0; i < team.agent_count; ++i) {
      auto& s = state[static_cast<std::size_t>(i)];
      if (settings.initial == InitialState::kMaterial) {
        s.position = team.positions[static_cast<std::size_t>(i)];
        s.velocity.setZero();
      } else {
        s.position = log.desired[0].row(i).transpose();
        s.velocity = velocity[0].row(i).transpose();
      }
    }

    log.actual.reserve(steps);
    for (std::size_t k = 0; k < steps; ++k) {
      Positions actual(team.agent_count, 3);
      for (int i = 0; i < team.agent_count; ++i) {
        actual.row(i) = state[static_cast<std::size_t>(i)].position.transpose();
      }
      log.actual.push_back(std::move(actual));
      if (k + 1 == steps) break;
      const double dt = log.time[k + 1] - log.time[k];
      for (int i = 0; i < team.agent_count; ++i) {
        auto& s = state[static_cast<std::size_t>(i)];
        s = step_agent(s, log.desired[k].row(i).transpose(), velocity[k].row(i).transpose(),
                       settings.gains, dt);
      }
    }
  }

  const double delta = team.safety.delta;
  log.min_distance.reserve(steps);
  log.max_tracking_error.reserve(steps);
  for (std::size_t k = 0; k < steps; ++k) {
    const double error = (log.actual[k] - log.desired[k]).rowwise().norm().maxCoeff();
    log.max_tracking_error.push_back(error);
    log.min_distance.push_back(
        team.agent_count >= 2 ? min_pairwise_distance(log.actual[k]).distance : 0.0);
    if (settings.mode == SimMode::kClosedLoop) {
      if (error > settings.divergence_factor * delta) {
        throw NumericalError(fmt::format(
            "controller diverged at step {} (t = {}): tracking error {:.6g} m > {} x delta", k,
            log.time[k], error, settings.divergence_factor));
      }
      if (error > delta) log.flagged_steps.push_back(static_cast<int>(k));
    }
  }
  return log;
}

TrackingErrorSummary tracking_error(const SimLog& log) {
  if (log.time.empty()) throw InputError("tracking_error: empty log");
  TrackingErrorSummary out;
  out.max = -1.0;
  for (std::size_t k = 0; k < log.desired.size(); ++k) {
    Eigen::Index agent = 0;
    const double error = (log.actual[k] - log.desired[k]).rowwise().norm().maxCoeff(&agent);
    out.per_step.push_back(error);
    if (error > out.max) {
      out.max = error;
      out.step = static_cast<int>(k);
      out.agent = static_cast<AgentId>(agent) + 1;
    }
  }
  return out;
}

}  // namespace mlcd
