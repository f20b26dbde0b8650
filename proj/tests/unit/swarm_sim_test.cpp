#include <gtest/gtest.h>

#include "mlcd/swarm_sim.hpp"
#include "support/fixtures.hpp"

namespace mlcd {
namespace {

using testing::helix67;

struct Fixture {
  const Scenario& scenario = helix67();
  std::vector<LayerWeights> weights = build_layer_weights(scenario.team);
  PlannerSettings planner = scenario.planner;

  ReferenceTrajectory helix(double duration) const {
    auto t = scenario.trajectory;
    t.set_duration(duration);
    return t;
  }
};

TEST(StepAgent, StaysOnConstantVelocityTrajectory) {
  const Vec3 v(0.3, -0.2, 0.1);
  AgentState s{Vec3(1, 2, 3), v};
  const double dt = 0.1;
  for (int k = 0; k < 50; ++k) {
    const Vec3 p_des = Vec3(1, 2, 3) + (k * dt) * v;
    s = step_agent(s, p_des, v, {}, dt);
    EXPECT_LT((s.position - (Vec3(1, 2, 3) + ((k + 1) * dt) * v)).norm(), 1e-13);
    EXPECT_LT((s.velocity - v).norm(), 1e-15);
  }
}

TEST(StepAgent, CriticallyDampedErrorDecreases) {
  const ControllerGains gains;
  EXPECT_TRUE(gains.overdamped_or_critical());
  EXPECT_FALSE((ControllerGains{10.0, 1.0}).overdamped_or_critical());
  AgentState s{Vec3(1.0, -0.5, 2.0), Vec3::Zero()};
  double previous = s.position.norm();
  for (int k = 0; k < 100; ++k) {
    s = step_agent(s, Vec3::Zero(), Vec3::Zero(), gains, 0.1);
    const double error = s.position.norm();
    EXPECT_LT(error, previous) << k;
    previous = error;
  }
  // Continuous critically damped response (1 + 2t) e^{-2t} from rest, to O(dt).
  const double t = 10.0;
  EXPECT_NEAR(previous / Vec3(1.0, -0.5, 2.0).norm(), (1 + 2 * t) * std::exp(-2 * t), 1e-5);
}

TEST(StepAgent, NonpositiveStep) {
  try {
    step_agent({}, Vec3::Zero(), Vec3::Zero(), {}, 0.0);
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("nonpositive step"), std::string::npos);
  }
}

TEST(RunSimulation, OpenLoopReproducesForwardPass) {
  Fixture f;
  SimSettings sim;
  sim.mode = SimMode::kOpenLoop;
  const auto log = run_simulation(f.scenario.team, f.weights, f.helix(5.0), f.planner, sim);
  ASSERT_EQ(log.step_count(), 51);
  EXPECT_EQ(log.agent_count(), 67);
  for (int k = 0; k < log.step_count(); ++k) {
    const auto& e = log.plan[k];
    EXPECT_EQ(log.desired[k], forward_pass(f.scenario.team, f.weights, e.alpha, e.s));
    EXPECT_EQ(log.actual[k], log.desired[k]);
    EXPECT_EQ(log.max_tracking_error[k], 0.0);
  }
  EXPECT_TRUE(log.flagged_steps.empty());
  const auto summary = tracking_error(log);
  EXPECT_EQ(summary.max, 0.0);
  for (double e : summary.per_step) EXPECT_EQ(e, 0.0);
}

TEST(RunSimulation, ZeroDurationHasOnlyTheInitialRecord) {
  Fixture f;
  SimSettings sim;
  const auto log = run_simulation(f.scenario.team, f.weights, f.helix(0.0), f.planner, sim);
  EXPECT_EQ(log.step_count(), 1);
  EXPECT_EQ(log.time, std::vector<double>{0.0});
  EXPECT_EQ(log.actual[0], log.desired[0]);
}

TEST(RunSimulation, MaterialStartConvergesAndIsFlaggedEarly) {
  Fixture f;
  SimSettings sim = f.scenario.sim;
  ASSERT_EQ(sim.initial, InitialState::kMaterial);
  const auto log = run_simulation(f.scenario.team, f.weights, f.helix(30.0), f.planner, sim);
  for (int i = 0; i < 67; ++i) {
    EXPECT_EQ(log.actual[0].row(i).transpose(), f.scenario.team.positions[i]);
  }
  ASSERT_FALSE(log.flagged_steps.empty());
  EXPECT_EQ(log.flagged_steps.front(), 0);
  for (int k : log.flagged_steps) EXPECT_LT(log.time[k], sim.transient);
  EXPECT_LT(log.max_tracking_error.back(), 1e-3);
  for (std::size_t k = 0; k < log.time.size(); ++k) {
    EXPECT_EQ(log.min_distance[k], testing::brute_force_min_distance(log.actual[k]));
  }
}

TEST(RunSimulation, Deterministic) {
  Fixture f;
  const SimSettings sim = f.scenario.sim;
  const auto a = run_simulation(f.scenario.team, f.weights, f.helix(10.0), f.planner, sim);
  const auto b = run_simulation(f.scenario.team, f.weights, f.helix(10.0), f.planner, sim);
  ASSERT_EQ(a.step_count(), b.step_count());
  for (int k = 0; k < a.step_count(); ++k) {
    EXPECT_EQ(a.actual[k], b.actual[k]);
    EXPECT_EQ(a.desired[k], b.desired[k]);
  }
}

TEST(RunSimulation, HalvingTheStepConverges) {
  Fixture f;
  SimSettings sim = f.scenario.sim;
  std::vector<Positions> finals;
  for (double dt : {0.1, 0.05, 0.025, 0.0125}) {
    sim.dt = dt;
    finals.push_back(run_simulation(f.scenario.team, f.weights, f.helix(5.0), f.planner, sim).actual.back());
  }
  const double d1 = (finals[0] - finals[1]).norm();
  const double d2 = (finals[1] - finals[2]).norm();
  const double d3 = (finals[2] - finals[3]).norm();
  EXPECT_LT(d2, d1);
  EXPECT_LT(d3, d2);
}

TEST(RunSimulation, StiffGainsTrackWithinDelta) {
  Fixture f;
  SimSettings sim;
  sim.dt = 0.01;
  sim.gains = {400.0, 40.0};
  sim.initial = InitialState::kMaterial;
  const auto log = run_simulation(f.scenario.team, f.weights, f.helix(20.0), f.planner, sim);
  for (std::size_t k = 0; k < log.time.size(); ++k) {
    if (log.time[k] >= 10.0) EXPECT_LE(log.max_tracking_error[k], f.scenario.team.safety.delta);
  }
}

TEST(RunSimulation, DivergenceAborts) {
  Fixture f;
  auto team = f.scenario.team;
  team.safety.delta = 0.01;  // 100 δ = 1 m, below the initial offset
  SimSettings sim = f.scenario.sim;
  try {
    run_simulation(team, f.weights, f.helix(5.0), f.planner, sim);
    FAIL();
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("diverged at step 0"), std::string::npos) << e.what();
  }
}

TEST(RunSimulation, Errors) {
  Fixture f;
  SimSettings sim;
  sim.gains.kp = 0.0;
  EXPECT_THROW(run_simulation(f.scenario.team, f.weights, f.helix(1.0), f.planner, sim), InputError);
  sim = {};
  sim.dt = 0.3;
  EXPECT_THROW(run_simulation(f.scenario.team, f.weights, f.helix(1.0), f.planner, sim), InputError);
}

TEST(TrackingError, LocatesTheWorstAgent) {
  SimLog log;
  log.time = {0.0, 0.1, 0.2};
  for (int k = 0; k < 3; ++k) log.desired.push_back(Positions::Zero(4, 3));
  log.actual = log.desired;
  log.actual[1](2, 1) = 0.05;
  log.actual[2](0, 0) = -0.01;
  const auto s = tracking_error(log);
  EXPECT_EQ(s.max, 0.05);
  EXPECT_EQ(s.step, 1);
  EXPECT_EQ(s.agent, 3);
  EXPECT_EQ(s.per_step, (std::vector<double>{0.0, 0.05, 0.01}));
  EXPECT_THROW(tracking_error(SimLog{}), InputError);
}

}  // namespace
}  // namespace mlcd
