#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "json.hpp"
#include "mlcd/safety_cert.hpp"
#include "mlcd/scenario.hpp"
#include "support/documents.hpp"
#include "support/fixtures.hpp"

namespace mlcd {
namespace {

using nlohmann::json;
using testing::triangle_json;

json helix_json() { return json::parse(helix67_document()); }

Scenario load(const json& doc) { return load_scenario(doc.dump()); }

void expect_load_error(const json& doc, const std::string& fragment) {
  try {
    load(doc);
    ADD_FAILURE() << "expected InputError containing '" << fragment << "'";
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find(fragment), std::string::npos) << e.what();
  }
}

TEST(Scenario, Helix67Structure) {
  const Scenario& s = testing::helix67();
  EXPECT_EQ(s.name, "helix67");
  EXPECT_EQ(s.team.agent_count, 67);
  EXPECT_EQ(s.team.partition.layer_count(), 3);
  EXPECT_EQ(s.team.partition.primary_count(), 7);
  EXPECT_EQ(s.team.core(), 7);
  EXPECT_EQ(s.team.position(7), Vec3::Zero());
  EXPECT_EQ(s.team.cells.size(), 6u);
  for (const TriangleCell& cell : s.team.cells) EXPECT_EQ(cell.members.size(), 13u);
  EXPECT_EQ(s.bounds_mode, BoundsMode::kExplicit);
  EXPECT_EQ(s.planner.bounds.min, 0.6);
  EXPECT_EQ(s.planner.bounds.max, 5.0);
  EXPECT_EQ(s.trajectory.kind(), ReferenceTrajectory::Kind::kHelix);
  EXPECT_EQ(s.trajectory.duration(), 1000.0);
  EXPECT_EQ(s.sim.initial, InitialState::kMaterial);
  EXPECT_EQ(s.sim.mode, SimMode::kClosedLoop);
  for (const auto& w : s.warnings) EXPECT_EQ(w.severity, ValidationIssue::Severity::kWarning);
  EXPECT_TRUE(builtin_scenario("nope").empty());
  EXPECT_EQ(builtin_scenario("helix67"), helix67_document());
}

TEST(Scenario, ShippedFileMatchesBuiltin) {
  std::ifstream in(std::string(MLCD_SOURCE_DIR) + "/scenarios/helix67.json");
  ASSERT_TRUE(in.good());
  std::ostringstream text;
  text << in.rdbuf();
  EXPECT_EQ(text.str(), helix67_document());
}

TEST(Scenario, SchemaErrors) {
  expect_load_error(json::parse("[]"), "scenario schema");
  EXPECT_THROW(load_scenario("{not json"), InputError);

  json doc = helix_json();
  doc["schema"] = "mlcd-scenario/2";
  expect_load_error(doc, "'schema' is 'mlcd-scenario/2'");

  doc = helix_json();
  doc["extra"] = 1;
  expect_load_error(doc, "extra");

  doc = helix_json();
  doc["team"]["positions"][0] = {1.0, 2.0};
  expect_load_error(doc, "team.positions[0]");

  doc = helix_json();
  doc.erase("trajectory");
  expect_load_error(doc, "trajectory");

  doc = helix_json();
  doc["safety"]["delta"] = "0.1";
  expect_load_error(doc, "safety.delta");

  doc = helix_json();
  doc["qp"]["scaling"] = "other";
  expect_load_error(doc, "qp.scaling");

  doc = helix_json();
  doc["sim"]["dt"] = 0.0;
  expect_load_error(doc, "sim.dt");

  doc = helix_json();
  doc["trajectory"]["kind"] = "circle";
  expect_load_error(doc, "trajectory.kind");
}

TEST(Scenario, StructuralErrors) {
  json doc = triangle_json();
  doc["team"]["layers"][1] = {{"from", 4}, {"to", 7}};
  expect_load_error(doc, "duplicate agent id 4");

  doc = triangle_json();
  doc["team"]["positions"][3] = {0.5, 0.0, 0.0};
  EXPECT_THROW(load(doc), InputError);

  doc = triangle_json();
  doc["team"]["layers"][1] = {{"ids", json::array()}};
  EXPECT_THROW(load(doc), InputError);

  doc = triangle_json();
  doc["team"]["positions"][4] = {10.0, 10.0, 0.0};
  expect_load_error(doc, "agent 5 belongs to no cell");
}

TEST(Scenario, BoundsModes) {
  json doc = triangle_json();
  Scenario s = load(doc);
  EXPECT_EQ(s.bounds_mode, BoundsMode::kSafety);
  const SafetyBounds window = alpha_bounds(s.team);
  PlannerSettings p = resolve_planner(s);
  EXPECT_EQ(p.bounds.min, window.alpha_min);
  EXPECT_EQ(p.bounds.max, window.alpha_max);

  doc["qp"] = {{"bounds", {{"mode", "intersect"}, {"alpha_min", 0.0}, {"alpha_max", 2.0}}}};
  p = resolve_planner(load(doc));
  EXPECT_EQ(p.bounds.min, window.alpha_min);
  EXPECT_EQ(p.bounds.max, 2.0);

  doc["qp"] = {{"bounds", {{"mode", "intersect"}, {"alpha_min", 1000.0}, {"alpha_max", 2000.0}}}};
  EXPECT_THROW(resolve_planner(load(doc)), InputError);

  doc["qp"] = {{"bounds", {{"mode", "explicit"}, {"alpha_min", 0.01}, {"alpha_max", 0.02}}}};
  p = resolve_planner(load(doc));
  EXPECT_EQ(p.bounds.min, 0.01);
  EXPECT_EQ(p.bounds.max, 0.02);

  doc["qp"] = {{"bounds", {{"mode", "safety"}, {"alpha_min", 1.0}}}};
  expect_load_error(doc, "qp.bounds");
}

TEST(Scenario, EmptySafetyWindow) {
  json doc = triangle_json();
  doc["safety"]["a_max"] = 1.5;
  const Scenario s = load(doc);
  try {
    resolve_planner(s);
    ADD_FAILURE() << "expected an empty safety window";
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("alpha_min"), std::string::npos) << e.what();
  }
}

TEST(Scenario, ExplicitWeightsMatchAutomatic) {
  json doc = triangle_json();
  const double third = 1.0 / 3.0;
  // Rows: agents 1..4 carried over, then followers 5..7; columns: agents 1..4.
  json beta = json::array({{1.0, 0.0, 0.0, 0.0},
                           {0.0, 1.0, 0.0, 0.0},
                           {0.0, 0.0, 1.0, 0.0},
                           {0.0, 0.0, 0.0, 1.0},
                           {third, third, 0.0, third},
                           {0.0, third, third, third},
                           {third, 0.0, third, third}});
  doc["weights"] = {{"mode", "explicit"}, {"matrices", {beta}}};
  const Scenario s = load(doc);
  const auto explicit_weights = scenario_weights(s);
  const auto automatic = build_layer_weights(s.team);
  ASSERT_EQ(explicit_weights.size(), automatic.size());
  EXPECT_LE((explicit_weights[0].matrix - automatic[0].matrix).cwiseAbs().maxCoeff(), 1e-15);

  doc["weights"]["matrices"][0][4][0] = 0.3;
  EXPECT_THROW(load(doc), InputError);
  doc["weights"] = {{"mode", "explicit"}, {"matrices", json::array()}};
  EXPECT_THROW(load(doc), InputError);
  doc["weights"] = {{"mode", "auto"}, {"matrices", {beta}}};
  expect_load_error(doc, "weights.matrices");
}

TEST(Scenario, WaypointTrajectory) {
  json doc = triangle_json();
  doc["trajectory"] = {{"kind", "waypoint-spline"},
                       {"waypoints", {{0.0, 0.0, 0.0, 0.0}, {5.0, 1.0, 0.0, 0.0}, {10.0, 1.0, 1.0, 0.0}}}};
  const Scenario s = load(doc);
  EXPECT_EQ(s.trajectory.kind(), ReferenceTrajectory::Kind::kWaypointSpline);
  EXPECT_EQ(s.trajectory.duration(), 10.0);
  EXPECT_LE((s.trajectory.position(5.0) - Vec3(1.0, 0.0, 0.0)).norm(), 1e-15);

  doc["trajectory"]["waypoints"][1] = {5.0, 1.0};
  expect_load_error(doc, "trajectory.waypoints[1]");
}

TEST(Scenario, FileErrors) {
  EXPECT_THROW(load_scenario_file("/nonexistent/scenario.json"), InputError);
  const TeamConfiguration team = load_configuration(triangle_json().dump());
  EXPECT_EQ(team.agent_count, 7);
}

}  // namespace
}  // namespace mlcd
