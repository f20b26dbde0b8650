#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "mlcd/hierarchy.hpp"
#include "mlcd/qp_planner.hpp"
#include "mlcd/swarm_sim.hpp"
#include "mlcd/team_model.hpp"
#include "mlcd/trajectory.hpp"

namespace mlcd {

inline constexpr const char* kScenarioSchema = "mlcd-scenario/1";

struct WeightsSpec {
  bool automatic = true;
  std::vector<Eigen::MatrixXd> matrices;  // β_2 .. β_p when explicit
};

enum class BoundsMode {
  kExplicit,   // qp.bounds.alpha_min / alpha_max as given
  kSafety,     // computed safety window
  kIntersect,  // explicit ∩ safety window
};

struct Scenario {
  std::string name;
  TeamConfiguration team;
  std::vector<ValidationIssue> warnings;
  WeightsSpec weights;
  BoundsMode bounds_mode = BoundsMode::kExplicit;
  PlannerSettings planner;  // bounds hold the explicit values, if any
  ReferenceTrajectory trajectory;
  SimSettings sim;
};

// Parses and validates a scenario document (JSON). Throws InputError.
Scenario load_scenario(std::string_view document);
Scenario load_scenario_file(const std::string& path);

// Only the `team` and `safety` sections.
TeamConfiguration load_configuration(std::string_view document);

// Built-in scenarios by name (currently "helix67"); empty when unknown.
std::string builtin_scenario(std::string_view name);

// The 67-agent helix scenario: 6 boundary leaders + core, one interior
// leader per cell at its centroid, nine followers per cell on a barycentric
// grid.
std::string helix67_document();

std::vector<LayerWeights> scenario_weights(const Scenario& scenario);

// Planner settings with bounds resolved per bounds_mode. Always evaluates
// the safety window, so an empty window throws even in explicit mode.
PlannerSettings resolve_planner(const Scenario& scenario);

}  // namespace mlcd
