#include "mlcd/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include "json.hpp"

#include "mlcd/safety_cert.hpp"

namespace mlcd {
namespace {

using nlohmann::json;

[[noreturn]] void schema_error(const std::string& path, const std::string& what) {
  throw InputError(fmt::format("scenario schema: '{}' {}", path, what));
}

void allow_keys(const json& obj, const std::string& path, std::initializer_list<const char*> keys) {
  if (!obj.is_object()) schema_error(path, "must be an object");
  for (const auto& [key, value] : obj.items()) {
    if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return key == k; })) {
      schema_error(path.empty() ? key : path + "." + key, "is not a recognized key");
    }
  }
}

const json* find(const json& obj, const char* key) {
  const auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

const json& require(const json& obj, const std::string& path, const char* key) {
  const json* value = find(obj, key);
  if (value == nullptr) schema_error(path.empty() ? key : path + "." + key, "is missing");
  return *value;
}

double as_real(const json& value, const std::string& path) {
  if (!value.is_number()) schema_error(path, "must be a number");
  return value.get<double>();
}

int as_int(const json& value, const std::string& path) {
  if (!value.is_number_integer()) schema_error(path, "must be an integer");
  return value.get<int>();
}

std::string as_string(const json& value, const std::string& path) {
  if (!value.is_string()) schema_error(path, "must be a string");
  return value.get<std::string>();
}

double real_or(const json& obj, const std::string& path, const char* key, double fallback) {
  const json* value = find(obj, key);
  return value == nullptr ? fallback : as_real(*value, path + "." + key);
}

Vec3 as_triple(const json& value, const std::string& path) {
  if (!value.is_array() || value.size() != 3) schema_error(path, "must be a triple [x, y, z]");
  return {as_real(value[0], path + "[0]"), as_real(value[1], path + "[1]"),
          as_real(value[2], path + "[2]")};
}

std::vector<AgentId> as_ids(const json& value, const std::string& path) {
  if (!value.is_array()) schema_error(path, "must be an array of agent ids");
  std::vector<AgentId> ids;
  for (std::size_t i = 0; i < value.size(); ++i) {
    ids.push_back(as_int(value[i], fmt::format("{}[{}]", path, i)));
  }
  return ids;
}

json parse(std::string_view document) {
  try {
    return json::parse(document.begin(), document.end());
  } catch (const json::parse_error& e) {
    throw InputError(fmt::format("scenario is not valid JSON: {}", e.what()));
  }
}

json check_root(std::string_view document) {
  json root = parse(document);
  allow_keys(root, "", {"schema", "name", "team", "safety", "weights", "qp", "trajectory", "sim"});
  const std::string schema = as_string(require(root, "", "schema"), "schema");
  if (schema != kScenarioSchema) {
    schema_error("schema", fmt::format("is '{}', expected '{}'", schema, kScenarioSchema));
  }
  return root;
}

TeamConfiguration parse_team(const json& root) {
  const json& team = require(root, "", "team");
  allow_keys(team, "team", {"N", "layers", "positions", "cells"});
  const int n = as_int(require(team, "team", "N"), "team.N");
  if (n < 1) schema_error("team.N", "must be positive");

  LayerPartition partition;
  const json& layers = require(team, "team", "layers");
  if (!layers.is_array() || layers.empty()) schema_error("team.layers", "must be a nonempty array");
  std::set<AgentId> seen;
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const std::string path = fmt::format("team.layers[{}]", k);
    const json& layer = layers[k];
    std::vector<AgentId> ids;
    if (layer.is_object() && layer.contains("ids")) {
      allow_keys(layer, path, {"ids"});
      ids = as_ids(layer["ids"], path + ".ids");
    } else {
      allow_keys(layer, path, {"from", "to"});
      const int from = as_int(require(layer, path, "from"), path + ".from");
      const int to = as_int(require(layer, path, "to"), path + ".to");
      for (int id = from; id <= to; ++id) ids.push_back(id);
    }
    for (AgentId id : ids) {
      if (!seen.insert(id).second) throw InputError(fmt::format("duplicate agent id {}", id));
    }
    partition.new_agents.push_back(std::move(ids));
  }

  const json& positions_json = require(team, "team", "positions");
  if (!positions_json.is_array()) schema_error("team.positions", "must be an array of triples");
  std::vector<Vec3> positions;
  for (std::size_t i = 0; i < positions_json.size(); ++i) {
    positions.push_back(as_triple(positions_json[i], fmt::format("team.positions[{}]", i)));
  }

  std::vector<std::vector<AgentId>> memberships;
  if (const json* cells = find(team, "cells")) {
    if (!cells->is_array()) schema_error("team.cells", "must be an array");
    for (std::size_t j = 0; j < cells->size(); ++j) {
      const std::string path = fmt::format("team.cells[{}]", j);
      allow_keys((*cells)[j], path, {"members"});
      memberships.push_back(as_ids(require((*cells)[j], path, "members"), path + ".members"));
    }
  }

  const json& safety_json = require(root, "", "safety");
  allow_keys(safety_json, "safety", {"delta", "epsilon", "a_max", "a0"});
  SafetyParameters safety;
  safety.delta = as_real(require(safety_json, "safety", "delta"), "safety.delta");
  safety.epsilon = as_real(require(safety_json, "safety", "epsilon"), "safety.epsilon");
  safety.a_max = as_real(require(safety_json, "safety", "a_max"), "safety.a_max");
  if (const json* a0 = find(safety_json, "a0")) safety.a0 = as_real(*a0, "safety.a0");

  return make_team(n, std::move(partition), std::move(positions), safety, memberships);
}

Eigen::MatrixXd as_matrix(const json& value, const std::string& path) {
  if (!value.is_array() || value.empty()) schema_error(path, "must be a nonempty array of rows");
  const std::size_t cols = value[0].is_array() ? value[0].size() : 0;
  Eigen::MatrixXd m(static_cast<Eigen::Index>(value.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < value.size(); ++r) {
    const std::string row_path = fmt::format("{}[{}]", path, r);
    if (!value[r].is_array() || value[r].size() != cols) {
      schema_error(row_path, fmt::format("must be a row of {} numbers", cols));
    }
    for (std::size_t c = 0; c < cols; ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          as_real(value[r][c], fmt::format("{}[{}]", row_path, c));
    }
  }
  return m;
}

WeightsSpec parse_weights(const json& root) {
  WeightsSpec spec;
  const json* weights = find(root, "weights");
  if (weights == nullptr) return spec;
  allow_keys(*weights, "weights", {"mode", "matrices"});
  const std::string mode = as_string(require(*weights, "weights", "mode"), "weights.mode");
  if (mode == "auto") {
    if (weights->contains("matrices")) schema_error("weights.matrices", "is only valid in explicit mode");
    return spec;
  }
  if (mode != "explicit") schema_error("weights.mode", "must be \"auto\" or \"explicit\"");
  spec.automatic = false;
  const json& matrices = require(*weights, "weights", "matrices");
  if (!matrices.is_array()) schema_error("weights.matrices", "must be an array of matrices");
  for (std::size_t k = 0; k < matrices.size(); ++k) {
    spec.matrices.push_back(as_matrix(matrices[k], fmt::format("weights.matrices[{}]", k)));
  }
  return spec;
}

void parse_qp(const json& root, Scenario& scenario) {
  scenario.bounds_mode = BoundsMode::kSafety;
  const json* qp = find(root, "qp");
  if (qp == nullptr) return;
  allow_keys(*qp, "qp", {"zeta", "scaling", "bounds", "tolerance", "average_over"});
  PlannerSettings& p = scenario.planner;
  p.zeta = real_or(*qp, "qp", "zeta", p.zeta);
  p.tolerance = real_or(*qp, "qp", "tolerance", p.tolerance);
  if (!(p.tolerance > 0.0)) schema_error("qp.tolerance", "must be positive");
  if (const json* scaling = find(*qp, "scaling")) {
    const std::string s = as_string(*scaling, "qp.scaling");
    if (s == "consistent") {
      p.mode = ScalingMode::kConsistent;
    } else if (s == "paper-exact") {
      p.mode = ScalingMode::kHalfQuadratic;
    } else {
      schema_error("qp.scaling", "must be \"consistent\" or \"paper-exact\"");
    }
  }
  if (const json* avg = find(*qp, "average_over")) {
    const std::string s = as_string(*avg, "qp.average_over");
    if (s == "all") {
      p.averaging = AveragingSet::kAllAgents;
    } else if (s == "new") {
      p.averaging = AveragingSet::kNewAgents;
    } else {
      schema_error("qp.average_over", "must be \"all\" or \"new\"");
    }
  }
  if (const json* bounds = find(*qp, "bounds")) {
    allow_keys(*bounds, "qp.bounds", {"mode", "alpha_min", "alpha_max"});
    const std::string mode = as_string(require(*bounds, "qp.bounds", "mode"), "qp.bounds.mode");
    if (mode == "safety") {
      scenario.bounds_mode = BoundsMode::kSafety;
      if (bounds->contains("alpha_min") || bounds->contains("alpha_max")) {
        schema_error("qp.bounds", "takes no alpha_min/alpha_max in safety mode");
      }
      return;
    }
    if (mode == "explicit") {
      scenario.bounds_mode = BoundsMode::kExplicit;
    } else if (mode == "intersect") {
      scenario.bounds_mode = BoundsMode::kIntersect;
    } else {
      schema_error("qp.bounds.mode", "must be \"explicit\", \"safety\" or \"intersect\"");
    }
    p.bounds.min = as_real(require(*bounds, "qp.bounds", "alpha_min"), "qp.bounds.alpha_min");
    p.bounds.max = as_real(require(*bounds, "qp.bounds", "alpha_max"), "qp.bounds.alpha_max");
  }
}

ReferenceTrajectory parse_trajectory(const json& root) {
  const json& tr = require(root, "", "trajectory");
  if (!tr.is_object()) schema_error("trajectory", "must be an object");
  const std::string kind = as_string(require(tr, "trajectory", "kind"), "trajectory.kind");
  if (kind == "helix") {
    allow_keys(tr, "trajectory", {"kind", "omega", "amplitudes", "T"});
    HelixParameters params;
    params.omega = real_or(tr, "trajectory", "omega", params.omega);
    if (const json* amp = find(tr, "amplitudes")) {
      params.amplitudes = as_triple(*amp, "trajectory.amplitudes");
    }
    return ReferenceTrajectory::helix(params, as_real(require(tr, "trajectory", "T"), "trajectory.T"));
  }
  if (kind == "waypoint-spline") {
    allow_keys(tr, "trajectory", {"kind", "waypoints", "T"});
    const json& wps = require(tr, "trajectory", "waypoints");
    if (!wps.is_array()) schema_error("trajectory.waypoints", "must be an array of [t, x, y, z]");
    std::vector<Waypoint> waypoints;
    for (std::size_t i = 0; i < wps.size(); ++i) {
      const std::string path = fmt::format("trajectory.waypoints[{}]", i);
      if (!wps[i].is_array() || wps[i].size() != 4) schema_error(path, "must be [t, x, y, z]");
      waypoints.push_back({as_real(wps[i][0], path + "[0]"),
                           Vec3(as_real(wps[i][1], path + "[1]"), as_real(wps[i][2], path + "[2]"),
                                as_real(wps[i][3], path + "[3]"))});
    }
    auto out = ReferenceTrajectory::waypoint_spline(std::move(waypoints));
    if (const json* t = find(tr, "T")) out.set_duration(as_real(*t, "trajectory.T"));
    return out;
  }
  schema_error("trajectory.kind", "must be \"helix\" or \"waypoint-spline\"");
}

SimSettings parse_sim(const json& root) {
  SimSettings sim;
  const json* s = find(root, "sim");
  if (s == nullptr) return sim;
  allow_keys(*s, "sim", {"dt", "kp", "kd", "mode", "initial_state", "transient", "divergence_factor"});
  sim.dt = real_or(*s, "sim", "dt", sim.dt);
  sim.gains.kp = real_or(*s, "sim", "kp", sim.gains.kp);
  sim.gains.kd = real_or(*s, "sim", "kd", sim.gains.kd);
  sim.transient = real_or(*s, "sim", "transient", sim.transient);
  sim.divergence_factor = real_or(*s, "sim", "divergence_factor", sim.divergence_factor);
  if (!(sim.dt > 0.0)) schema_error("sim.dt", "must be positive");
  if (!(sim.gains.kp > 0.0) || !(sim.gains.kd > 0.0)) schema_error("sim", "gains must be positive");
  if (!(sim.transient >= 0.0)) schema_error("sim.transient", "must be >= 0");
  if (!(sim.divergence_factor > 1.0)) schema_error("sim.divergence_factor", "must be > 1");
  if (const json* mode = find(*s, "mode")) {
    const std::string m = as_string(*mode, "sim.mode");
    if (m == "closed-loop") {
      sim.mode = SimMode::kClosedLoop;
    } else if (m == "open-loop") {
      sim.mode = SimMode::kOpenLoop;
    } else {
      schema_error("sim.mode", "must be \"closed-loop\" or \"open-loop\"");
    }
  }
  if (const json* init = find(*s, "initial_state")) {
    const std::string m = as_string(*init, "sim.initial_state");
    if (m == "desired") {
      sim.initial = InitialState::kDesired;
    } else if (m == "material") {
      sim.initial = InitialState::kMaterial;
    } else {
      schema_error("sim.initial_state", "must be \"desired\" or \"material\"");
    }
  }
  return sim;
}

}  // namespace

Scenario load_scenario(std::string_view document) {
  const json root = check_root(document);
  Scenario scenario;
  if (const json* name = find(root, "name")) scenario.name = as_string(*name, "name");
  scenario.team = parse_team(root);
  scenario.warnings = validate_team(scenario.team).warnings();
  scenario.weights = parse_weights(root);
  parse_qp(root, scenario);
  scenario.trajectory = parse_trajectory(root);
  scenario.sim = parse_sim(root);
  // Weights are checked eagerly so a bad matrix fails at load time.
  scenario_weights(scenario);
  return scenario;
}

Scenario load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError(fmt::format("cannot open scenario file '{}'", path));
  std::ostringstream buffer;
  buffer << in.rdbuf();
  Scenario scenario = load_scenario(buffer.str());
  if (scenario.name.empty()) scenario.name = path;
  return scenario;
}

TeamConfiguration load_configuration(std::string_view document) {
  return parse_team(check_root(document));
}

std::string builtin_scenario(std::string_view name) {
  if (name == "helix67") return helix67_document();
  return {};
}

std::string helix67_document() {
  const std::array<Vec3, 6> leaders{Vec3(20, 0, -1),  Vec3(10, 10, 1),  Vec3(-10, 10, 1),
                                    Vec3(-20, 0, -1), Vec3(-10, -10, 1), Vec3(10, -10, 1)};
  const auto grid_point = [&](int cell, int i, int j) -> Vec3 {
    const Vec3& a = leaders[static_cast<std::size_t>(cell)];
    const Vec3& b = leaders[static_cast<std::size_t>((cell + 1) % 6)];
    return (static_cast<double>(i) * a + static_cast<double>(j) * b) / 6.0;
  };

  std::vector<Vec3> positions(leaders.begin(), leaders.end());
  positions.push_back(Vec3::Zero());
  for (int cell = 0; cell < 6; ++cell) positions.push_back(grid_point(cell, 2, 2));
  for (int cell = 0; cell < 6; ++cell) {
    for (int i = 1; i <= 4; ++i) {
      for (int j = 1; i + j <= 5; ++j) {
        if (i == 2 && j == 2) continue;
        positions.push_back(grid_point(cell, i, j));
      }
    }
  }

  json pos = json::array();
  for (const Vec3& p : positions) pos.push_back({p.x(), p.y(), p.z()});

  json doc = {
      {"schema", kScenarioSchema},
      {"name", "helix67"},
      {"team",
       {{"N", static_cast<int>(positions.size())},
        {"layers",
         json::array({{{"from", 1}, {"to", 7}}, {{"from", 8}, {"to", 13}}, {{"from", 14}, {"to", 67}}})},
        {"positions", pos}}},
      {"safety", {{"delta", 0.1}, {"epsilon", 0.4}, {"a_max", 102.0}}},
      {"weights", {{"mode", "auto"}}},
      {"qp",
       {{"zeta", 1e-6},
        {"scaling", "consistent"},
        {"tolerance", 1e-8},
        {"average_over", "all"},
        {"bounds", {{"mode", "explicit"}, {"alpha_min", 0.6}, {"alpha_max", 5.0}}}}},
      {"trajectory", {{"kind", "helix"}, {"omega", 0.01}, {"amplitudes", {0.4, 0.4, 0.6}}, {"T", 1000.0}}},
      {"sim",
       {{"dt", 0.1},
        {"kp", 4.0},
        {"kd", 4.0},
        {"mode", "closed-loop"},
        {"initial_state", "material"},
        {"transient", 10.0}}},
  };
  return doc.dump(2) + "\n";
}

std::vector<LayerWeights> scenario_weights(const Scenario& scenario) {
  if (scenario.weights.automatic) return build_layer_weights(scenario.team);
  return explicit_layer_weights(scenario.team, scenario.weights.matrices);
}

PlannerSettings resolve_planner(const Scenario& scenario) {
  PlannerSettings settings = scenario.planner;
  const SafetyBounds window = alpha_bounds(scenario.team);
  switch (scenario.bounds_mode) {
    case BoundsMode::kExplicit:
      break;
    case BoundsMode::kSafety:
      settings.bounds = {window.alpha_min, window.alpha_max};
      break;
    case BoundsMode::kIntersect:
      settings.bounds = {std::max(settings.bounds.min, window.alpha_min),
                         std::min(settings.bounds.max, window.alpha_max)};
      if (settings.bounds.min > settings.bounds.max) {
        throw InputError(fmt::format(
            "explicit alpha bounds do not intersect the safety window [{:.6g}, {:.6g}]",
            window.alpha_min, window.alpha_max));
      }
      break;
  }
  return settings;
}

}  // namespace mlcd
