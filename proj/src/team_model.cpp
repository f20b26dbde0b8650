#include "mlcd/team_model.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "mlcd/geometry.hpp"

namespace mlcd {
namespace {

Positions stack(const std::vector<Vec3>& positions) {
  Positions out(static_cast<Eigen::Index>(positions.size()), 3);
  for (std::size_t i = 0; i < positions.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = positions[i].transpose();
  }
  return out;
}

bool cell_is_degenerate(const Vec3& d1, const Vec3& d2) {
  const double scale = d1.squaredNorm() * d2.squaredNorm();
  return scale == 0.0 || d1.cross(d2).squaredNorm() <= 1e-24 * scale;
}

void add(ValidationReport& report, const char* code, std::string message,
         ValidationIssue::Severity severity = ValidationIssue::Severity::kError) {
  report.issues.push_back({severity, code, std::move(message)});
}

// Partition, positions and safety parameters. Cells are checked separately
// because they can only be built once these hold.
void validate_structure(const TeamConfiguration& team, ValidationReport& report) {
  const int n = team.agent_count;
  const auto& layers = team.partition.new_agents;

  if (layers.empty()) {
    add(report, issue::kEmptyLayer, "partition has no layers");
  }
  std::vector<int> seen(static_cast<std::size_t>(std::max(n, 0)) + 1, 0);
  for (std::size_t k = 0; k < layers.size(); ++k) {
    if (layers[k].empty()) {
      add(report, issue::kEmptyLayer, fmt::format("layer {} introduces no agents", k + 1));
    }
    for (AgentId id : layers[k]) {
      if (id < 1 || id > n) {
        add(report, issue::kIdOutOfRange, fmt::format("agent {} is outside 1..{}", id, n));
        continue;
      }
      if (++seen[static_cast<std::size_t>(id)] == 2) {
        add(report, issue::kPartitionOverlap,
            fmt::format("agent {} appears in more than one layer", id));
      }
    }
  }
  for (int id = 1; id <= n; ++id) {
    if (seen[static_cast<std::size_t>(id)] == 0) {
      add(report, issue::kPartitionGap, fmt::format("agent {} is in no layer", id));
    }
  }
  if (!layers.empty() && layers.front().size() < 4) {
    add(report, issue::kTooFewLeaders,
        fmt::format("W_1 needs >= 3 boundary leaders plus the core, has {} agents",
                    layers.front().size()));
  }

  if (static_cast<int>(team.positions.size()) != n) {
    add(report, issue::kPositionCount,
        fmt::format("{} positions given for {} agents", team.positions.size(), n));
  }
  for (std::size_t i = 0; i < team.positions.size(); ++i) {
    if (!team.positions[i].allFinite()) {
      add(report, issue::kNonFinite, fmt::format("agent {} has a non-finite position", i + 1));
    }
  }

  const bool positions_usable = static_cast<int>(team.positions.size()) == n;
  if (positions_usable && !layers.empty() && !layers.front().empty()) {
    const AgentId core = team.core();
    if (core >= 1 && core <= n && team.position(core) != Vec3::Zero()) {
      add(report, issue::kCoreNotAtOrigin,
          fmt::format("core must be at origin; agent {} is at ({}, {}, {})", core,
                      team.position(core).x(), team.position(core).y(), team.position(core).z()));
    }
    for (AgentId id : team.boundary_leaders()) {
      if (id >= 1 && id <= n && team.position(id).norm() == 0.0) {
        add(report, issue::kBoundaryAtOrigin,
            fmt::format("boundary leader {} has a zero reference position", id));
      }
    }
  }

  const auto& s = team.safety;
  if (!(s.delta > 0.0) || !(s.epsilon > 0.0) || !(s.a_max > 0.0)) {
    add(report, issue::kSafetyParameters, "delta, epsilon and a_max must be strictly positive");
  } else if (!(s.a_max > 2.0 * (s.delta + s.epsilon))) {
    add(report, issue::kSafetyParameters, "a_max must exceed 2(delta + epsilon)");
  }
  if (s.a0 && !(*s.a0 > 0.0)) {
    add(report, issue::kSafetyParameters, "a0 must be strictly positive");
  }
}

void validate_cells(const TeamConfiguration& team, ValidationReport& report) {
  const auto boundary = team.boundary_leaders();
  const auto& w1 = team.partition.new_agents.front();
  if (team.cells.size() != boundary.size()) {
    add(report, issue::kCellCount,
        fmt::format("expected {} cells, found {}", boundary.size(), team.cells.size()));
  }

  std::vector<bool> covered(static_cast<std::size_t>(team.agent_count) + 1, false);
  for (const TriangleCell& cell : team.cells) {
    for (AgentId v : cell.vertices) {
      if (std::find(w1.begin(), w1.end(), v) == w1.end()) {
        add(report, issue::kCellVertices,
            fmt::format("cell {} vertex {} is not a primary leader", cell.id, v));
      }
    }
    const Vec3 d1 = team.position(cell.vertices[1]) - team.position(cell.vertices[0]);
    const Vec3 d2 = team.position(cell.vertices[2]) - team.position(cell.vertices[0]);
    if (cell_is_degenerate(d1, d2)) {
      add(report, issue::kDegenerateCell,
          fmt::format("cell {} has collinear vertices", cell.id));
      continue;
    }
    for (AgentId id : cell.members) {
      if (id < 1 || id > team.agent_count) {
        add(report, issue::kIdOutOfRange, fmt::format("cell {} lists agent {}", cell.id, id));
        continue;
      }
      covered[static_cast<std::size_t>(id)] = true;
      if (!cell_contains(team, cell, team.position(id))) {
        add(report, issue::kCellContainment,
            fmt::format("agent {} lies outside cell {}", id, cell.id));
      }
    }
    if (cell.members.size() < 2) {
      add(report, issue::kCellSeparation, fmt::format("cell {} has fewer than 2 members", cell.id));
    } else if (!(cell.p_min > 0.0)) {
      add(report, issue::kCellSeparation, fmt::format("cell {} has coincident agents", cell.id));
    }
  }
  for (int id = 1; id <= team.agent_count; ++id) {
    if (!covered[static_cast<std::size_t>(id)]) {
      add(report, issue::kCellCoverage, fmt::format("agent {} belongs to no cell", id));
    }
  }

  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (AgentId id : boundary) {
    const double m = team.position(id).norm();
    lo = std::min(lo, m);
    hi = std::max(hi, m);
  }
  if (lo > 0.0 && hi > 1.01 * lo) {
    add(report, issue::kUnequalLeaderMagnitudes,
        fmt::format("boundary-leader reference magnitudes range over [{:.6g}, {:.6g}]; "
                    "a0 is taken as the maximum",
                    lo, hi),
        ValidationIssue::Severity::kWarning);
  }
}

}  // namespace

std::vector<AgentId> LayerPartition::nested(int k) const {
  if (k < 1 || k > layer_count()) {
    throw InputError(fmt::format("layer {} is outside 1..{}", k, layer_count()));
  }
  std::vector<AgentId> ids;
  for (int i = 0; i < k; ++i) {
    ids.insert(ids.end(), new_agents[static_cast<std::size_t>(i)].begin(),
               new_agents[static_cast<std::size_t>(i)].end());
  }
  return ids;
}

AgentId TeamConfiguration::core() const {
  if (partition.new_agents.empty() || partition.new_agents.front().empty()) {
    throw InputError("team has no primary leaders");
  }
  return partition.new_agents.front().back();
}

std::vector<AgentId> TeamConfiguration::boundary_leaders() const {
  if (partition.new_agents.empty() || partition.new_agents.front().empty()) return {};
  const auto& w1 = partition.new_agents.front();
  return {w1.begin(), w1.end() - 1};
}

int TeamConfiguration::primary_index(AgentId id) const {
  if (partition.new_agents.empty()) return -1;
  const auto& w1 = partition.new_agents.front();
  const auto it = std::find(w1.begin(), w1.end(), id);
  return it == w1.end() ? -1 : static_cast<int>(it - w1.begin());
}

double TeamConfiguration::reference_magnitude() const {
  if (safety.a0) return *safety.a0;
  double a0 = 0.0;
  for (AgentId id : boundary_leaders()) a0 = std::max(a0, position(id).norm());
  return a0;
}

bool ValidationReport::ok() const {
  return std::none_of(issues.begin(), issues.end(), [](const ValidationIssue& i) {
    return i.severity == ValidationIssue::Severity::kError;
  });
}

bool ValidationReport::has(const std::string& code) const {
  return std::any_of(issues.begin(), issues.end(),
                     [&](const ValidationIssue& i) { return i.code == code; });
}

std::vector<ValidationIssue> ValidationReport::errors() const {
  std::vector<ValidationIssue> out;
  std::copy_if(issues.begin(), issues.end(), std::back_inserter(out), [](const auto& i) {
    return i.severity == ValidationIssue::Severity::kError;
  });
  return out;
}

std::vector<ValidationIssue> ValidationReport::warnings() const {
  std::vector<ValidationIssue> out;
  std::copy_if(issues.begin(), issues.end(), std::back_inserter(out), [](const auto& i) {
    return i.severity == ValidationIssue::Severity::kWarning;
  });
  return out;
}

std::string ValidationReport::summary() const {
  std::string out;
  for (const auto& i : issues) {
    if (!out.empty()) out += "; ";
    out += fmt::format("{}: {}", i.code, i.message);
  }
  return out;
}

ValidationReport validate_team(const TeamConfiguration& team) {
  ValidationReport report;
  validate_structure(team, report);
  if (report.ok()) validate_cells(team, report);
  return report;
}

PlaneCoordinates cell_plane_coordinates(const TeamConfiguration& team, const TriangleCell& cell,
                                        const Vec3& point) {
  const Vec3 origin = team.position(cell.vertices[0]);
  const Vec3 d1 = team.position(cell.vertices[1]) - origin;
  const Vec3 d2 = team.position(cell.vertices[2]) - origin;
  if (cell_is_degenerate(d1, d2)) {
    throw InputError(fmt::format("cell {} has collinear vertices", cell.id));
  }
  const Vec3 x = point - origin;
  Eigen::Matrix2d gram;
  gram << d1.dot(d1), d1.dot(d2), d1.dot(d2), d2.dot(d2);
  const Eigen::Vector2d rhs(d1.dot(x), d2.dot(x));
  const Eigen::Vector2d uv = gram.ldlt().solve(rhs);
  const Vec3 normal = d1.cross(d2).normalized();

  PlaneCoordinates out;
  out.u = uv.x();
  out.v = uv.y();
  out.normal_offset = (x - out.u * d1 - out.v * d2).dot(normal);
  return out;
}

bool cell_contains(const TeamConfiguration& team, const TriangleCell& cell, const Vec3& point,
                   double tolerance) {
  const PlaneCoordinates c = cell_plane_coordinates(team, cell, point);
  return c.u >= -tolerance && c.v >= -tolerance && 1.0 - c.u - c.v >= -tolerance;
}

int enclosing_triangle(const TeamConfiguration& team, const Vec3& point) {
  for (const TriangleCell& cell : team.cells) {
    if (cell_contains(team, cell, point)) return cell.id;
  }
  throw InputError(fmt::format("point ({}, {}, {}) is outside leading polygon", point.x(),
                               point.y(), point.z()));
}

double triangle_min_separation(const TeamConfiguration& team, int cell_id) {
  if (cell_id < 1 || cell_id > static_cast<int>(team.cells.size())) {
    throw InputError(fmt::format("no cell with id {}", cell_id));
  }
  const TriangleCell& cell = team.cell(cell_id);
  if (cell.members.size() < 2) {
    throw InputError(fmt::format("cell {} has fewer than 2 members", cell_id));
  }
  const PairDistance pair = min_pairwise_distance(stack(team.positions), cell.members);
  if (!(pair.distance > 0.0)) {
    throw InputError(fmt::format("coincident agents {} and {} in cell {}", pair.first,
                                 pair.second, cell_id));
  }
  return pair.distance;
}

std::vector<TriangleCell> build_cells(const TeamConfiguration& team,
                                      const std::vector<std::vector<AgentId>>& memberships) {
  const auto boundary = team.boundary_leaders();
  if (boundary.size() < 3) {
    throw InputError("a fan triangulation needs at least 3 boundary leaders");
  }
  const std::size_t m = boundary.size();
  if (!memberships.empty() && memberships.size() != m) {
    throw InputError(fmt::format("{} cell memberships given, expected {}", memberships.size(), m));
  }

  std::vector<TriangleCell> cells(m);
  for (std::size_t j = 0; j < m; ++j) {
    TriangleCell& cell = cells[j];
    cell.id = static_cast<int>(j) + 1;
    cell.vertices = {team.core(), boundary[j], boundary[(j + 1) % m]};
    const Vec3 d1 = team.position(cell.vertices[1]) - team.position(cell.vertices[0]);
    const Vec3 d2 = team.position(cell.vertices[2]) - team.position(cell.vertices[0]);
    if (cell_is_degenerate(d1, d2)) {
      throw InputError(fmt::format("cell {}: boundary leaders {} and {} are parallel", cell.id,
                                   cell.vertices[1], cell.vertices[2]));
    }
  }

  if (memberships.empty()) {
    for (AgentId id = 1; id <= team.agent_count; ++id) {
      for (TriangleCell& cell : cells) {
        if (cell_contains(team, cell, team.position(id))) cell.members.push_back(id);
      }
    }
  } else {
    for (std::size_t j = 0; j < m; ++j) {
      std::set<AgentId> ids(memberships[j].begin(), memberships[j].end());
      cells[j].members.assign(ids.begin(), ids.end());
    }
  }

  const Positions stacked = stack(team.positions);
  for (TriangleCell& cell : cells) {
    if (cell.members.size() >= 2) {
      bool in_range = std::all_of(cell.members.begin(), cell.members.end(), [&](AgentId id) {
        return id >= 1 && id <= team.agent_count;
      });
      if (in_range) cell.p_min = min_pairwise_distance(stacked, cell.members).distance;
    }
  }
  return cells;
}

TeamConfiguration make_team(int agent_count, LayerPartition partition, std::vector<Vec3> positions,
                            SafetyParameters safety,
                            const std::vector<std::vector<AgentId>>& memberships) {
  TeamConfiguration team;
  team.agent_count = agent_count;
  team.partition = std::move(partition);
  team.positions = std::move(positions);
  team.safety = safety;

  ValidationReport structure;
  validate_structure(team, structure);
  if (!structure.ok()) throw InputError(structure.summary());

  team.cells = build_cells(team, memberships);
  const ValidationReport report = validate_team(team);
  if (!report.ok()) throw InputError(ValidationReport{report.errors()}.summary());
  return team;
}

}  // namespace mlcd
