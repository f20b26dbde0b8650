#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "mlcd/common.hpp"

namespace mlcd {

// Layers are stored as disjoint sets of newly introduced agents. The nested
// view W_k = W_{k-1} ∪ new_k is what the weight matrices are indexed by.
struct LayerPartition {
  std::vector<std::vector<AgentId>> new_agents;

  int layer_count() const { return static_cast<int>(new_agents.size()); }
  int primary_count() const {
    return new_agents.empty() ? 0 : static_cast<int>(new_agents.front().size());
  }

  // Nested W_k for k in [1, layer_count()]: ids of W_{k-1} first, in order,
  // followed by the agents introduced at layer k.
  std::vector<AgentId> nested(int k) const;
};

struct SafetyParameters {
  double delta = 0.0;    // tracking-error bound [m]
  double epsilon = 0.0;  // agent bounding-ball radius [m]
  double a_max = 0.0;    // containment-ball radius [m]
  // Boundary-leader reference magnitude [m]. Derived from the data when unset.
  std::optional<double> a0;
};

// Fan triangle around the core: vertices = {core, l_j, l_{j+1}}.
struct TriangleCell {
  int id = 0;
  std::array<AgentId, 3> vertices{};
  std::vector<AgentId> members;
  double p_min = 0.0;
};

struct TeamConfiguration {
  int agent_count = 0;
  LayerPartition partition;
  std::vector<Vec3> positions;  // material positions, index id - 1
  std::vector<TriangleCell> cells;
  SafetyParameters safety;

  const Vec3& position(AgentId id) const { return positions.at(id - 1); }
  const TriangleCell& cell(int id) const { return cells.at(id - 1); }

  // Last agent of W_1.
  AgentId core() const;
  // W_1 without the core, in cyclic fan order.
  std::vector<AgentId> boundary_leaders() const;
  // Index of a primary leader within W_1, or -1.
  int primary_index(AgentId id) const;

  // a0 as used by the containment bound: the explicit value if given,
  // otherwise the largest boundary-leader reference magnitude.
  double reference_magnitude() const;
};

struct ValidationIssue {
  enum class Severity { kError, kWarning };
  Severity severity = Severity::kError;
  std::string code;
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;

  bool ok() const;
  bool has(const std::string& code) const;
  std::vector<ValidationIssue> errors() const;
  std::vector<ValidationIssue> warnings() const;
  std::string summary() const;
};

// Validation codes reported by validate_team.
namespace issue {
inline constexpr const char* kPartitionOverlap = "partition overlap";
inline constexpr const char* kPartitionGap = "partition gap";
inline constexpr const char* kIdOutOfRange = "agent id out of range";
inline constexpr const char* kEmptyLayer = "empty layer";
inline constexpr const char* kTooFewLeaders = "too few primary leaders";
inline constexpr const char* kPositionCount = "position count";
inline constexpr const char* kNonFinite = "non-finite position";
inline constexpr const char* kCoreNotAtOrigin = "core must be at origin";
inline constexpr const char* kBoundaryAtOrigin = "boundary leader at origin";
inline constexpr const char* kDegenerateCell = "degenerate cell";
inline constexpr const char* kSafetyParameters = "safety parameters";
inline constexpr const char* kCellCount = "cell count";
inline constexpr const char* kCellVertices = "cell vertices";
inline constexpr const char* kCellCoverage = "cell coverage";
inline constexpr const char* kCellContainment = "cell containment";
inline constexpr const char* kCellSeparation = "cell separation";
inline constexpr const char* kUnequalLeaderMagnitudes = "Assumption 1 violated";
}  // namespace issue

ValidationReport validate_team(const TeamConfiguration& team);

// Coordinates (u, v) of a point w.r.t. the cell's boundary-vertex vectors,
// after orthogonal projection onto the plane they span.
struct PlaneCoordinates {
  double u = 0.0;
  double v = 0.0;
  double normal_offset = 0.0;  // signed distance from the cell plane [m]
};

PlaneCoordinates cell_plane_coordinates(const TeamConfiguration& team, const TriangleCell& cell,
                                        const Vec3& point);

// Projected containment test, inclusive of the boundary up to `tolerance`
// in barycentric units.
bool cell_contains(const TeamConfiguration& team, const TriangleCell& cell, const Vec3& point,
                   double tolerance = 1e-9);

// Lowest-id cell whose projected triangle contains the point.
int enclosing_triangle(const TeamConfiguration& team, const Vec3& point);

// Minimum pairwise material distance over the cell's members.
double triangle_min_separation(const TeamConfiguration& team, int cell_id);

// Builds the fan cells from the partition and positions, assigns members
// (automatically when `memberships` is empty) and computes p_min per cell.
// Throws InputError when the structure cannot support a fan triangulation.
std::vector<TriangleCell> build_cells(const TeamConfiguration& team,
                                      const std::vector<std::vector<AgentId>>& memberships = {});

// Assembles a team, builds its cells and validates it. Throws InputError
// listing every violation.
TeamConfiguration make_team(int agent_count, LayerPartition partition, std::vector<Vec3> positions,
                            SafetyParameters safety,
                            const std::vector<std::vector<AgentId>>& memberships = {});

}  // namespace mlcd
