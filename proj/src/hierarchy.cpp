#include "mlcd/hierarchy.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include <fmt/format.h>

namespace mlcd {
namespace {

constexpr double kRowSumTolerance = 1e-12;

std::unordered_map<AgentId, Eigen::Index> index_of(const std::vector<AgentId>& ids) {
  std::unordered_map<AgentId, Eigen::Index> out;
  for (std::size_t i = 0; i < ids.size(); ++i) out.emplace(ids[i], static_cast<Eigen::Index>(i));
  return out;
}

void check_alpha(const TeamConfiguration& team, const AlphaVector& alpha) {
  if (alpha.size() != team.partition.primary_count()) {
    throw InputError(fmt::format("alpha has {} entries, expected {}", alpha.size(),
                                 team.partition.primary_count()));
  }
}

// Agents averaged by the output layer, in nested W_p order.
std::vector<AgentId> averaged_agents(const TeamConfiguration& team, AveragingSet averaging) {
  const int p = team.partition.layer_count();
  if (averaging == AveragingSet::kNewAgents) return team.partition.new_agents.back();
  return team.partition.nested(p);
}

}  // namespace

std::array<double, 3> barycentric_weights(const TeamConfiguration& team, const TriangleCell& cell,
                                          const Vec3& point) {
  const PlaneCoordinates c = cell_plane_coordinates(team, cell, point);
  std::array<double, 3> w{1.0 - c.u - c.v, c.u, c.v};
  constexpr double kTolerance = 1e-9;
  if (std::any_of(w.begin(), w.end(), [](double x) { return x < -kTolerance; })) {
    throw InputError(fmt::format("point ({}, {}, {}) is outside cell {}", point.x(), point.y(),
                                 point.z(), cell.id));
  }
  // Snap rounding noise at edges and vertices back into [0, 1].
  double sum = 0.0;
  for (double& x : w) {
    x = std::clamp(x, 0.0, 1.0);
    sum += x;
  }
  for (double& x : w) x /= sum;
  return w;
}

std::vector<LayerWeights> build_layer_weights(const TeamConfiguration& team) {
  std::vector<LayerWeights> out;
  const int p = team.partition.layer_count();
  for (int k = 2; k <= p; ++k) {
    const std::vector<AgentId> rows = team.partition.nested(k);
    const std::vector<AgentId> cols = team.partition.nested(k - 1);
    const auto col_index = index_of(cols);

    LayerWeights layer;
    layer.layer = k;
    layer.matrix = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()),
                                         static_cast<Eigen::Index>(cols.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      if (const auto it = col_index.find(rows[i]); it != col_index.end()) {
        layer.matrix(r, it->second) = 1.0;
        continue;
      }
      const TriangleCell& cell = team.cell(enclosing_triangle(team, team.position(rows[i])));
      const auto w = barycentric_weights(team, cell, team.position(rows[i]));
      for (int v = 0; v < 3; ++v) {
        const auto it = col_index.find(cell.vertices[static_cast<std::size_t>(v)]);
        if (it == col_index.end()) {
          throw InputError(fmt::format("agent {}: vertex {} of cell {} is not in layer {}",
                                       rows[i], cell.vertices[static_cast<std::size_t>(v)],
                                       cell.id, k - 1));
        }
        layer.matrix(r, it->second) += w[static_cast<std::size_t>(v)];
      }
    }
    out.push_back(std::move(layer));
  }
  check_layer_weights(team, out);
  return out;
}

std::vector<LayerWeights> explicit_layer_weights(const TeamConfiguration& team,
                                                 const std::vector<Eigen::MatrixXd>& matrices) {
  std::vector<LayerWeights> out;
  for (std::size_t i = 0; i < matrices.size(); ++i) {
    out.push_back({static_cast<int>(i) + 2, matrices[i]});
  }
  check_layer_weights(team, out);
  return out;
}

void check_layer_weights(const TeamConfiguration& team, const std::vector<LayerWeights>& weights) {
  const int p = team.partition.layer_count();
  if (static_cast<int>(weights.size()) != p - 1) {
    throw InputError(fmt::format("expected {} weight matrices, got {}", p - 1, weights.size()));
  }
  for (int k = 2; k <= p; ++k) {
    const LayerWeights& layer = weights[static_cast<std::size_t>(k - 2)];
    const std::vector<AgentId> rows = team.partition.nested(k);
    const std::vector<AgentId> cols = team.partition.nested(k - 1);
    const Eigen::MatrixXd& beta = layer.matrix;
    if (beta.rows() != static_cast<Eigen::Index>(rows.size()) ||
        beta.cols() != static_cast<Eigen::Index>(cols.size())) {
      throw InputError(fmt::format("beta_{} must be {}x{}, got {}x{}", k, rows.size(), cols.size(),
                                   beta.rows(), beta.cols()));
    }
    for (Eigen::Index i = 0; i < beta.rows(); ++i) {
      const auto row = beta.row(i);
      if ((row.array() < 0.0).any() || (row.array() > 1.0).any() || !row.allFinite()) {
        throw InputError(fmt::format("beta_{} row {}: entries must lie in [0, 1]", k, i + 1));
      }
      if (std::abs(row.sum() - 1.0) > kRowSumTolerance) {
        throw InputError(fmt::format("beta_{} row {}: weights not row-stochastic (sum {:.17g})", k,
                                     i + 1, row.sum()));
      }
      if (i < beta.cols()) {
        // Agents carried over from W_{k-1} keep their position.
        for (Eigen::Index j = 0; j < beta.cols(); ++j) {
          if (beta(i, j) != (i == j ? 1.0 : 0.0)) {
            throw InputError(fmt::format(
                "beta_{} row {}: carried-over agent {} needs an identity row", k, i + 1,
                rows[static_cast<std::size_t>(i)]));
          }
        }
      } else if ((row.array() != 0.0).count() > 3) {
        throw InputError(fmt::format("beta_{} row {}: more than 3 nonzero weights", k, i + 1));
      }
    }
  }
}

Positions forward_pass(const TeamConfiguration& team, const std::vector<LayerWeights>& weights,
                       const AlphaVector& alpha, const Vec3& s) {
  check_alpha(team, alpha);
  const auto& w1 = team.partition.new_agents.front();
  Positions layer(static_cast<Eigen::Index>(w1.size()), 3);
  for (std::size_t l = 0; l < w1.size(); ++l) {
    layer.row(static_cast<Eigen::Index>(l)) =
        (alpha[static_cast<Eigen::Index>(l)] * team.position(w1[l]) + s).transpose();
  }
  for (const LayerWeights& beta : weights) {
    layer = beta.matrix * layer;
  }

  const std::vector<AgentId> order = team.partition.nested(team.partition.layer_count());
  Positions out(team.agent_count, 3);
  for (std::size_t i = 0; i < order.size(); ++i) {
    out.row(order[i] - 1) = layer.row(static_cast<Eigen::Index>(i));
  }
  return out;
}

CompositeRows compose_delta_rows(const TeamConfiguration& team,
                                 const std::vector<LayerWeights>& weights,
                                 AveragingSet averaging) {
  const int p = team.partition.layer_count();
  const int n_pl = team.partition.primary_count();
  const auto last = static_cast<Eigen::Index>(team.partition.nested(p).size());

  // 1ᵀ over the averaged rows of W_p, then pushed back through β_p ... β_2.
  Eigen::RowVectorXd ones = Eigen::RowVectorXd::Ones(last);
  int averaged = static_cast<int>(last);
  if (averaging == AveragingSet::kNewAgents) {
    averaged = static_cast<int>(team.partition.new_agents.back().size());
    ones.head(last - averaged).setZero();
  }
  Eigen::RowVectorXd composite = ones / static_cast<double>(averaged);
  for (auto it = weights.rbegin(); it != weights.rend(); ++it) {
    composite = composite * it->matrix;
  }

  const auto& w1 = team.partition.new_agents.front();
  CompositeRows rows;
  rows.averaged_count = averaged;
  for (int axis = 0; axis < 3; ++axis) {
    Eigen::RowVectorXd delta(n_pl);
    for (int l = 0; l < n_pl; ++l) {
      delta[l] = composite[l] * team.position(w1[static_cast<std::size_t>(l)])[axis];
    }
    Eigen::RowVectorXd r = Eigen::RowVectorXd::Zero(n_pl + 3);
    r.head(n_pl) = delta;
    r[n_pl + axis] = 1.0;
    rows.delta[static_cast<std::size_t>(axis)] = std::move(delta);
    rows.r[static_cast<std::size_t>(axis)] = std::move(r);
  }
  return rows;
}

Vec3 nominal_position(const TeamConfiguration& team, const std::vector<LayerWeights>& weights,
                      const AlphaVector& alpha, const Vec3& s, AveragingSet averaging) {
  const Positions desired = forward_pass(team, weights, alpha, s);
  const std::vector<AgentId> ids = averaged_agents(team, averaging);
  Vec3 sum = Vec3::Zero();
  for (AgentId id : ids) sum += desired.row(id - 1).transpose();
  return sum / static_cast<double>(ids.size());
}

Eigen::VectorXd decision_vector(const AlphaVector& alpha, const Vec3& s) {
  Eigen::VectorXd X(alpha.size() + 3);
  X << alpha, s;
  return X;
}

}  // namespace mlcd
