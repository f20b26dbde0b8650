#pragma once

#include <array>
#include <vector>

#include <Eigen/Core>

#include "mlcd/common.hpp"
#include "mlcd/team_model.hpp"

namespace mlcd {

// β_k: |W_k| x |W_{k-1}| over nested layers. Rows follow partition.nested(k),
// columns follow partition.nested(k - 1).
struct LayerWeights {
  int layer = 0;
  Eigen::MatrixXd matrix;
};

// Diagonal of α(t), one entry per primary leader in W_1 order. The core's
// entry is 0.
using AlphaVector = Eigen::VectorXd;

// Which agents the output layer averages over.
enum class AveragingSet {
  kAllAgents,  // nested W_p = V
  kNewAgents,  // only the agents introduced at the last layer
};

struct CompositeRows {
  std::array<Eigen::RowVectorXd, 3> delta;  // 1 x n_pl per axis
  std::array<Eigen::RowVectorXd, 3> r;      // 1 x (n_pl + 3) per axis
  int averaged_count = 0;                   // N_p
};

// Weights (core, l_a, l_b) in the order of cell.vertices. Throws InputError
// for degenerate cells or exterior points.
std::array<double, 3> barycentric_weights(const TeamConfiguration& team, const TriangleCell& cell,
                                          const Vec3& point);

std::vector<LayerWeights> build_layer_weights(const TeamConfiguration& team);

// Wraps user-supplied matrices (one per k = 2..p) after checking them.
std::vector<LayerWeights> explicit_layer_weights(const TeamConfiguration& team,
                                                 const std::vector<Eigen::MatrixXd>& matrices);

// Shape, stochasticity, carried-over identity rows and 3-entry support.
// Throws InputError naming the first violated invariant.
void check_layer_weights(const TeamConfiguration& team, const std::vector<LayerWeights>& weights);

// Desired positions of every agent (row i = agent i + 1).
Positions forward_pass(const TeamConfiguration& team, const std::vector<LayerWeights>& weights,
                       const AlphaVector& alpha, const Vec3& s);

CompositeRows compose_delta_rows(const TeamConfiguration& team,
                                 const std::vector<LayerWeights>& weights,
                                 AveragingSet averaging = AveragingSet::kAllAgents);

// Mean desired position of the averaged set.
Vec3 nominal_position(const TeamConfiguration& team, const std::vector<LayerWeights>& weights,
                      const AlphaVector& alpha, const Vec3& s,
                      AveragingSet averaging = AveragingSet::kAllAgents);

// Stacks [α; s] into the decision vector X.
Eigen::VectorXd decision_vector(const AlphaVector& alpha, const Vec3& s);

}  // namespace mlcd
