#pragma once

#include <vector>

#include <Eigen/Core>

#include "mlcd/common.hpp"
#include "mlcd/hierarchy.hpp"
#include "mlcd/trajectory.hpp"

namespace mlcd {

enum class ScalingMode {
  // min Σ_axis (r_axis X - s_axis)^2 + ζ‖X‖^2, i.e. H = 2ζI + 2ΣRᵀR, k = -2Σ s R.
  kConsistent,
  // H = ζI + ΣRᵀR, k = -2Σ s R under the ½ XᵀHX convention. Its minimizer
  // overshoots the target; kept for reproducing that formulation.
  // CLI and scenario name: "paper-exact".
  kHalfQuadratic,
};

struct AlphaRange {
  double min = 0.0;
  double max = 0.0;
};

struct PlannerSettings {
  AlphaRange bounds{0.6, 5.0};
  double zeta = 1e-6;
  ScalingMode mode = ScalingMode::kConsistent;
  AveragingSet averaging = AveragingSet::kAllAgents;
  double tolerance = 1e-8;  // KKT acceptance threshold
};

// X = [α_1 .. α_npl, s_x, s_y, s_z].
struct QpProblem {
  Eigen::MatrixXd H;
  Eigen::VectorXd k;
  Eigen::MatrixXd A_ineq;
  Eigen::VectorXd B_ineq;
  Eigen::MatrixXd A_eq;
  Eigen::VectorXd B_eq;
  double zeta = 0.0;
  int primary_count = 0;

  int size() const { return static_cast<int>(H.rows()); }
  double objective(const Eigen::VectorXd& X) const;
};

struct KktResiduals {
  double stationarity = 0.0;
  double primal = 0.0;
  double complementarity = 0.0;

  double max() const;
};

struct QpSolution {
  Eigen::VectorXd X;
  double objective = 0.0;
  KktResiduals kkt;
  std::vector<int> active_set;  // indices into the rows of A_ineq
  int iterations = 0;
};

QpProblem assemble_problem(const CompositeRows& rows, const Vec3& s_desired, AlphaRange bounds,
                           double zeta, ScalingMode mode);

// Equality rows are eliminated; the remaining box QP is solved by a primal
// active-set method. Throws NumericalError when the KKT residuals exceed
// `tolerance`.
QpSolution solve_box_eq_qp(const QpProblem& problem, double tolerance = 1e-8);

KktResiduals kkt_residual(const QpProblem& problem, const Eigen::VectorXd& X);

// min ½xᵀHx + gᵀx subject to lo <= x <= hi, H symmetric positive definite.
struct BoxQpResult {
  Eigen::VectorXd x;
  std::vector<int> at_lower;
  std::vector<int> at_upper;
  int iterations = 0;
};

BoxQpResult solve_box_qp(const Eigen::MatrixXd& H, const Eigen::VectorXd& g,
                         const Eigen::VectorXd& lo, const Eigen::VectorXd& hi);

struct ScheduleEntry {
  double t = 0.0;
  AlphaVector alpha;
  Vec3 s = Vec3::Zero();
  double objective = 0.0;
  KktResiduals kkt;
};

// Holds the time-invariant part of the problem (H and the constraint
// matrices); each solve() only rebuilds k and B_eq.
class QpPlanner {
 public:
  QpPlanner(const CompositeRows& rows, const PlannerSettings& settings);

  const QpProblem& problem_template() const { return problem_; }
  QpProblem problem_at(const Vec3& s_desired) const;
  QpSolution solve(const Vec3& s_desired) const;

 private:
  CompositeRows rows_;
  PlannerSettings settings_;
  QpProblem problem_;
};

std::vector<ScheduleEntry> alpha_schedule(const TeamConfiguration& team,
                                          const std::vector<LayerWeights>& weights,
                                          const ReferenceTrajectory& trajectory,
                                          const std::vector<double>& t_grid,
                                          const PlannerSettings& settings);

}  // namespace mlcd
