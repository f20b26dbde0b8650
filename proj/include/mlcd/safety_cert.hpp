#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "mlcd/common.hpp"
#include "mlcd/geometry.hpp"
#include "mlcd/hierarchy.hpp"
#include "mlcd/team_model.hpp"

namespace mlcd {

struct SafetyBounds {
  double alpha_min = 0.0;
  double alpha_max = 0.0;
};

// alpha_min = max_j 2(δ+ε)/p_min_j, alpha_max = (a_max - 2(δ+ε))/a0.
// Throws InputError("safety window empty ...") when alpha_min > alpha_max.
SafetyBounds safety_window(const SafetyParameters& safety, std::span<const double> p_mins,
                           double a0);
SafetyBounds alpha_bounds(const TeamConfiguration& team);

struct TriangleJacobian {
  int cell_id = 0;
  Eigen::Matrix3d Q = Eigen::Matrix3d::Identity();
  Vec3 b = Vec3::Zero();
};

// Q maps each boundary vertex vector a_l to α_l a_l and the unit normal of the
// material cell to the unit normal of the deformed cell; b = s.
TriangleJacobian triangle_jacobian(const TeamConfiguration& team, int cell_id,
                                   const AlphaVector& alpha, const Vec3& s);

// Eigen-decomposition of a symmetric 3x3 matrix. Values descending; column i
// of `vectors` pairs with values[i].
struct SymmetricEigen3 {
  Vec3 values = Vec3::Zero();
  Eigen::Matrix3d vectors = Eigen::Matrix3d::Identity();
};

SymmetricEigen3 symmetric_eigen3(const Eigen::Matrix3d& A);

struct DeformationSpectrum {
  int cell_id = 0;
  std::array<double, 3> lambda{};  // eigenvalues of U = (QᵀQ)^½, descending
  Eigen::Matrix3d U = Eigen::Matrix3d::Identity();
  double bound = 0.0;   // 2(δ+ε)/p_min
  double margin = 0.0;  // lambda[2] - bound

  bool safe() const { return margin >= 0.0; }
};

DeformationSpectrum pure_deformation_spectrum(const TriangleJacobian& jacobian, double p_min,
                                              const SafetyParameters& safety);

struct PlanStep {
  double t = 0.0;
  AlphaVector alpha;
  Vec3 s = Vec3::Zero();
};

struct CellCertificate {
  int step = 0;
  double t = 0.0;
  DeformationSpectrum spectrum;
};

struct Violation {
  int step = 0;
  double t = 0.0;
  int cell_id = 0;
};

struct CertificationReport {
  std::vector<CellCertificate> records;  // step-major, cell-minor
  bool safe = true;
  std::optional<Violation> first_violation;
  double min_margin = 0.0;

  std::vector<double> min_desired_distance;  // per step
  std::vector<int> desired_distance_flags;   // steps below 2(δ+ε)

  // Filled only when actual positions were supplied.
  std::vector<double> min_actual_distance;
  std::optional<int> first_actual_violation;  // step below 2ε
};

// Verdict: every margin >= 0 and, when actual positions are given, every
// actual minimum pairwise distance >= 2ε. Desired positions are recomputed by
// the forward pass when `desired` is empty.
CertificationReport certify_configuration(const TeamConfiguration& team,
                                          const std::vector<LayerWeights>& weights,
                                          const std::vector<PlanStep>& schedule,
                                          const std::vector<Positions>& desired = {},
                                          const std::vector<Positions>& actual = {});

enum class TableFormat { kCsv, kText };

// Columns: t, cell_id, lambda1, lambda2, lambda3, bound, margin, safe.
void write_certification_table(std::ostream& out, const CertificationReport& report,
                               TableFormat format = TableFormat::kCsv);

}  // namespace mlcd
