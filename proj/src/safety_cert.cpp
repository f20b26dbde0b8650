#include "mlcd/safety_cert.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "mlcd/io.hpp"

namespace mlcd {
namespace {

// Unit eigenvector of the symmetric B for eigenvalue e, from the best-conditioned
// cross product of two rows of (B - eI). Fails when e is (nearly) repeated.
bool eigenvector_for(const Eigen::Matrix3d& B, double e, Vec3& out) {
  const Eigen::Matrix3d M = B - e * Eigen::Matrix3d::Identity();
  const Vec3 r0 = M.row(0).transpose();
  const Vec3 r1 = M.row(1).transpose();
  const Vec3 r2 = M.row(2).transpose();
  const Vec3 candidates[3] = {r0.cross(r1), r0.cross(r2), r1.cross(r2)};
  int best = 0;
  for (int i = 1; i < 3; ++i) {
    if (candidates[i].squaredNorm() > candidates[best].squaredNorm()) best = i;
  }
  const double norm2 = candidates[best].squaredNorm();
  const double scale = M.squaredNorm();
  if (!(norm2 > 1e-20 * scale * scale) || norm2 == 0.0) return false;
  out = candidates[best] / std::sqrt(norm2);
  return true;
}

Eigen::Matrix3d complete_basis(const Vec3& v) {
  const Vec3 seed = std::abs(v.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  const Vec3 u = v.cross(seed).normalized();
  Eigen::Matrix3d V;
  V << v, u, v.cross(u);
  return V;
}

// Cyclic Jacobi sweeps on VᵀBV; converges quadratically from a good start.
void jacobi_refine(const Eigen::Matrix3d& B, Eigen::Matrix3d& V) {
  Eigen::Matrix3d D = V.transpose() * B * V;
  const double threshold = 1e-31 * std::max(B.squaredNorm(), std::numeric_limits<double>::min());
  for (int sweep = 0; sweep < 16; ++sweep) {
    const double off = D(0, 1) * D(0, 1) + D(0, 2) * D(0, 2) + D(1, 2) * D(1, 2);
    if (off <= threshold) break;
    for (int p = 0; p < 2; ++p) {
      for (int q = p + 1; q < 3; ++q) {
        if (D(p, q) == 0.0) continue;
        const double theta = (D(q, q) - D(p, p)) / (2.0 * D(p, q));
        const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::hypot(theta, 1.0));
        const double c = 1.0 / std::hypot(t, 1.0);
        const double s = t * c;
        Eigen::Matrix3d J = Eigen::Matrix3d::Identity();
        J(p, p) = c;
        J(q, q) = c;
        J(p, q) = s;
        J(q, p) = -s;
        D = J.transpose() * D * J;
        V = V * J;
      }
    }
  }
}

}  // namespace

SafetyBounds safety_window(const SafetyParameters& safety, std::span<const double> p_mins,
                           double a0) {
  if (!(safety.delta > 0.0) || !(safety.epsilon > 0.0) || !(safety.a_max > 0.0)) {
    throw InputError("delta, epsilon and a_max must be strictly positive");
  }
  if (!(a0 > 0.0)) throw InputError("a0 must be strictly positive");
  if (p_mins.empty()) throw InputError("no cells to bound");
  const double clearance = 2.0 * (safety.delta + safety.epsilon);

  SafetyBounds out;
  for (double p_min : p_mins) {
    if (!(p_min > 0.0)) throw InputError("p_min must be strictly positive");
    out.alpha_min = std::max(out.alpha_min, clearance / p_min);
  }
  out.alpha_max = (safety.a_max - clearance) / a0;
  if (out.alpha_min > out.alpha_max) {
    throw InputError(fmt::format(
        "safety window empty, no feasible deformation: alpha_min = {:.17g} > alpha_max = {:.17g}",
        out.alpha_min, out.alpha_max));
  }
  return out;
}

SafetyBounds alpha_bounds(const TeamConfiguration& team) {
  std::vector<double> p_mins;
  for (const TriangleCell& cell : team.cells) p_mins.push_back(cell.p_min);
  return safety_window(team.safety, p_mins, team.reference_magnitude());
}

TriangleJacobian triangle_jacobian(const TeamConfiguration& team, int cell_id,
                                   const AlphaVector& alpha, const Vec3& s) {
  if (cell_id < 1 || cell_id > static_cast<int>(team.cells.size())) {
    throw InputError(fmt::format("no cell with id {}", cell_id));
  }
  if (alpha.size() != team.partition.primary_count()) {
    throw InputError("alpha has the wrong dimension");
  }
  const TriangleCell& cell = team.cell(cell_id);
  const AgentId core = cell.vertices[0];
  const Vec3 a_core = team.position(core);
  const Vec3 a1 = team.position(cell.vertices[1]) - a_core;
  const Vec3 a2 = team.position(cell.vertices[2]) - a_core;
  const double alpha1 = alpha[team.primary_index(cell.vertices[1])];
  const double alpha2 = alpha[team.primary_index(cell.vertices[2])];

  const Vec3 normal = a1.cross(a2);
  if (!(normal.squaredNorm() > 1e-24 * a1.squaredNorm() * a2.squaredNorm())) {
    throw InputError(fmt::format("cell {}: parallel boundary vertex vectors", cell_id));
  }
  const Vec3 d1 = alpha1 * a1;
  const Vec3 d2 = alpha2 * a2;
  const Vec3 deformed_normal = d1.cross(d2);
  if (!(deformed_normal.squaredNorm() > 1e-24 * d1.squaredNorm() * d2.squaredNorm()) ||
      deformed_normal.squaredNorm() == 0.0) {
    throw NumericalError(fmt::format("cell {}: deformed cell is degenerate", cell_id));
  }

  Eigen::Matrix3d material;
  material << a1, a2, normal.normalized();
  Eigen::Matrix3d deformed;
  deformed << d1, d2, deformed_normal.normalized();

  TriangleJacobian out;
  out.cell_id = cell_id;
  // Q M = M'  <=>  Mᵀ Qᵀ = M'ᵀ
  out.Q = material.transpose().partialPivLu().solve(deformed.transpose()).transpose();
  const double alpha_core = alpha[team.primary_index(core)];
  out.b = alpha_core * a_core + s - out.Q * a_core;

  const double scale = out.Q.norm() / std::sqrt(3.0);
  if (!(std::abs(out.Q.determinant()) > 1e-12 * scale * scale * scale)) {
    throw NumericalError(fmt::format("cell {}: Jacobian is singular", cell_id));
  }
  return out;
}

SymmetricEigen3 symmetric_eigen3(const Eigen::Matrix3d& A) {
  SymmetricEigen3 out;
  if (!A.allFinite()) throw InputError("symmetric_eigen3: non-finite entries");
  const Eigen::Matrix3d sym = 0.5 * (A + A.transpose());
  const double scale = sym.cwiseAbs().maxCoeff();
  if (scale == 0.0) return out;
  const Eigen::Matrix3d B = sym / scale;

  // Trigonometric form of Cardano's formula for the characteristic cubic.
  const double p1 = B(0, 1) * B(0, 1) + B(0, 2) * B(0, 2) + B(1, 2) * B(1, 2);
  const double q = B.trace() / 3.0;
  const double p2 = (B(0, 0) - q) * (B(0, 0) - q) + (B(1, 1) - q) * (B(1, 1) - q) +
                    (B(2, 2) - q) * (B(2, 2) - q) + 2.0 * p1;
  Eigen::Matrix3d V = Eigen::Matrix3d::Identity();
  // Diagonal input keeps the exact axes.
  if (p1 > 0.0 && p2 > 0.0) {
    const double p = std::sqrt(p2 / 6.0);
    const Eigen::Matrix3d C = (B - q * Eigen::Matrix3d::Identity()) / p;
    const double r = std::clamp(C.determinant() / 2.0, -1.0, 1.0);
    const double phi = std::acos(r) / 3.0;
    const double e1 = q + 2.0 * p * std::cos(phi);
    const double e3 = q + 2.0 * p * std::cos(phi + 2.0 * std::numbers::pi / 3.0);

    Vec3 v1, v3;
    const bool has1 = eigenvector_for(B, e1, v1);
    const bool has3 = eigenvector_for(B, e3, v3);
    const Vec3 w3 = has1 && has3 ? Vec3(v3 - v3.dot(v1) * v1) : Vec3::Zero();
    if (w3.norm() > 0.5) {
      // Near-isotropic input can return v3 parallel to v1; then only v1 is kept.
      v3 = w3.normalized();
      V << v1, v3.cross(v1), v3;
    } else if (has1) {
      V = complete_basis(v1);
    } else if (has3) {
      V = complete_basis(v3);
    }
    // Clustered roots leave the closed-form vectors inaccurate; refine.
    jacobi_refine(B, V);
  }

  const Eigen::Matrix3d D = V.transpose() * B * V;
  std::array<int, 3> order{0, 1, 2};
  std::sort(order.begin(), order.end(), [&](int a, int b) { return D(a, a) > D(b, b); });
  for (int i = 0; i < 3; ++i) {
    out.values[i] = D(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(i)]) * scale;
    out.vectors.col(i) = V.col(order[static_cast<std::size_t>(i)]);
  }
  return out;
}

DeformationSpectrum pure_deformation_spectrum(const TriangleJacobian& jacobian, double p_min,
                                              const SafetyParameters& safety) {
  if (!jacobian.Q.allFinite()) {
    throw InputError(fmt::format("cell {}: non-finite Jacobian", jacobian.cell_id));
  }
  if (!(p_min > 0.0)) throw InputError("p_min must be strictly positive");

  const SymmetricEigen3 eig = symmetric_eigen3(jacobian.Q.transpose() * jacobian.Q);
  // ‖Q v‖ recovers small singular values more accurately than sqrt(eigenvalue).
  std::array<std::pair<double, int>, 3> stretch;
  for (int i = 0; i < 3; ++i) {
    stretch[static_cast<std::size_t>(i)] = {(jacobian.Q * eig.vectors.col(i)).norm(), i};
  }
  std::sort(stretch.begin(), stretch.end(), [](const auto& a, const auto& b) { return a.first > b.first; });

  DeformationSpectrum out;
  out.cell_id = jacobian.cell_id;
  Eigen::Matrix3d V;
  for (int i = 0; i < 3; ++i) {
    out.lambda[static_cast<std::size_t>(i)] = stretch[static_cast<std::size_t>(i)].first;
    V.col(i) = eig.vectors.col(stretch[static_cast<std::size_t>(i)].second);
  }
  out.U = V * Vec3(out.lambda[0], out.lambda[1], out.lambda[2]).asDiagonal() * V.transpose();
  out.bound = 2.0 * (safety.delta + safety.epsilon) / p_min;
  out.margin = out.lambda[2] - out.bound;
  return out;
}

CertificationReport certify_configuration(const TeamConfiguration& team,
                                          const std::vector<LayerWeights>& weights,
                                          const std::vector<PlanStep>& schedule,
                                          const std::vector<Positions>& desired,
                                          const std::vector<Positions>& actual) {
  if (schedule.empty()) throw InputError("certification needs a nonempty schedule");
  if (!desired.empty() && desired.size() != schedule.size()) {
    throw InputError("desired positions do not match the schedule length");
  }
  if (!actual.empty() && actual.size() != schedule.size()) {
    throw InputError("actual positions do not match the schedule length");
  }

  const double desired_clearance = 2.0 * (team.safety.delta + team.safety.epsilon);
  const double actual_clearance = 2.0 * team.safety.epsilon;

  CertificationReport report;
  report.min_margin = std::numeric_limits<double>::infinity();
  report.records.reserve(schedule.size() * team.cells.size());
  for (std::size_t step = 0; step < schedule.size(); ++step) {
    const PlanStep& plan = schedule[step];
    const int index = static_cast<int>(step);
    for (const TriangleCell& cell : team.cells) {
      const TriangleJacobian jacobian = triangle_jacobian(team, cell.id, plan.alpha, plan.s);
      CellCertificate record{index, plan.t,
                             pure_deformation_spectrum(jacobian, cell.p_min, team.safety)};
      report.min_margin = std::min(report.min_margin, record.spectrum.margin);
      if (!record.spectrum.safe()) {
        report.safe = false;
        if (!report.first_violation) report.first_violation = Violation{index, plan.t, cell.id};
      }
      report.records.push_back(std::move(record));
    }

    const Positions positions =
        desired.empty() ? forward_pass(team, weights, plan.alpha, plan.s) : desired[step];
    const double d = min_pairwise_distance(positions).distance;
    report.min_desired_distance.push_back(d);
    if (d < desired_clearance) report.desired_distance_flags.push_back(index);

    if (!actual.empty()) {
      const double a = min_pairwise_distance(actual[step]).distance;
      report.min_actual_distance.push_back(a);
      if (a < actual_clearance && !report.first_actual_violation) {
        report.first_actual_violation = index;
        report.safe = false;
      }
    }
  }
  return report;
}

void write_certification_table(std::ostream& out, const CertificationReport& report,
                               TableFormat format) {
  const char* sep = format == TableFormat::kCsv ? "," : " ";
  out << "t" << sep << "cell_id" << sep << "lambda1" << sep << "lambda2" << sep << "lambda3"
      << sep << "bound" << sep << "margin" << sep << "safe\n";
  for (const CellCertificate& r : report.records) {
    const DeformationSpectrum& s = r.spectrum;
    out << format_real(r.t) << sep << s.cell_id << sep << format_real(s.lambda[0]) << sep
        << format_real(s.lambda[1]) << sep << format_real(s.lambda[2]) << sep
        << format_real(s.bound) << sep << format_real(s.margin) << sep << (s.safe() ? 1 : 0)
        << '\n';
  }
}

}  // namespace mlcd
