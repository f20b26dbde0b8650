#include "mlcd/qp_planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>
#include <fmt/format.h>

namespace mlcd {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Constraint rows of this problem family touch exactly one variable.
struct UnitRow {
  Eigen::Index column = -1;
  double coefficient = 0.0;
};

UnitRow unit_row(const Eigen::MatrixXd& A, Eigen::Index r) {
  UnitRow out;
  for (Eigen::Index c = 0; c < A.cols(); ++c) {
    if (A(r, c) == 0.0) continue;
    if (out.column >= 0) throw InputError("constraint rows must act on a single variable");
    out = {c, A(r, c)};
  }
  if (out.column < 0) throw InputError("empty constraint row");
  return out;
}

double active_tolerance(double bound) { return 1e-9 * std::max(1.0, std::abs(bound)); }

}  // namespace

double QpProblem::objective(const Eigen::VectorXd& X) const {
  return 0.5 * X.dot(H * X) + k.dot(X);
}

double KktResiduals::max() const { return std::max({stationarity, primal, complementarity}); }

QpProblem assemble_problem(const CompositeRows& rows, const Vec3& s_desired, AlphaRange bounds,
                           double zeta, ScalingMode mode) {
  if (!(zeta > 0.0)) throw InputError("zeta must be positive");
  if (!std::isfinite(bounds.min) || !std::isfinite(bounds.max)) {
    throw InputError("alpha bounds must be finite");
  }
  if (bounds.min > bounds.max) {
    throw InputError(fmt::format("infeasible bounds: alpha_min {} > alpha_max {}", bounds.min,
                                 bounds.max));
  }
  const auto n_pl = rows.delta[0].size();
  const auto n = n_pl + 3;
  const auto m = n_pl - 1;

  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd k = Eigen::VectorXd::Zero(n);
  for (int axis = 0; axis < 3; ++axis) {
    const Eigen::RowVectorXd& r = rows.r[static_cast<std::size_t>(axis)];
    gram += r.transpose() * r;
    k -= 2.0 * s_desired[axis] * r.transpose();
  }

  QpProblem p;
  p.zeta = zeta;
  p.primary_count = static_cast<int>(n_pl);
  const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(n, n);
  p.H = mode == ScalingMode::kConsistent ? Eigen::MatrixXd(2.0 * zeta * identity + 2.0 * gram)
                                         : Eigen::MatrixXd(zeta * identity + gram);
  p.k = k;

  p.A_ineq = Eigen::MatrixXd::Zero(2 * m, n);
  p.B_ineq.resize(2 * m);
  for (Eigen::Index l = 0; l < m; ++l) {
    p.A_ineq(l, l) = -1.0;
    p.A_ineq(m + l, l) = 1.0;
    p.B_ineq[l] = -bounds.min;
    p.B_ineq[m + l] = bounds.max;
  }

  p.A_eq = Eigen::MatrixXd::Zero(4, n);
  p.A_eq.rightCols(4).setIdentity();
  p.B_eq.resize(4);
  p.B_eq << 0.0, s_desired;
  return p;
}

BoxQpResult solve_box_qp(const Eigen::MatrixXd& H, const Eigen::VectorXd& g,
                         const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  const Eigen::Index n = g.size();
  if (H.rows() != n || H.cols() != n || lo.size() != n || hi.size() != n) {
    throw InputError("solve_box_qp: dimension mismatch");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(lo[i] <= hi[i])) {
      throw InputError(fmt::format("infeasible box: lower {} > upper {} at {}", lo[i], hi[i], i));
    }
  }

  enum class State { kFree, kLower, kUpper };
  std::vector<State> state(static_cast<std::size_t>(n), State::kFree);
  auto st = [&](Eigen::Index i) -> State& { return state[static_cast<std::size_t>(i)]; };

  BoxQpResult result;
  Eigen::VectorXd x(n);
  {
    const Eigen::LLT<Eigen::MatrixXd> llt(H);
    if (llt.info() != Eigen::Success) {
      throw NumericalError("solve_box_qp: Hessian is not positive definite");
    }
    x = llt.solve(-g);
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(x[i] > lo[i])) {
      x[i] = lo[i];
      st(i) = State::kLower;
    } else if (!(x[i] < hi[i])) {
      x[i] = hi[i];
      st(i) = State::kUpper;
    }
  }

  const double scale = 1.0 + g.lpNorm<Eigen::Infinity>() +
                       H.lpNorm<Eigen::Infinity>() * std::max(1.0, x.lpNorm<Eigen::Infinity>());
  const double multiplier_tolerance = 1e-13 * scale;
  const int max_iterations = 50 * static_cast<int>(n + 1);

  for (int iteration = 0; iteration < max_iterations; ++iteration) {
    result.iterations = iteration + 1;
    std::vector<Eigen::Index> free;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (st(i) == State::kFree) free.push_back(i);
    }

    bool reached = true;
    if (!free.empty()) {
      const auto nf = static_cast<Eigen::Index>(free.size());
      Eigen::MatrixXd h_ff(nf, nf);
      Eigen::VectorXd rhs(nf);
      for (Eigen::Index a = 0; a < nf; ++a) {
        const Eigen::Index i = free[static_cast<std::size_t>(a)];
        rhs[a] = -g[i];
        for (Eigen::Index j = 0; j < n; ++j) {
          if (st(j) != State::kFree) rhs[a] -= H(i, j) * x[j];
        }
        for (Eigen::Index b = 0; b < nf; ++b) h_ff(a, b) = H(i, free[static_cast<std::size_t>(b)]);
      }
      const Eigen::LLT<Eigen::MatrixXd> llt(h_ff);
      if (llt.info() != Eigen::Success) {
        throw NumericalError("solve_box_qp: reduced Hessian is not positive definite");
      }
      const Eigen::VectorXd target = llt.solve(rhs);

      // Longest feasible fraction of the step towards the subspace minimizer.
      double tau = 1.0;
      Eigen::Index blocking = -1;
      State blocking_state = State::kFree;
      for (Eigen::Index a = 0; a < nf; ++a) {
        const Eigen::Index i = free[static_cast<std::size_t>(a)];
        const double step = target[a] - x[i];
        if (step < 0.0 && lo[i] > -kInf) {
          const double t = (lo[i] - x[i]) / step;
          if (t < tau) {
            tau = t;
            blocking = i;
            blocking_state = State::kLower;
          }
        } else if (step > 0.0 && hi[i] < kInf) {
          const double t = (hi[i] - x[i]) / step;
          if (t < tau) {
            tau = t;
            blocking = i;
            blocking_state = State::kUpper;
          }
        }
      }

      if (blocking < 0) {
        for (Eigen::Index a = 0; a < nf; ++a) x[free[static_cast<std::size_t>(a)]] = target[a];
      } else {
        reached = false;
        tau = std::max(tau, 0.0);
        for (Eigen::Index a = 0; a < nf; ++a) {
          const Eigen::Index i = free[static_cast<std::size_t>(a)];
          x[i] = std::clamp(x[i] + tau * (target[a] - x[i]), lo[i], hi[i]);
        }
        st(blocking) = blocking_state;
        x[blocking] = blocking_state == State::kLower ? lo[blocking] : hi[blocking];
      }
    }
    if (!reached) continue;

    // Subspace minimizer reached: release the bound with the most negative
    // multiplier, if any. Variables with lo == hi stay pinned.
    const Eigen::VectorXd grad = H * x + g;
    Eigen::Index release = -1;
    double worst = -multiplier_tolerance;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (st(i) == State::kFree || lo[i] == hi[i]) continue;
      const double multiplier = st(i) == State::kLower ? grad[i] : -grad[i];
      if (multiplier < worst) {
        worst = multiplier;
        release = i;
      }
    }
    if (release < 0) {
      result.x = x;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (st(i) == State::kLower) result.at_lower.push_back(static_cast<int>(i));
        if (st(i) == State::kUpper) result.at_upper.push_back(static_cast<int>(i));
      }
      return result;
    }
    st(release) = State::kFree;
  }
  throw NumericalError(
      fmt::format("solve_box_qp: active-set method did not converge in {} iterations",
                  max_iterations));
}

QpSolution solve_box_eq_qp(const QpProblem& problem, double tolerance) {
  const Eigen::Index n = problem.size();
  if (problem.k.size() != n || problem.A_ineq.cols() != n || problem.A_eq.cols() != n) {
    throw InputError("solve_box_eq_qp: dimension mismatch");
  }

  // Equality rows pin single variables; inequality rows become box bounds.
  std::vector<bool> fixed(static_cast<std::size_t>(n), false);
  Eigen::VectorXd X = Eigen::VectorXd::Zero(n);
  for (Eigen::Index r = 0; r < problem.A_eq.rows(); ++r) {
    const UnitRow u = unit_row(problem.A_eq, r);
    fixed[static_cast<std::size_t>(u.column)] = true;
    X[u.column] = problem.B_eq[r] / u.coefficient;
  }
  Eigen::VectorXd lo = Eigen::VectorXd::Constant(n, -kInf);
  Eigen::VectorXd hi = Eigen::VectorXd::Constant(n, kInf);
  for (Eigen::Index r = 0; r < problem.A_ineq.rows(); ++r) {
    const UnitRow u = unit_row(problem.A_ineq, r);
    const double bound = problem.B_ineq[r] / u.coefficient;
    if (u.coefficient > 0.0) {
      hi[u.column] = std::min(hi[u.column], bound);
    } else {
      lo[u.column] = std::max(lo[u.column], bound);
    }
  }

  std::vector<Eigen::Index> free;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!fixed[static_cast<std::size_t>(i)]) free.push_back(i);
  }
  const auto nf = static_cast<Eigen::Index>(free.size());
  QpSolution solution;
  if (nf > 0) {
    Eigen::MatrixXd h_ff(nf, nf);
    Eigen::VectorXd g(nf), l(nf), h(nf);
    for (Eigen::Index a = 0; a < nf; ++a) {
      const Eigen::Index i = free[static_cast<std::size_t>(a)];
      g[a] = problem.k[i];
      for (Eigen::Index j = 0; j < n; ++j) {
        if (fixed[static_cast<std::size_t>(j)]) g[a] += problem.H(i, j) * X[j];
      }
      for (Eigen::Index b = 0; b < nf; ++b) h_ff(a, b) = problem.H(i, free[static_cast<std::size_t>(b)]);
      l[a] = lo[i];
      h[a] = hi[i];
    }
    const BoxQpResult box = solve_box_qp(h_ff, g, l, h);
    for (Eigen::Index a = 0; a < nf; ++a) X[free[static_cast<std::size_t>(a)]] = box.x[a];
    solution.iterations = box.iterations;
  }

  solution.X = X;
  solution.objective = problem.objective(X);
  solution.kkt = kkt_residual(problem, X);
  for (Eigen::Index r = 0; r < problem.A_ineq.rows(); ++r) {
    const double slack = problem.B_ineq[r] - problem.A_ineq.row(r).dot(X);
    if (slack <= active_tolerance(problem.B_ineq[r])) solution.active_set.push_back(static_cast<int>(r));
  }
  if (!(solution.kkt.max() <= tolerance)) {
    throw NumericalError(fmt::format(
        "QP solution fails KKT check: stationarity {:.3g}, primal {:.3g}, complementarity {:.3g}",
        solution.kkt.stationarity, solution.kkt.primal, solution.kkt.complementarity));
  }
  return solution;
}

KktResiduals kkt_residual(const QpProblem& problem, const Eigen::VectorXd& X) {
  const Eigen::Index n = problem.size();
  if (X.size() != n) throw InputError("kkt_residual: candidate has the wrong dimension");

  const Eigen::VectorXd grad = problem.H * X + problem.k;
  std::vector<bool> equality(static_cast<std::size_t>(n), false);
  for (Eigen::Index r = 0; r < problem.A_eq.rows(); ++r) {
    equality[static_cast<std::size_t>(unit_row(problem.A_eq, r).column)] = true;
  }

  KktResiduals out;
  // Per variable: cancel the gradient with a nonnegative multiplier on an
  // active bound pointing the right way; equality multipliers are free.
  Eigen::VectorXd residual = grad;
  std::vector<double> slack(static_cast<std::size_t>(problem.A_ineq.rows()));
  for (Eigen::Index r = 0; r < problem.A_ineq.rows(); ++r) {
    slack[static_cast<std::size_t>(r)] = problem.B_ineq[r] - problem.A_ineq.row(r).dot(X);
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (equality[static_cast<std::size_t>(i)]) {
      residual[i] = 0.0;
      continue;
    }
    for (Eigen::Index r = 0; r < problem.A_ineq.rows(); ++r) {
      const UnitRow u = unit_row(problem.A_ineq, r);
      if (u.column != i) continue;
      const double s = slack[static_cast<std::size_t>(r)];
      if (s > active_tolerance(problem.B_ineq[r])) continue;
      // grad + coefficient * mu = 0 with mu >= 0.
      const double mu = -residual[i] / u.coefficient;
      if (mu > 0.0) {
        residual[i] = 0.0;
        out.complementarity = std::max(out.complementarity, std::abs(mu * s));
      }
    }
  }
  out.stationarity = residual.norm();

  if (problem.A_ineq.rows() > 0) {
    out.primal = std::max(0.0, (problem.A_ineq * X - problem.B_ineq).maxCoeff());
  }
  if (problem.A_eq.rows() > 0) {
    out.primal = std::max(out.primal, (problem.A_eq * X - problem.B_eq).lpNorm<Eigen::Infinity>());
  }
  return out;
}

QpPlanner::QpPlanner(const CompositeRows& rows, const PlannerSettings& settings)
    : rows_(rows),
      settings_(settings),
      problem_(assemble_problem(rows, Vec3::Zero(), settings.bounds, settings.zeta,
                                settings.mode)) {}

QpProblem QpPlanner::problem_at(const Vec3& s_desired) const {
  QpProblem p = problem_;
  p.k.setZero();
  for (int axis = 0; axis < 3; ++axis) {
    p.k -= 2.0 * s_desired[axis] * rows_.r[static_cast<std::size_t>(axis)].transpose();
  }
  p.B_eq << 0.0, s_desired;
  return p;
}

QpSolution QpPlanner::solve(const Vec3& s_desired) const {
  return solve_box_eq_qp(problem_at(s_desired), settings_.tolerance);
}

std::vector<ScheduleEntry> alpha_schedule(const TeamConfiguration& team,
                                          const std::vector<LayerWeights>& weights,
                                          const ReferenceTrajectory& trajectory,
                                          const std::vector<double>& t_grid,
                                          const PlannerSettings& settings) {
  for (std::size_t i = 1; i < t_grid.size(); ++i) {
    if (!(t_grid[i] > t_grid[i - 1])) throw InputError("t_grid must be strictly increasing");
  }
  const QpPlanner planner(compose_delta_rows(team, weights, settings.averaging), settings);
  const Eigen::Index n_pl = team.partition.primary_count();

  std::vector<ScheduleEntry> schedule;
  schedule.reserve(t_grid.size());
  for (double t : t_grid) {
    QpSolution solution;
    try {
      solution = planner.solve(trajectory.position(t));
    } catch (const NumericalError& e) {
      throw NumericalError(fmt::format("QP failed at t = {}: {}", t, e.what()));
    }
    ScheduleEntry entry;
    entry.t = t;
    entry.alpha = solution.X.head(n_pl);
    entry.s = solution.X.tail<3>();
    entry.objective = solution.objective;
    entry.kkt = solution.kkt;
    schedule.push_back(std::move(entry));
  }
  return schedule;
}

}  // namespace mlcd
