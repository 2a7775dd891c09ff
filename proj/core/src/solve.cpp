#include "oblique/solve.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "oblique/audit.hpp"
#include "oblique/parallel.hpp"

namespace oblique {

std::string to_string(SolveMethod m) {
  return m == SolveMethod::kPseudoTime ? "pseudo_time" : "policy_iteration";
}

SolveMethod solve_method_from_string(const std::string& s) {
  if (s == "pseudo" || s == "pseudo_time") return SolveMethod::kPseudoTime;
  if (s == "policy" || s == "policy_iteration") return SolveMethod::kPolicyIteration;
  throw ConfigError("unknown solve method '" + s + "' (expected pseudo or policy)");
}

std::string SolveReport::to_key_value() const {
  std::ostringstream out;
  out << "iterations=" << iterations << "\n";
  out << "final_residual=" << format_double(final_residual) << "\n";
  out << "method=" << to_string(method) << "\n";
  out << "wall_ms=" << format_double(wall_ms) << "\n";
  out << "tolerance=" << format_double(tolerance) << "\n";
  out << "converged=" << (converged ? "true" : "false") << "\n";
  out << "fallback_rows=" << fallback_rows << "\n";
  out << "corner_rows=" << corner_rows << "\n";
  return out.str();
}

double default_tolerance(const DiscreteProblem& problem) {
  return 1e-8 * (1.0 + problem.f_field().max_abs() + problem.g_field().max_abs() +
                 problem.dirichlet_field().max_abs());
}

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

void check_inputs(const DiscreteProblem& problem, const GridField& u0, double tol) {
  if (!(tol > 0.0)) throw ConfigError("solver tolerance must be positive");
  if (u0.grid != problem.grid()) throw ConfigError("initial guess lives on a different grid");
  if (!u0.all_finite()) throw NumericalError("initial guess contains NaN or Inf");
}

// Residual certificate of the returned field.
void finish(const DiscreteProblem& problem, SolveResult& out, Clock::time_point t0) {
  out.report.final_residual = full_residual(problem, out.u).max_non_dirichlet;
  out.report.converged = out.report.final_residual <= out.report.tolerance;
  out.report.fallback_rows = problem.fallback_rows();
  out.report.corner_rows = problem.corner_rows();
  out.report.wall_ms = elapsed_ms(t0);
}

}  // namespace

SolveResult solve_pseudo_time(const DiscreteProblem& problem, const GridField& u0, double tol, int max_iter) {
  check_inputs(problem, u0, tol);
  if (problem.options().oblique_order != 1)
    throw ConfigError("pseudo-time marching needs the monotone first-order oblique rows");
  const auto t0 = Clock::now();
  const std::size_t n = problem.size();
  SolveResult out{u0, {}};
  out.report.method = SolveMethod::kPseudoTime;
  out.report.tolerance = tol;

  std::vector<double> inv_diag(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const RowKind kind = problem.row(k).kind;
    if (kind == RowKind::kInterior || kind == RowKind::kOblique) {
      const double d = problem.diagonal_bound(k);
      if (!(d > 0.0)) throw NumericalError("row with zero diagonal in pseudo-time marching");
      inv_diag[k] = 1.0 / d;
    }
  }
  GridField& u = out.u;
  for (std::size_t k = 0; k < n; ++k) {
    if (problem.row(k).kind == RowKind::kDirichlet) u[k] = problem.dirichlet_field()[k];
    if (problem.row(k).kind == RowKind::kInactive) u[k] = 0.0;
  }
  std::vector<double> res(n, 0.0);
  GridField best = u;
  double best_res = INFINITY;
  for (int it = 0;; ++it) {
    parallel_for(n, [&](std::size_t b, std::size_t e) {
      for (std::size_t k = b; k < e; ++k) res[k] = inv_diag[k] != 0.0 ? problem.row_residual(u.values, k) : 0.0;
    });
    double m = 0.0;
    for (double r : res) m = std::max(m, std::abs(r));
    if (!std::isfinite(m)) throw NumericalError("pseudo-time iteration produced NaN");
    if (m < best_res) {
      best_res = m;
      best = u;
    }
    if (out.report.history.size() < 100000) out.report.history.push_back(m);
    if (m <= tol || it >= max_iter) {
      out.report.iterations = it;
      break;
    }
    for (std::size_t k = 0; k < n; ++k) u[k] += res[k] * inv_diag[k];
  }
  u = std::move(best);
  finish(problem, out, t0);
  return out;
}

SolveResult solve_policy_iteration(const DiscreteProblem& problem, const GridField& u0, double tol, int max_iter) {
  check_inputs(problem, u0, tol);
  if (problem.op().kind() == OperatorKind::kPucciMinus)
    throw ConfigError("policy iteration requires a convex operator; pucci_minus is not supported");
  const auto t0 = Clock::now();
  const std::size_t n = problem.size();
  SolveResult out{u0, {}};
  out.report.method = SolveMethod::kPolicyIteration;
  out.report.tolerance = tol;
  GridField& u = out.u;

  // Unknowns are the active nodes only.
  std::vector<int> slot(n, -1);
  std::vector<std::size_t> active;
  for (std::size_t k = 0; k < n; ++k) {
    if (problem.row(k).kind == RowKind::kInactive) {
      u[k] = 0.0;
      continue;
    }
    slot[k] = int(active.size());
    active.push_back(k);
  }
  const int m = int(active.size());
  Policy policy(n, 0), previous;
  bool full_step = true;
  std::vector<double> res(n, 0.0);
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;

  for (int it = 0;; ++it) {
    parallel_for(n, [&](std::size_t b, std::size_t e) {
      for (std::size_t k = b; k < e; ++k) res[k] = problem.row_residual(u.values, k, &policy[k]);
    });
    double rmax = 0.0, rdir = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const RowKind kind = problem.row(k).kind;
      if (kind == RowKind::kInterior || kind == RowKind::kOblique) rmax = std::max(rmax, std::abs(res[k]));
      if (kind == RowKind::kDirichlet) rdir = std::max(rdir, std::abs(res[k]));
    }
    if (!std::isfinite(rmax)) throw NumericalError("policy iteration produced NaN");
    out.report.history.push_back(rmax);
    const bool settled = rmax <= tol && rdir <= tol;
    // A repeated policy after a full step means the linear solve already hit its fixed point.
    if (settled || it >= max_iter || (it > 0 && full_step && policy == previous)) {
      out.report.iterations = it;
      break;
    }
    previous = policy;

    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(std::size_t(m) * 12);
    Eigen::VectorXd rhs(m);
    for (int r = 0; r < m; ++r) {
      const std::size_t k = active[std::size_t(r)];
      const LinearForm form = problem.linearize(k, policy[k]);
      triplets.emplace_back(r, r, form.diag);
      for (const Tap& t : form.taps) {
        if (slot[t.node] < 0) throw NumericalError("stencil references an exterior node");
        triplets.emplace_back(r, slot[t.node], t.weight);
      }
      rhs[r] = -form.constant;
    }
    Eigen::SparseMatrix<double> A(m, m);
    A.setFromTriplets(triplets.begin(), triplets.end());
    A.makeCompressed();
    // The sparsity pattern follows the policy, so each system is analyzed afresh.
    lu.compute(A);
    if (lu.info() != Eigen::Success)
      throw NumericalError("policy system is singular (monotonicity violated): " + lu.lastErrorMessage());
    const Eigen::VectorXd x = lu.solve(rhs);
    if (lu.info() != Eigen::Success || !x.allFinite()) throw NumericalError("policy linear solve failed");
    // Backtrack on the max-norm residual so the history never increases.
    const GridField base = u;
    auto trial_residual = [&](double theta) {
      for (int r = 0; r < m; ++r) {
        const std::size_t k = active[std::size_t(r)];
        u[k] = base[k] + theta * (x[r] - base[k]);
      }
      return full_residual(problem, u).max_non_dirichlet;
    };
    full_step = true;
    if (it > 0 && trial_residual(1.0) > rmax) {
      full_step = false;
      double theta = 0.5;
      while (theta >= 1.0 / 64 && trial_residual(theta) > rmax) theta *= 0.5;
      if (theta < 1.0 / 64) {
        trial_residual(1.0);
        full_step = true;
      }
    } else if (it == 0) {
      trial_residual(1.0);
    }
  }
  finish(problem, out, t0);
  return out;
}

SolveResult solve(const DiscreteProblem& problem, SolveMethod method, double tol) {
  if (tol <= 0.0) tol = default_tolerance(problem);
  const GridField u0(problem.grid());
  return method == SolveMethod::kPseudoTime ? solve_pseudo_time(problem, u0, tol)
                                            : solve_policy_iteration(problem, u0, tol);
}

}  // namespace oblique
