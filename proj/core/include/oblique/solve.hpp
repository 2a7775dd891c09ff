#pragma once

#include <string>
#include <vector>

#include "oblique/discretize.hpp"

namespace oblique {

enum class SolveMethod { kPseudoTime, kPolicyIteration };

std::string to_string(SolveMethod m);
SolveMethod solve_method_from_string(const std::string& s);

struct SolveReport {
  SolveMethod method = SolveMethod::kPseudoTime;
  int iterations = 0;
  /// Max |residual| over interior and oblique rows of the returned field.
  double final_residual = 0.0;
  double tolerance = 0.0;
  bool converged = false;
  double wall_ms = 0.0;
  /// Residual norm before each iteration, then the final one.
  std::vector<double> history;
  std::size_t fallback_rows = 0;
  std::size_t corner_rows = 0;

  /// `iterations=`, `final_residual=`, `method=`, `wall_ms=` lines and friends.
  std::string to_key_value() const;
};

struct SolveResult {
  GridField u;
  SolveReport report;
};

/// 1e-8 (1 + |f| + |g| + |phi|) with sup norms over the sampled data.
double default_tolerance(const DiscreteProblem& problem);

/// Explicit monotone relaxation u <- u + dt (F_h[u] - f) with the local step
/// dt = 1 / (bound on the row's diagonal), Dirichlet rows assigned exactly.
/// Returns the best iterate, flagged non-converged, when max_iter is hit.
SolveResult solve_pseudo_time(const DiscreteProblem& problem, const GridField& u0, double tol, int max_iter = 500000);

/// Howard's algorithm: freeze the maximizing member per node, solve the
/// linear system with a sparse LU, repeat. Rejects pucci_minus.
SolveResult solve_policy_iteration(const DiscreteProblem& problem, const GridField& u0, double tol,
                                   int max_iter = 200);

/// Dispatches on method with u0 = 0 and the default tolerance when tol <= 0.
SolveResult solve(const DiscreteProblem& problem, SolveMethod method, double tol = 0.0);

}  // namespace oblique
