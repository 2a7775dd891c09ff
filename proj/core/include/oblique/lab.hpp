#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "oblique/audit.hpp"
#include "oblique/envelope.hpp"
#include "oblique/solve.hpp"

namespace oblique {

/// Log-log fit residual(r) ~ C r^exponent over dyadic radii.
struct RegularityFit {
  std::string kind;
  std::vector<double> radii;
  std::vector<double> residuals;
  double exponent = 0.0;
  double constant = 0.0;
  double r_squared = 0.0;
  /// Every residual vanished: the field is reproduced exactly (exponent +inf).
  bool exact = false;
  /// R^2 >= 0.98 (or exact).
  bool resolved = false;
  /// Fit-specific extras: gradient, compatibility, fitted Hessian, ...
  AuditReport extras;

  AuditReport to_report() const;
  /// `r,residual` rows.
  std::string to_csv() const;
};

/// Least-squares slope of log(residual) against log(r). Zero residuals mark
/// the fit exact.
RegularityFit fit_power_law(std::string kind, std::vector<double> radii, std::vector<double> residuals);

/// Nodes of G(R) = {|x'| < R, x_n < rho R} and G~(R) = {|x'| < R, rho R <
/// x_n < 3 rho R}, taken over the closed domain (boundary nodes included).
struct HarnackRegions {
  double R = 0.0;
  double rho = 0.0;
  NodeMask lower;
  NodeMask upper;
};

HarnackRegions make_harnack_regions(const Grid& grid, double R, double rho);

/// (sum_k |v_k|^2 h^2)^{1/2} over interior nodes.
double discrete_l2_norm(const GridField& v);

/// sup_{G~(R)} u / (inf_{G(R/4)} u + R f_norm + R g_sup). Throws ConfigError
/// when a region is empty on this grid.
AuditReport harnack_quotient(const GridField& u, double R, double rho, double f_norm, double g_sup,
                             double tol = 0.0);

/// osc(r) = max over the closed ball B_r(x0) of |u - u(x0)|, u(x0) from the
/// nearest node.
RegularityFit holder_fit(const GridField& u, Vec2 x0, const std::vector<double>& radii);

/// Optional boundary data for the compatibility check of c1alpha_fit.
struct PointData {
  Vec2 beta;
  double gamma = 0.0;
  double g = 0.0;
};

/// Best affine fit per ball; residual max |u - l_r|. Reports the gradient of
/// l_r at the smallest radius and beta.Dl_r + gamma u(x0) - g per radius.
RegularityFit c1alpha_fit(const GridField& u, Vec2 x0, const std::vector<double>& radii,
                          std::optional<PointData> data = std::nullopt);

/// Best quadratic fit per ball; reports the fitted Hessian and, if an
/// operator is given, |F(a) - f(x0)|.
RegularityFit c2alpha_fit(const GridField& u, Vec2 x0, const std::vector<double>& radii,
                          const OperatorSpec* op = nullptr, double f_x0 = 0.0);

/// Solves both problems and checks u1 <= u2 + 10 tol, given f1 >= f2,
/// g1 >= g2, gamma <= 0 and phi1 <= phi2. Also reports the worst margin of
/// M+_h(D^2 (u1 - u2); lambda/n, Lambda) - (f1 - f2) at interior nodes.
struct ComparisonResult {
  AuditReport report;
  GridField u1;
  GridField u2;
};
ComparisonResult comparison_audit(const DiscreteProblem& p1, const DiscreteProblem& p2, SolveMethod method,
                                  double tol = 0.0);

/// Builds the discrete problem for a given h.
using ProblemFactory = std::function<DiscreteProblem(double h)>;

/// Solves at each h and reports max-norm errors over interior and oblique
/// nodes plus pairwise orders log(e_i/e_{i+1}) / log(h_i/h_{i+1}). Pairs whose
/// errors are both below 10 tol count as exact reproduction.
AuditReport convergence_study(const ProblemFactory& make, const ScalarFn& exact, const std::vector<double>& h_list,
                              SolveMethod method, double tol = 0.0);

/// Max |u - exact| over interior and oblique nodes.
double max_error(const GridField& u, const ScalarFn& exact);

}  // namespace oblique
