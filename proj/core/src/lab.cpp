#include "oblique/lab.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace oblique {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool active(const Node& n) { return n.cls != NodeClass::kExterior; }

std::vector<std::size_t> ball_nodes(const Grid& grid, Vec2 x0, double r) {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const Node& n = grid.node(k);
    if (active(n) && norm(n.phys - x0) <= r) out.push_back(k);
  }
  return out;
}

std::size_t nearest_node(const Grid& grid, Vec2 x0) {
  std::size_t best = grid.size();
  double d = kInf;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const Node& n = grid.node(k);
    if (!active(n)) continue;
    const double dk = norm(n.phys - x0);
    if (dk < d) {
      d = dk;
      best = k;
    }
  }
  if (best == grid.size()) throw ConfigError("grid has no active node");
  return best;
}

void check_radii(const Grid& grid, const std::vector<double>& radii) {
  if (radii.size() < 3) throw ConfigError("a regularity fit needs at least 3 radii");
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (!(radii[i] > 0.0) || !std::isfinite(radii[i])) throw ConfigError("radii must be positive");
    if (i > 0 && !(radii[i] < radii[i - 1])) throw ConfigError("radii must be strictly decreasing");
    if (radii[i] < 3.0 * grid.h())
      throw ConfigError("radius " + format_double(radii[i]) + " is under-resolved: need r >= 3h = " +
                        format_double(3.0 * grid.h()));
  }
}

double field_scale(const GridField& u) { return std::max(1.0, u.max_abs()); }

// Least-squares polynomial fit about x0 on the ball; returns max |u - p| and the coefficients
// in the scaled variable (x - x0) / r.
struct BallFit {
  double residual = 0.0;
  Eigen::VectorXd coef;
};

BallFit fit_on_ball(const GridField& u, Vec2 x0, double r, int degree) {
  const Grid& grid = *u.grid;
  const auto nodes = ball_nodes(grid, x0, r);
  const int cols = degree == 1 ? 3 : 6;
  if (static_cast<int>(nodes.size()) < 2 * cols)
    throw ConfigError("ball of radius " + format_double(r) + " holds too few nodes for the fit");
  Eigen::MatrixXd A(nodes.size(), cols);
  Eigen::VectorXd b(nodes.size());
  for (std::size_t row = 0; row < nodes.size(); ++row) {
    const Vec2 d = (grid.node(nodes[row]).phys - x0) * (1.0 / r);
    A(row, 0) = 1.0;
    A(row, 1) = d.x;
    A(row, 2) = d.y;
    if (degree == 2) {
      A(row, 3) = 0.5 * d.x * d.x;
      A(row, 4) = d.x * d.y;
      A(row, 5) = 0.5 * d.y * d.y;
    }
    b(row) = u[nodes[row]];
  }
  BallFit out;
  out.coef = A.colPivHouseholderQr().solve(b);
  out.residual = (A * out.coef - b).cwiseAbs().maxCoeff();
  return out;
}

}  // namespace

AuditReport RegularityFit::to_report() const {
  AuditReport r;
  r.name = kind;
  r.set("exponent", exponent).set("constant", constant).set("r_squared", r_squared);
  r.set("exact", exact ? 1.0 : 0.0).set("resolved", resolved ? 1.0 : 0.0);
  for (std::size_t i = 0; i < radii.size(); ++i) {
    r.set("r_" + std::to_string(i), radii[i]);
    r.set("residual_" + std::to_string(i), residuals[i]);
  }
  for (const auto& [k, v] : extras.values) r.set(k, v);
  for (const auto& n : extras.notes) r.note(n);
  r.passed = resolved;
  return r;
}

std::string RegularityFit::to_csv() const {
  std::ostringstream out;
  out << "r,residual\n";
  for (std::size_t i = 0; i < radii.size(); ++i)
    out << format_double(radii[i]) << ',' << format_double(residuals[i]) << '\n';
  return out.str();
}

RegularityFit fit_power_law(std::string kind, std::vector<double> radii, std::vector<double> residuals) {
  RegularityFit fit;
  fit.kind = std::move(kind);
  fit.radii = std::move(radii);
  fit.residuals = std::move(residuals);
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < fit.radii.size(); ++i) {
    if (fit.residuals[i] > 0.0) {
      lx.push_back(std::log(fit.radii[i]));
      ly.push_back(std::log(fit.residuals[i]));
    }
  }
  if (lx.empty()) {
    fit.exact = true;
    fit.resolved = true;
    fit.exponent = kInf;
    fit.r_squared = 1.0;
    return fit;
  }
  if (lx.size() < fit.radii.size()) fit.extras.note("zero residuals dropped from the fit");
  if (lx.size() < 2) {
    fit.exponent = std::numeric_limits<double>::quiet_NaN();
    fit.extras.note("fewer than two positive residuals");
    return fit;
  }
  const double n = static_cast<double>(lx.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i] / n;
    my += ly[i] / n;
  }
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  fit.exponent = sxy / sxx;
  fit.constant = std::exp(my - fit.exponent * mx);
  double ss_res = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double e = ly[i] - (my + fit.exponent * (lx[i] - mx));
    ss_res += e * e;
  }
  fit.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  fit.resolved = fit.r_squared >= 0.98;
  return fit;
}

HarnackRegions make_harnack_regions(const Grid& grid, double R, double rho) {
  if (!(R > 0.0) || !(rho > 0.0)) throw ConfigError("Harnack regions need R > 0 and rho > 0");
  HarnackRegions g;
  g.R = R;
  g.rho = rho;
  g.lower.assign(grid.size(), false);
  g.upper.assign(grid.size(), false);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const Node& n = grid.node(k);
    if (!active(n)) continue;
    const Vec2 y = n.pos;
    if (std::abs(y.x) >= R) continue;
    if (y.y < rho * R) g.lower[k] = true;
    if (y.y > rho * R && y.y < 3.0 * rho * R) g.upper[k] = true;
  }
  return g;
}

double discrete_l2_norm(const GridField& v) {
  const Grid& grid = *v.grid;
  double acc = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k)
    if (grid.node(k).cls == NodeClass::kInterior) acc += v[k] * v[k];
  return std::sqrt(acc) * grid.h();
}

AuditReport harnack_quotient(const GridField& u, double R, double rho, double f_norm, double g_sup, double tol) {
  const Grid& grid = *u.grid;
  const HarnackRegions outer = make_harnack_regions(grid, R, rho);
  const HarnackRegions inner = make_harnack_regions(grid, R / 4.0, rho);
  double sup_upper = -kInf;
  double inf_lower = kInf;
  std::size_t n_upper = 0, n_lower = 0;
  double u_min = kInf;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (!active(grid.node(k))) continue;
    u_min = std::min(u_min, u[k]);
    if (outer.upper[k]) {
      sup_upper = std::max(sup_upper, u[k]);
      ++n_upper;
    }
    if (inner.lower[k]) {
      inf_lower = std::min(inf_lower, u[k]);
      ++n_lower;
    }
  }
  if (n_upper == 0) throw ConfigError("upper Harnack region is empty at h=" + format_double(grid.h()));
  if (n_lower == 0) throw ConfigError("lower Harnack region G(R/4) is empty at h=" + format_double(grid.h()));

  AuditReport r;
  r.name = "harnack";
  const double denom = inf_lower + R * f_norm + R * g_sup;
  const double c = denom > 0.0 ? sup_upper / denom : kInf;
  r.set("R", R).set("rho", rho).set("h", grid.h());
  r.set("sup_upper", sup_upper).set("inf_lower", inf_lower);
  r.set("f_norm", f_norm).set("g_sup", g_sup);
  r.set("c_emp", c);
  r.set("upper_nodes", static_cast<double>(n_upper)).set("lower_nodes", static_cast<double>(n_lower));
  r.set("u_min", u_min);
  if (u_min < -10.0 * tol) {
    r.applicable = false;
    r.note("u is not nonnegative");
  }
  r.passed = r.applicable && std::isfinite(c);
  return r;
}

RegularityFit holder_fit(const GridField& u, Vec2 x0, const std::vector<double>& radii) {
  const Grid& grid = *u.grid;
  check_radii(grid, radii);
  const double u0 = u[nearest_node(grid, x0)];
  std::vector<double> osc;
  for (double r : radii) {
    double m = 0.0;
    for (std::size_t k : ball_nodes(grid, x0, r)) m = std::max(m, std::abs(u[k] - u0));
    osc.push_back(m);
  }
  const double floor = 1e-13 * field_scale(u);
  for (double& v : osc)
    if (v <= floor) v = 0.0;
  RegularityFit fit = fit_power_law("holder", radii, std::move(osc));
  fit.extras.set("u_x0", u0);
  return fit;
}

RegularityFit c1alpha_fit(const GridField& u, Vec2 x0, const std::vector<double>& radii,
                          std::optional<PointData> data) {
  const Grid& grid = *u.grid;
  check_radii(grid, radii);
  const double u0 = u[nearest_node(grid, x0)];
  const double floor = 1e-11 * field_scale(u);
  std::vector<double> res;
  AuditReport extras;
  Vec2 grad;
  for (std::size_t i = 0; i < radii.size(); ++i) {
    const BallFit bf = fit_on_ball(u, x0, radii[i], 1);
    res.push_back(bf.residual <= floor ? 0.0 : bf.residual);
    grad = {bf.coef(1) / radii[i], bf.coef(2) / radii[i]};
    if (data) {
      const double compat = dot(data->beta, grad) + data->gamma * u0 - data->g;
      extras.set("compat_" + std::to_string(i), compat);
    }
  }
  RegularityFit fit = fit_power_law("c1alpha", radii, std::move(res));
  fit.extras.set("grad_x1", grad.x).set("grad_x2", grad.y);
  for (const auto& kv : extras.values) fit.extras.set(kv.first, kv.second);
  if (std::isfinite(fit.exponent) || fit.exact) fit.extras.set("alpha", fit.exponent - 1.0);
  return fit;
}

RegularityFit c2alpha_fit(const GridField& u, Vec2 x0, const std::vector<double>& radii, const OperatorSpec* op,
                          double f_x0) {
  const Grid& grid = *u.grid;
  check_radii(grid, radii);
  const double floor = 1e-11 * field_scale(u);
  std::vector<double> res;
  SymMat2 hess;
  Vec2 grad;
  for (double r : radii) {
    const BallFit bf = fit_on_ball(u, x0, r, 2);
    res.push_back(bf.residual <= floor ? 0.0 : bf.residual);
    grad = {bf.coef(1) / r, bf.coef(2) / r};
    hess = {bf.coef(3) / (r * r), bf.coef(4) / (r * r), bf.coef(5) / (r * r)};
  }
  RegularityFit fit = fit_power_law("c2alpha", radii, std::move(res));
  fit.extras.set("grad_x1", grad.x).set("grad_x2", grad.y);
  fit.extras.set("hess_11", hess.a).set("hess_12", hess.b).set("hess_22", hess.c);
  if (op) fit.extras.set("operator_gap", std::abs(evaluate(*op, hess) - f_x0));
  if (std::isfinite(fit.exponent) || fit.exact) fit.extras.set("alpha", fit.exponent - 2.0);
  return fit;
}

namespace {

// max over frames of sum_d (Lambda D_d^+ - mu D_d^-), with D_d the scheme's own directional
// differences of u1 minus those of u2.
std::optional<double> discrete_pucci_plus(const DiscreteProblem& p1, const DiscreteProblem& p2, const GridField& u1,
                                          const GridField& u2, std::size_t k, double mu, double Lambda) {
  const Row& r1 = p1.row(k);
  const Row& r2 = p2.row(k);
  if (r1.diffs.empty() || r1.diffs.size() != r2.diffs.size()) return std::nullopt;
  std::optional<double> best;
  for (const auto& fr : p1.grid()->frames()) {
    double acc = 0.0;
    bool ok = true;
    for (int d : fr) {
      if (r1.diffs[d].state == ArmState::kUnavailable || r2.diffs[d].state == ArmState::kUnavailable) {
        ok = false;
        break;
      }
      const double v = r1.diffs[d].form.apply(u1.values, k) - r2.diffs[d].form.apply(u2.values, k);
      acc += v > 0.0 ? Lambda * v : mu * v;
    }
    if (ok && (!best || acc > *best)) best = acc;
  }
  return best;
}

}  // namespace

ComparisonResult comparison_audit(const DiscreteProblem& p1, const DiscreteProblem& p2, SolveMethod method,
                                  double tol) {
  const Grid& g1 = *p1.grid();
  const Grid& g2 = *p2.grid();
  if (g1.size() != g2.size() || g1.h() != g2.h() || g1.i_min() != g2.i_min() || g1.j_min() != g2.j_min())
    throw ConfigError("comparison requires both problems on the same grid");
  for (std::size_t k = 0; k < g1.size(); ++k)
    if (g1.node(k).cls != g2.node(k).cls) throw ConfigError("comparison requires identical node classes");

  if (!(tol > 0.0)) tol = std::max(default_tolerance(p1), default_tolerance(p2));

  AuditReport r;
  r.name = "comparison";
  double f_gap = kInf, g_gap = kInf, phi_gap = kInf, gamma_max = -kInf;
  for (std::size_t k = 0; k < g1.size(); ++k) {
    switch (g1.node(k).cls) {
      case NodeClass::kInterior:
        f_gap = std::min(f_gap, p1.f_field()[k] - p2.f_field()[k]);
        break;
      case NodeClass::kOblique:
        g_gap = std::min(g_gap, p1.g_field()[k] - p2.g_field()[k]);
        gamma_max = std::max({gamma_max, p1.gamma_field()[k], p2.gamma_field()[k]});
        break;
      case NodeClass::kDirichlet:
        phi_gap = std::min(phi_gap, p2.dirichlet_field()[k] - p1.dirichlet_field()[k]);
        break;
      default:
        break;
    }
  }
  const double slack = 1e-14;
  const bool hyp = f_gap >= -slack && g_gap >= -slack && phi_gap >= -slack && gamma_max <= 0.0;
  r.set("min_f1_minus_f2", f_gap).set("min_g1_minus_g2", g_gap).set("min_phi2_minus_phi1", phi_gap);
  r.set("gamma_max", gamma_max);
  if (!hyp) {
    r.applicable = false;
    r.note("data are not ordered: need f1 >= f2, g1 >= g2, phi1 <= phi2 and gamma <= 0");
  }

  const SolveResult s1 = solve(p1, method, tol);
  const SolveResult s2 = solve(p2, method, tol);
  double violation = -kInf;
  double margin = kInf;
  std::size_t checked = 0;
  GridField w(p1.grid());
  for (std::size_t k = 0; k < g1.size(); ++k) w[k] = s1.u[k] - s2.u[k];
  const Ellipticity& e = p1.op().ellipticity();
  for (std::size_t k = 0; k < g1.size(); ++k) {
    const NodeClass c = g1.node(k).cls;
    if (c == NodeClass::kExterior) continue;
    violation = std::max(violation, w[k]);
    if (c != NodeClass::kInterior) continue;
    if (auto m = discrete_pucci_plus(p1, p2, s1.u, s2.u, k, e.lambda / 2.0, e.Lambda)) {
      margin = std::min(margin, *m - (p1.f_field()[k] - p2.f_field()[k]));
      ++checked;
    }
  }
  r.set("max_u1_minus_u2", violation);
  r.set("tolerance", tol);
  r.set("pucci_margin", margin);
  r.set("margin_nodes", static_cast<double>(checked));
  r.set("converged_1", s1.report.converged ? 1.0 : 0.0).set("converged_2", s2.report.converged ? 1.0 : 0.0);
  r.passed = r.applicable && s1.report.converged && s2.report.converged && violation <= 10.0 * tol;
  return {std::move(r), s1.u, s2.u};
}

double max_error(const GridField& u, const ScalarFn& exact) {
  const Grid& grid = *u.grid;
  double e = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const Node& n = grid.node(k);
    if (n.cls == NodeClass::kInterior || n.cls == NodeClass::kOblique)
      e = std::max(e, std::abs(u[k] - exact(n.phys)));
  }
  return e;
}

AuditReport convergence_study(const ProblemFactory& make, const ScalarFn& exact, const std::vector<double>& h_list,
                              SolveMethod method, double tol) {
  if (h_list.size() < 2) throw ConfigError("a convergence study needs at least two grid sizes");
  for (std::size_t i = 1; i < h_list.size(); ++i)
    if (!(h_list[i] < h_list[i - 1])) throw ConfigError("h_list must be strictly decreasing");
  AuditReport r;
  r.name = "convergence";
  std::vector<double> err, tols;
  bool converged = true;
  for (std::size_t i = 0; i < h_list.size(); ++i) {
    const DiscreteProblem p = make(h_list[i]);
    const double t = tol > 0.0 ? tol : default_tolerance(p);
    const SolveResult s = solve(p, method, t);
    converged = converged && s.report.converged;
    err.push_back(max_error(s.u, exact));
    tols.push_back(t);
    r.set("h_" + std::to_string(i), h_list[i]);
    r.set("error_" + std::to_string(i), err.back());
    r.set("iterations_" + std::to_string(i), s.report.iterations);
  }
  double observed = kInf;
  int exact_pairs = 0;
  for (std::size_t i = 0; i + 1 < h_list.size(); ++i) {
    const std::string key = "order_" + std::to_string(i);
    if (err[i] <= 10.0 * tols[i] && err[i + 1] <= 10.0 * tols[i + 1]) {
      ++exact_pairs;
      r.set(key, kInf);
      continue;
    }
    const double q = std::log(err[i] / err[i + 1]) / std::log(h_list[i] / h_list[i + 1]);
    r.set(key, q);
    observed = std::min(observed, q);
  }
  r.set("observed_order", observed);
  r.set("exact_pairs", exact_pairs);
  if (exact_pairs > 0) r.note("errors at the tolerance floor count as exact reproduction");
  r.passed = converged;
  return r;
}

}  // namespace oblique
