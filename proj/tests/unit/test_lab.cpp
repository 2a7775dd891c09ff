#include <gtest/gtest.h>

#include <cmath>

#include "oblique/lab.hpp"

using namespace oblique;

namespace {

ScalarFn constant(double c) {
  return [c](Vec2) { return c; };
}

ObliqueField beta_field(Vec2 beta, double gamma, ScalarFn g) {
  return {[beta](Vec2) { return beta; }, constant(gamma), std::move(g), beta.y};
}

DiscreteProblem make(OperatorSpec op, ScalarFn f, ObliqueField obl, ScalarFn phi, double h, int order = 1) {
  SchemeOptions o;
  o.h = h;
  o.oblique_order = order;
  return DiscreteProblem(ProblemData{make_half_disk(1.0), std::move(op), std::move(f), std::move(obl), std::move(phi)},
                         o);
}

const auto kLaplace = OperatorSpec::linear(Ellipticity(1, 1), SymMat2::identity());
const auto kPucci = OperatorSpec::pucci_plus(Ellipticity(1, 2));

const std::vector<double> kRadii{0.4, 0.2, 0.1, 0.05};
const std::vector<double> kDyadic{0.5, 0.25, 0.125, 0.0625};

}  // namespace

TEST(PowerLaw, RecoversExactPowers) {
  std::vector<double> radii{0.8, 0.4, 0.2, 0.1}, res;
  for (double r : radii) res.push_back(2.0 * std::pow(r, 1.5));
  const auto fit = fit_power_law("t", radii, res);
  EXPECT_NEAR(fit.exponent, 1.5, 1e-12);
  EXPECT_NEAR(fit.constant, 2.0, 1e-12);
  EXPECT_NEAR(fit.r_squared, 1.0, 1e-12);
  EXPECT_TRUE(fit.resolved);
  EXPECT_FALSE(fit.exact);
  EXPECT_EQ(fit.to_csv().substr(0, 11), "r,residual\n");
}

TEST(PowerLaw, AllZeroIsExact) {
  const auto fit = fit_power_law("t", {0.4, 0.2, 0.1}, {0, 0, 0});
  EXPECT_TRUE(fit.exact);
  EXPECT_TRUE(std::isinf(fit.exponent));
}

TEST(PowerLaw, NoisyDataIsNotResolved) {
  const auto fit = fit_power_law("t", {0.8, 0.4, 0.2, 0.1}, {1.0, 0.01, 1.0, 0.01});
  EXPECT_LT(fit.r_squared, 0.98);
  EXPECT_FALSE(fit.resolved);
}

TEST(Harnack, ConstantFieldGivesOne) {
  const auto grid = build_grid(make_half_disk(1.0), 1.0 / 32);
  const auto u = GridField::sample(grid, constant(3.0));
  const auto r = harnack_quotient(u, 0.5, 0.0625, 0.0, 0.0);
  EXPECT_EQ(r.at("c_emp"), 1.0);
  EXPECT_TRUE(r.passed);
}

TEST(Harnack, AffineFieldMatchesDirectQuotient) {
  const auto grid = build_grid(make_half_disk(1.0), 1.0 / 32);
  const auto u = GridField::sample(grid, [](Vec2 x) { return 2.0 + x.x; });
  const double R = 0.5, rho = 0.0625;
  double sup = -1e300, inf = 1e300;
  for (const Node& n : grid->nodes()) {
    if (n.cls == NodeClass::kExterior || std::abs(n.pos.x) >= R) continue;
    if (n.pos.y > rho * R && n.pos.y < 3 * rho * R) sup = std::max(sup, 2.0 + n.phys.x);
    if (std::abs(n.pos.x) < R / 4 && n.pos.y < rho * R / 4) inf = std::min(inf, 2.0 + n.phys.x);
  }
  const auto r = harnack_quotient(u, R, rho, 0.0, 0.0);
  EXPECT_DOUBLE_EQ(r.at("c_emp"), sup / inf);
  EXPECT_GT(r.at("c_emp"), 1.0);
}

TEST(Harnack, DataTermsEnlargeTheDenominator) {
  const auto grid = build_grid(make_half_disk(1.0), 1.0 / 32);
  const auto u = GridField::sample(grid, constant(1.0));
  const auto r = harnack_quotient(u, 0.5, 0.0625, 2.0, 4.0);
  EXPECT_DOUBLE_EQ(r.at("c_emp"), 1.0 / (1.0 + 0.5 * 2.0 + 0.5 * 4.0));
}

TEST(Harnack, EmptyRegionThrows) {
  const auto grid = build_grid(make_half_disk(1.0), 1.0 / 16);
  const auto u = GridField::sample(grid, constant(1.0));
  EXPECT_THROW(harnack_quotient(u, 0.1, 0.0625, 0.0, 0.0), ConfigError);
}

TEST(Harnack, NegativeFieldIsInapplicable) {
  const auto grid = build_grid(make_half_disk(1.0), 1.0 / 32);
  const auto u = GridField::sample(grid, [](Vec2 x) { return x.x; });
  EXPECT_FALSE(harnack_quotient(u, 0.5, 0.0625, 0.0, 0.0, 1e-8).applicable);
}

TEST(Harnack, L2NormOfConstant) {
  const auto grid = build_grid(make_half_disk(1.0), 1.0 / 64);
  const auto f = GridField::sample(grid, constant(1.0));
  // Interior nodes cover the half disk up to O(h).
  EXPECT_NEAR(discrete_l2_norm(f), std::sqrt(M_PI / 2), 0.05);
}

TEST(HolderFit, SquareRootProfile) {
  const Vec2 x0{0.0, 0.0};
  const auto grid = build_grid(make_half_disk(1.0), 1.0 / 256);
  const auto u = GridField::sample(grid, [x0](Vec2 x) { return std::sqrt(norm(x - x0)); });
  const auto fit = holder_fit(u, x0, kRadii);
  EXPECT_GE(fit.exponent, 0.48);
  EXPECT_LE(fit.exponent, 0.52);
  EXPECT_TRUE(fit.resolved);
}

TEST(HolderFit, RejectsBadRadii) {
  const auto grid = build_grid(make_half_disk(1.0), 1.0 / 32);
  const auto u = GridField::sample(grid, constant(1.0));
  EXPECT_THROW(holder_fit(u, {0, 0}, {0.4, 0.2, 0.05}), ConfigError);
  EXPECT_THROW(holder_fit(u, {0, 0}, {0.4, 0.4, 0.2}), ConfigError);
  EXPECT_THROW(holder_fit(u, {0, 0}, {0.4, 0.2}), ConfigError);
}

TEST(HolderFit, ConstantIsExact) {
  const auto grid = build_grid(make_half_disk(1.0), 1.0 / 64);
  const auto u = GridField::sample(grid, constant(1.0));
  EXPECT_TRUE(holder_fit(u, {0, 0}, kRadii).exact);
}

TEST(C1Fit, CubicResidualScalesAsCube) {
  const auto grid = build_grid(make_half_disk(1.0), 1.0 / 128);
  const auto u = GridField::sample(grid, [](Vec2 x) { return x.x * x.x * x.x; });
  const auto fit = c1alpha_fit(u, {0, 0}, kDyadic);
  EXPECT_NEAR(fit.exponent, 3.0, 0.05);
  EXPECT_TRUE(fit.resolved);
}

TEST(C1Fit, AffineIsExactWithCompatibleGradient) {
  const auto grid = build_grid(make_half_disk(1.0), 1.0 / 64);
  const auto u = GridField::sample(grid, [](Vec2 x) { return 1.0 + 2.0 * x.x + 3.0 * x.y; });
  const auto fit = c1alpha_fit(u, {0, 0}, kRadii, PointData{{0, 1}, 0.0, 3.0});
  EXPECT_TRUE(fit.exact);
  EXPECT_NEAR(fit.extras.at("grad_x1"), 2.0, 1e-9);
  EXPECT_NEAR(fit.extras.at("grad_x2"), 3.0, 1e-9);
  EXPECT_NEAR(fit.extras.at("compat_3"), 0.0, 1e-9);
}

TEST(C2Fit, QuadraticIsExactAndHessianRecovered) {
  const auto grid = build_grid(make_half_disk(1.0), 1.0 / 64);
  const auto u = GridField::sample(grid, [](Vec2 x) { return x.x * x.x - 2.0 * x.y * x.y + x.x * x.y; });
  const auto fit = c2alpha_fit(u, {0, 0}, kRadii, &kPucci, pucci_plus({2, 1, -4}, kPucci.ellipticity()));
  EXPECT_TRUE(fit.exact);
  EXPECT_NEAR(fit.extras.at("hess_11"), 2.0, 1e-8);
  EXPECT_NEAR(fit.extras.at("hess_12"), 1.0, 1e-8);
  EXPECT_NEAR(fit.extras.at("hess_22"), -4.0, 1e-8);
  EXPECT_NEAR(fit.extras.at("operator_gap"), 0.0, 1e-7);
}

TEST(C2Fit, CubicResidualScalesAsCube) {
  const auto grid = build_grid(make_half_disk(1.0), 1.0 / 256);
  const auto u = GridField::sample(grid, [](Vec2 x) { return x.x * x.x * x.x + x.y * x.y; });
  const auto fit = c2alpha_fit(u, {0, 0}, kDyadic);
  EXPECT_NEAR(fit.exponent, 3.0, 0.05);
}

TEST(Comparison, IdenticalProblemsAgree) {
  const auto p = make(kPucci, constant(-1), beta_field({0.3, 1}, 0, constant(0)), constant(0), 1.0 / 16);
  const auto c = comparison_audit(p, p, SolveMethod::kPolicyIteration, 1e-10);
  EXPECT_TRUE(c.report.passed);
  EXPECT_LE(std::abs(c.report.at("max_u1_minus_u2")), 1e-9);
}

TEST(Comparison, OrderedDataGiveOrderedSolutions) {
  const auto p1 = make(kPucci, constant(-1), beta_field({0, 1}, -0.5, constant(0.5)), constant(0), 1.0 / 16);
  const auto p2 = make(kPucci, constant(-2), beta_field({0, 1}, -0.5, constant(0)), constant(0.1), 1.0 / 16);
  const auto c = comparison_audit(p1, p2, SolveMethod::kPolicyIteration, 1e-10);
  EXPECT_TRUE(c.report.applicable);
  EXPECT_TRUE(c.report.passed);
  EXPECT_LT(c.report.at("max_u1_minus_u2"), 0.0);
  EXPECT_GE(c.report.at("pucci_margin"), -1e-6);
  EXPECT_GT(c.report.at("margin_nodes"), 0.0);
}

TEST(Comparison, UnorderedDataAreFlagged) {
  const auto p1 = make(kPucci, constant(-2), beta_field({0, 1}, 0, constant(0)), constant(0), 1.0 / 16);
  const auto p2 = make(kPucci, constant(-1), beta_field({0, 1}, 0, constant(0)), constant(0), 1.0 / 16);
  EXPECT_FALSE(comparison_audit(p1, p2, SolveMethod::kPolicyIteration, 1e-10).report.applicable);
}

TEST(Comparison, MismatchedGridsThrow) {
  const auto p1 = make(kPucci, constant(-1), beta_field({0, 1}, 0, constant(0)), constant(0), 1.0 / 16);
  const auto p2 = make(kPucci, constant(-1), beta_field({0, 1}, 0, constant(0)), constant(0), 1.0 / 32);
  EXPECT_THROW(comparison_audit(p1, p2, SolveMethod::kPolicyIteration), ConfigError);
}

TEST(Convergence, AffineSolutionIsExactAtEveryH) {
  auto exact = [](Vec2 x) { return 1.0 + 0.5 * x.x + 2.0 * x.y; };
  auto factory = [&](double h) {
    return make(kLaplace, constant(0), beta_field({0, 1}, 0, constant(2.0)), exact, h);
  };
  const auto r = convergence_study(factory, exact, {1.0 / 8, 1.0 / 16, 1.0 / 32}, SolveMethod::kPolicyIteration, 1e-10);
  EXPECT_EQ(r.at("exact_pairs"), 2.0);
  for (int i = 0; i < 3; ++i) EXPECT_LE(r.at("error_" + std::to_string(i)), 1e-9);
}

TEST(Convergence, FirstOrderObliqueRowConvergesAtFirstOrder) {
  auto exact = [](Vec2 x) { return x.x * x.x + x.y * x.y; };
  auto factory = [&](double h) {
    return make(kLaplace, constant(4), beta_field({0, 1}, 0, constant(0)), exact, h);
  };
  const auto r = convergence_study(factory, exact, {1.0 / 16, 1.0 / 32, 1.0 / 64}, SolveMethod::kPolicyIteration);
  EXPECT_GT(r.at("observed_order"), 0.8);
  EXPECT_LT(r.at("observed_order"), 1.4);
}

TEST(Convergence, RejectsBadGridList) {
  auto exact = [](Vec2) { return 0.0; };
  auto factory = [&](double h) { return make(kLaplace, constant(0), beta_field({0, 1}, 0, constant(0)), exact, h); };
  EXPECT_THROW(convergence_study(factory, exact, {1.0 / 16}, SolveMethod::kPolicyIteration), ConfigError);
  EXPECT_THROW(convergence_study(factory, exact, {1.0 / 16, 1.0 / 8}, SolveMethod::kPolicyIteration), ConfigError);
}
