#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oblique/geometry.hpp"

using namespace oblique;

TEST(HalfDisk, Classification) {
  const auto d = make_half_disk(1.0);
  EXPECT_TRUE(d->contains({0.0, 0.5}));
  EXPECT_TRUE(d->on_oblique_patch({0.3, 0.0}));
  EXPECT_TRUE(d->on_dirichlet_patch({0.0, 1.0}));
  const Vec2 n = d->inner_normal({0.0, 1.0});
  EXPECT_NEAR(n.x, 0.0, 1e-14);
  EXPECT_NEAR(n.y, -1.0, 1e-14);
  EXPECT_THROW(make_half_disk(0.0), ConfigError);
}

TEST(Cap, RadiusClosedForm) {
  EXPECT_DOUBLE_EQ((CapSpec{1.0, 1.0}.big_radius()), 1.0);
  EXPECT_DOUBLE_EQ((CapSpec{1.0, 0.5}.big_radius()), 1.25);
  const auto d = make_spherical_cap({1.0, 0.5});
  EXPECT_NEAR(d->signed_distance({0.0, 0.5}), 0.0, 1e-14);
  EXPECT_TRUE(d->on_dirichlet_patch({0.0, 0.5}));
  EXPECT_THROW(make_spherical_cap({1.0, 1.5}), ConfigError);
  EXPECT_THROW(make_spherical_cap({1.0, 0.0}), ConfigError);
}

TEST(Cap, GeometryIdentity) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  for (int s = 0; s < 1000; ++s) {
    const double r = u(rng);
    const double h = r * u(rng);
    const CapSpec c{r, h};
    const double R = c.big_radius();
    EXPECT_NEAR((R - h) * (R - h) + r * r - R * R, 0.0, 1e-12 * std::max(1.0, R * R));
  }
}

TEST(Domain, PatchPartitionAndUnitNormals) {
  for (const auto& d : {make_half_disk(1.0), make_spherical_cap({1.0, 0.4}),
                        make_graph_domain(Polynomial({0.0, 0.1, 0.3}), 0.8)}) {
    for (const Vec2& p : sample_boundary(*d, 10000)) {
      EXPECT_NE(d->on_oblique_patch(p), d->on_dirichlet_patch(p));
      EXPECT_NEAR(norm(d->inner_normal(p)), 1.0, 1e-10);
    }
  }
}

TEST(Domain, ObliquePatchRelativelyOpen) {
  const auto d = make_half_disk(1.0);
  // Points approaching an interior point of Gamma along the boundary stay on Gamma.
  for (int k = 2; k < 50; ++k) EXPECT_TRUE(d->on_oblique_patch({0.5 + std::pow(0.5, k), 0.0}));
  // The corner belongs to the Dirichlet patch.
  EXPECT_FALSE(d->on_oblique_patch({1.0, 0.0}));
}

TEST(BetaProjection, Examples) {
  EXPECT_DOUBLE_EQ(beta_projection({0.3, 0.5}, {0.0, 1.0}), 0.3);
  const double s = 1.0 / std::sqrt(2.0);
  EXPECT_NEAR(beta_projection({0.0, 0.2}, {s, s}), -0.2, 1e-15);
  EXPECT_DOUBLE_EQ(beta_projection({0.7, 0.0}, {0.0, 1.0}), 0.7);
  EXPECT_THROW(beta_projection({0.1, 0.1}, {1.0, 0.0}), ConfigError);
}

TEST(BetaProjection, DistanceIdentity) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1, 1);
  std::uniform_real_distribution<double> un(0.1, 1);
  for (int s = 0; s < 10000; ++s) {
    const Vec2 x{u(rng), u(rng)};
    const Vec2 b{u(rng), un(rng)};
    const double xp = beta_projection(x, b);
    const double lhs = norm(x - Vec2{xp, 0.0});
    const double rhs = norm(b) / std::abs(b.y) * std::abs(x.y);
    EXPECT_NEAR(lhs, rhs, 1e-12 * std::max(1.0, rhs));
  }
}

TEST(Flatten, Examples) {
  const GraphChart zero{Polynomial({0.0}), 1.0};
  const Vec2 y = flatten_transform(zero, {0.3, 0.4});
  EXPECT_EQ(y, (Vec2{0.3, 0.4}));
  const GraphChart sq{Polynomial({0.0, 0.0, 1.0}), 1.0};
  const Vec2 z = flatten_transform(sq, {0.5, 0.25});
  EXPECT_DOUBLE_EQ(z.x, 0.5);
  EXPECT_DOUBLE_EQ(z.y, 0.0);
  EXPECT_THROW(flatten_transform(sq, {1.5, 0.0}), ConfigError);
}

TEST(Flatten, RoundTripAndSign) {
  const GraphChart c{Polynomial({0.05, -0.2, 0.7, 0.1}), 1.0};
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int s = 0; s < 10000; ++s) {
    const Vec2 x{u(rng), u(rng)};
    const Vec2 back = unflatten_transform(c, flatten_transform(c, x));
    EXPECT_NEAR(back.x, x.x, 1e-14);
    EXPECT_NEAR(back.y, x.y, 1e-14);
    const Vec2 y = flatten_transform(c, x);
    if (x.y != c.phi(x.x)) EXPECT_EQ(x.y > c.phi(x.x), y.y > 0.0);
  }
}

TEST(Obliqueness, DetectsViolations) {
  const auto d = make_half_disk(1.0);
  ObliqueField ok{[](Vec2) { return Vec2{0.3, 0.8}; }, [](Vec2) { return 0.0; }, [](Vec2) { return 0.0; }, 0.5};
  EXPECT_TRUE(check_obliqueness(*d, ok, 200).passed);
  ObliqueField bad = ok;
  bad.beta = [](Vec2 x) { return Vec2{0.9, 0.2 + x.x}; };
  const auto r = check_obliqueness(*d, bad, 200);
  EXPECT_FALSE(r.passed);
  EXPECT_LT(r.at("min_beta_dot_n"), 0.5);
}

TEST(OneDirection, ConstantBetaGivesItsNorm) {
  const auto pts = sample_oblique_patch(*make_half_disk(1.0), 100);
  EXPECT_NEAR(one_direction_constant(pts, [](Vec2) { return Vec2{0.6, 0.8}; }), 1.0, 1e-10);
  // Two directions (+-0.6, 0.8): best xi is vertical, giving 0.8.
  EXPECT_NEAR(one_direction_constant(pts, [](Vec2 x) { return Vec2{x.x > 0 ? 0.6 : -0.6, 0.8}; }), 0.8, 1e-10);
}

TEST(CapHeight, DefaultHeightSatisfiesCondition) {
  const double delta0 = 0.6;
  const CapSpec cap{1.0, default_cap_height(delta0)};
  const auto r = validate_cap_height(cap, [](Vec2) { return Vec2{-0.8, 0.6}; });
  EXPECT_TRUE(r.passed);
  const auto bad = validate_cap_height(CapSpec{1.0, 1.0}, [](Vec2) { return Vec2{-0.8, 0.6}; });
  EXPECT_FALSE(bad.passed);
}
