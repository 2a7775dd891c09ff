#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "oblique/audit.hpp"
#include "oblique/geometry.hpp"
#include "oblique/operators.hpp"

namespace oblique {

enum class BarrierKind { kHarnack, kDirichletQuadratic, kExteriorSphere, kHolderCone };

std::string to_string(BarrierKind k);

/// Explicit barrier with closed-form gradient and Hessian.
struct Barrier {
  BarrierKind kind = BarrierKind::kHarnack;
  std::function<double(Vec2)> value;
  std::function<Vec2(Vec2)> gradient;
  std::function<SymMat2(Vec2)> hessian;
  /// Constants chosen at construction (K1, p, exponent, ...).
  std::vector<std::pair<std::string, double>> params;

  double param(const std::string& key) const;
};

/// Largest rho with rho < delta1 / (16 (1 + gamma_sup)) and
/// M+(diag(2 I_{n-1}, -1/(2 rho^2))) < -1, shrunk by 1e-6.
double rho_admissible(const Ellipticity& e, double delta1, double gamma_sup, int n = 2);

/// w1 = 2 rho R - x_n.
Barrier harnack_w1(double R, double rho);
/// w2 = 2 - (x_n / (2 rho R))^2 - x_n / (2 rho R) + |x'|^2 / R^2.
Barrier harnack_w2(double R, double rho);
/// Analytic part of w = u + (g_sup/delta1) w1 + (A/4) w2 - A. Throws
/// ConfigError if rho exceeds rho_max or R <= 0.
Barrier harnack_barrier(double R, double rho, double rho_max, double A, double g_sup, double delta1);

struct QuadraticBarrierInput {
  OperatorSpec op;
  double f_sup = 0.0;
  double g_sup = 0.0;
  double gamma_sup = 0.0;
  double phi_sup = 0.0;
  double delta0 = 1.0;
  double height = 1.0;
};

/// v2 = -K1 x_n^2 - K2 x_n + K3 with
///   K1 = (1 + f_sup) / (2 lambda),
///   K2 = (g_sup + gamma_sup phi_sup + 1 + 2 K1 height) / delta0,
///   K3 = 1 + K2 height + K1 height^2,
/// escalated (K1, K2 doubled) until check_quadratic_barrier passes; throws
/// NumericalError after 10 escalations.
Barrier dirichlet_quadratic_barrier(const QuadraticBarrierInput& in);

/// Checks F(D^2 v2) <= -f_sup, the worst-case oblique inequality
/// delta0 v2'(x_n) <= -g_sup - gamma_sup phi_sup (gamma <= 0) and v2 >= 1
/// on x_n in [0, height].
AuditReport check_quadratic_barrier(const Barrier& b, const QuadraticBarrierInput& in, int samples = 10000);

/// p actually used for the exterior-sphere barrier in dimension n.
double exterior_sphere_exponent(double p, const Ellipticity& e, int n = 2);
/// v3 = r1^{-p} - |x - y|^{-p}, p raised to exterior_sphere_exponent.
Barrier exterior_sphere_barrier(double r1, Vec2 y, double p, const Ellipticity& e);

/// psi = K (n . (x - x1))^{alpha/2}; zero (and flagged by the caller) where
/// the inner product is negative.
Barrier holder_cone_barrier(Vec2 x1, Vec2 normal, double K, double alpha);

/// Evaluates F on the analytic Hessian at every sample. Supersolution:
/// max F <= -margin. Subsolution: min F >= margin.
AuditReport verify_supersolution(const Barrier& b, const OperatorSpec& F, const std::vector<Vec2>& samples,
                                 double margin, bool subsolution = false);

/// Max relative gap between the analytic Hessian and central differences of
/// the value with the given step.
double hessian_fd_gap(const Barrier& b, const std::vector<Vec2>& samples, double step = 1e-4);

/// Largest R0 <= r_max with |phi(x')| <= (rho/16) |x'| for |x'| <= R0 (sampled).
double largest_admissible_R0(const Polynomial& phi, double rho, double r_max, int samples = 4000);

/// Builds one barrier family ("w", "v2", "v3", "cone") from named parameters,
/// verifies it on `samples` seeded random points and compares its Hessian
/// with finite differences (relative gap <= 1e-6).
/// Parameters and defaults:
///   w:    R=1 delta1=1 gamma_sup=0 A=1 g_sup=0 (rho from rho_admissible)
///   v2:   f_sup=0 g_sup=0 gamma_sup=0 phi_sup=0 delta0=1 height=1 F0=0
///   v3:   r1=0.3 y1=0 y2=-0.5 p=1
///   cone: x1=0 x2=0 n1=0 n2=1 K=1 alpha=1
AuditReport barrier_check(const std::string& kind, const Ellipticity& e,
                          const std::vector<std::pair<std::string, double>>& params, int samples,
                          std::uint64_t seed);

}  // namespace oblique
