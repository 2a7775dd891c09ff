#include "oblique/barriers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace oblique {

std::string to_string(BarrierKind k) {
  switch (k) {
    case BarrierKind::kHarnack: return "harnack_w1_w2";
    case BarrierKind::kDirichletQuadratic: return "dirichlet_quadratic";
    case BarrierKind::kExteriorSphere: return "exterior_sphere";
    case BarrierKind::kHolderCone: return "holder_cone";
  }
  return "unknown";
}

double Barrier::param(const std::string& key) const {
  for (const auto& [k, v] : params)
    if (k == key) return v;
  throw std::out_of_range("barrier has no parameter '" + key + "'");
}

double rho_admissible(const Ellipticity& e, double delta1, double gamma_sup, int n) {
  if (!(delta1 > 0.0)) throw ConfigError("delta1 must be positive");
  const double rho1 = delta1 / (16.0 * (1.0 + std::max(gamma_sup, 0.0)));
  const double rho2 = std::sqrt(e.lambda / (2.0 * (1.0 + 2.0 * e.Lambda * (n - 1))));
  return std::min(rho1, rho2) * (1.0 - 1e-6);
}

Barrier harnack_w1(double R, double rho) {
  Barrier b;
  b.kind = BarrierKind::kHarnack;
  b.value = [=](Vec2 x) { return 2.0 * rho * R - x.y; };
  b.gradient = [](Vec2) { return Vec2{0.0, -1.0}; };
  b.hessian = [](Vec2) { return SymMat2{}; };
  b.params = {{"R", R}, {"rho", rho}};
  return b;
}

Barrier harnack_w2(double R, double rho) {
  Barrier b;
  b.kind = BarrierKind::kHarnack;
  const double s = 2.0 * rho * R;
  b.value = [=](Vec2 x) { return 2.0 - (x.y / s) * (x.y / s) - x.y / s + x.x * x.x / (R * R); };
  b.gradient = [=](Vec2 x) { return Vec2{2.0 * x.x / (R * R), -2.0 * x.y / (s * s) - 1.0 / s}; };
  b.hessian = [=](Vec2) { return SymMat2::diag(2.0 / (R * R), -2.0 / (s * s)); };
  b.params = {{"R", R}, {"rho", rho}};
  return b;
}

Barrier harnack_barrier(double R, double rho, double rho_max, double A, double g_sup, double delta1) {
  if (!(R > 0.0)) throw ConfigError("Harnack radius R must be positive");
  if (!(rho > 0.0) || rho > rho_max)
    throw ConfigError("rho=" + format_double(rho) + " is not admissible (max " + format_double(rho_max) + ")");
  if (!(delta1 > 0.0)) throw ConfigError("delta1 must be positive");
  const Barrier w1 = harnack_w1(R, rho);
  const Barrier w2 = harnack_w2(R, rho);
  const double c1 = g_sup / delta1;
  Barrier b;
  b.kind = BarrierKind::kHarnack;
  b.value = [=](Vec2 x) { return c1 * w1.value(x) + 0.25 * A * w2.value(x) - A; };
  b.gradient = [=](Vec2 x) { return w1.gradient(x) * c1 + w2.gradient(x) * (0.25 * A); };
  b.hessian = [=](Vec2 x) { return w2.hessian(x) * (0.25 * A); };
  b.params = {{"R", R}, {"rho", rho}, {"A", A}, {"g_sup", g_sup}, {"delta1", delta1}};
  return b;
}

namespace {

Barrier quadratic(double K1, double K2, double K3) {
  Barrier b;
  b.kind = BarrierKind::kDirichletQuadratic;
  b.value = [=](Vec2 x) { return -K1 * x.y * x.y - K2 * x.y + K3; };
  b.gradient = [=](Vec2 x) { return Vec2{0.0, -2.0 * K1 * x.y - K2}; };
  b.hessian = [=](Vec2) { return SymMat2::diag(0.0, -2.0 * K1); };
  b.params = {{"K1", K1}, {"K2", K2}, {"K3", K3}};
  return b;
}

}  // namespace

AuditReport check_quadratic_barrier(const Barrier& b, const QuadraticBarrierInput& in, int samples) {
  AuditReport r;
  r.name = "dirichlet_quadratic";
  const double interior = evaluate(in.op, b.hessian({0.0, 0.0}));
  const double target = -in.g_sup - in.gamma_sup * in.phi_sup;
  double worst_boundary = -std::numeric_limits<double>::infinity();
  double min_value = std::numeric_limits<double>::infinity();
  for (int s = 0; s < samples; ++s) {
    const double xn = in.height * s / std::max(1, samples - 1);
    const Vec2 x{0.0, xn};
    // beta_n >= delta0 with beta_n multiplying a negative derivative; gamma <= 0.
    worst_boundary = std::max(worst_boundary, in.delta0 * b.gradient(x).y);
    min_value = std::min(min_value, b.value(x));
  }
  r.set("F_of_hessian", interior).set("f_sup", in.f_sup);
  r.set("oblique_worst", worst_boundary).set("oblique_target", target);
  r.set("min_value", min_value);
  r.passed = interior <= -in.f_sup && worst_boundary <= target && min_value >= 1.0 - 1e-12;
  return r;
}

Barrier dirichlet_quadratic_barrier(const QuadraticBarrierInput& in) {
  for (double v : {in.f_sup, in.g_sup, in.gamma_sup, in.phi_sup})
    if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("barrier bounds must be finite and nonnegative");
  if (!(in.delta0 > 0.0) || !(in.height > 0.0)) throw ConfigError("delta0 and height must be positive");
  const double lambda = in.op.ellipticity().lambda;
  const double H = in.height;
  double K1 = (1.0 + in.f_sup) / (2.0 * lambda);
  double K2 = (in.g_sup + in.gamma_sup * in.phi_sup + 1.0 + 2.0 * K1 * H) / in.delta0;
  for (int esc = 0; esc <= 10; ++esc) {
    Barrier b = quadratic(K1, K2, 1.0 + K2 * H + K1 * H * H);
    if (check_quadratic_barrier(b, in, 1000).passed) {
      b.params.push_back({"escalations", double(esc)});
      return b;
    }
    K1 *= 2.0;
    K2 *= 2.0;
  }
  throw NumericalError("quadratic barrier constants failed verification after 10 escalations");
}

double exterior_sphere_exponent(double p, const Ellipticity& e, int n) {
  return std::max(p, (n - 1) * e.Lambda / e.lambda - 1.0 + 0.5);
}

Barrier exterior_sphere_barrier(double r1, Vec2 y, double p_in, const Ellipticity& e) {
  if (!(r1 > 0.0)) throw ConfigError("exterior sphere radius must be positive");
  if (!(p_in > 0.0)) throw ConfigError("exterior sphere exponent must be positive");
  const double p = exterior_sphere_exponent(p_in, e);
  Barrier b;
  b.kind = BarrierKind::kExteriorSphere;
  b.value = [=](Vec2 x) { return std::pow(r1, -p) - std::pow(norm(x - y), -p); };
  b.gradient = [=](Vec2 x) {
    const double r = norm(x - y);
    return (x - y) * (p * std::pow(r, -p - 2.0));
  };
  b.hessian = [=](Vec2 x) {
    const double r = norm(x - y);
    const Vec2 e_hat = (x - y) / r;
    return (SymMat2::identity() - SymMat2::outer(e_hat) * (p + 2.0)) * (p * std::pow(r, -p - 2.0));
  };
  b.params = {{"r1", r1}, {"p", p}, {"y1", y.x}, {"y2", y.y}};
  return b;
}

Barrier holder_cone_barrier(Vec2 x1, Vec2 normal, double K, double alpha) {
  if (!(alpha > 0.0) || alpha > 1.0) throw ConfigError("cone barrier needs 0 < alpha <= 1");
  if (!(K > 0.0)) throw ConfigError("cone barrier needs K > 0");
  const Vec2 n = normalized(normal);
  const double a = 0.5 * alpha;
  Barrier b;
  b.kind = BarrierKind::kHolderCone;
  b.value = [=](Vec2 x) {
    const double t = dot(n, x - x1);
    return t > 0.0 ? K * std::pow(t, a) : 0.0;
  };
  b.gradient = [=](Vec2 x) {
    const double t = dot(n, x - x1);
    return t > 0.0 ? n * (K * a * std::pow(t, a - 1.0)) : Vec2{};
  };
  b.hessian = [=](Vec2 x) {
    const double t = dot(n, x - x1);
    return t > 0.0 ? SymMat2::outer(n) * (K * a * (a - 1.0) * std::pow(t, a - 2.0)) : SymMat2{};
  };
  b.params = {{"K", K}, {"alpha", alpha}, {"exponent", a}};
  return b;
}

AuditReport verify_supersolution(const Barrier& b, const OperatorSpec& F, const std::vector<Vec2>& samples,
                                 double margin, bool subsolution) {
  AuditReport r;
  r.name = subsolution ? "subsolution" : "supersolution";
  double worst = subsolution ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
  Vec2 at;
  for (const Vec2& x : samples) {
    const double v = evaluate(F, b.hessian(x));
    if (subsolution ? v < worst : v > worst) {
      worst = v;
      at = x;
    }
  }
  r.set("samples", double(samples.size()));
  r.set("margin", margin);
  r.set("worst", worst);
  r.set("worst_x1", at.x).set("worst_x2", at.y);
  r.passed = samples.empty() || (subsolution ? worst >= margin : worst <= -margin);
  return r;
}

double hessian_fd_gap(const Barrier& b, const std::vector<Vec2>& samples, double step) {
  double gap = 0.0;
  for (const Vec2& x : samples) {
    const SymMat2 H = b.hessian(x);
    const double f0 = b.value(x);
    const double hxx = (b.value(x + Vec2{step, 0}) - 2 * f0 + b.value(x - Vec2{step, 0})) / (step * step);
    const double hyy = (b.value(x + Vec2{0, step}) - 2 * f0 + b.value(x - Vec2{0, step})) / (step * step);
    const double hxy = (b.value(x + Vec2{step, step}) - b.value(x + Vec2{step, -step}) -
                        b.value(x + Vec2{-step, step}) + b.value(x + Vec2{-step, -step})) /
                       (4 * step * step);
    const double scale = std::max({1.0, std::abs(H.a), std::abs(H.b), std::abs(H.c)});
    gap = std::max({gap, std::abs(hxx - H.a) / scale, std::abs(hyy - H.c) / scale, std::abs(hxy - H.b) / scale});
  }
  return gap;
}

double largest_admissible_R0(const Polynomial& phi, double rho, double r_max, int samples) {
  const double bound = rho / 16.0;
  for (int s = 1; s <= samples; ++s) {
    const double t = r_max * s / samples;
    for (double x : {t, -t}) {
      if (std::abs(phi(x)) > bound * std::abs(x)) return r_max * (s - 1) / samples;
    }
  }
  return r_max;
}

namespace {

double lookup(const std::vector<std::pair<std::string, double>>& params, const std::string& key, double fallback) {
  for (const auto& [k, v] : params)
    if (k == key) return v;
  return fallback;
}

}  // namespace

AuditReport barrier_check(const std::string& kind, const Ellipticity& e,
                          const std::vector<std::pair<std::string, double>>& params, int samples,
                          std::uint64_t seed) {
  static const std::vector<std::pair<std::string, std::vector<std::string>>> known = {
      {"w", {"R", "delta1", "gamma_sup", "A", "g_sup"}},
      {"v2", {"f_sup", "g_sup", "gamma_sup", "phi_sup", "delta0", "height", "F0"}},
      {"v3", {"r1", "y1", "y2", "p"}},
      {"cone", {"x1", "x2", "n1", "n2", "K", "alpha"}}};
  const auto family = std::find_if(known.begin(), known.end(), [&](const auto& k) { return k.first == kind; });
  if (family == known.end()) throw ConfigError("unknown barrier '" + kind + "' (expected w, v2, v3 or cone)");
  for (const auto& [k, v] : params)
    if (std::find(family->second.begin(), family->second.end(), k) == family->second.end())
      throw ConfigError("barrier '" + kind + "' has no parameter '" + k + "'");
  if (samples < 1) throw ConfigError("barrier check needs at least one sample");
  auto P = [&](const std::string& key, double fallback) { return lookup(params, key, fallback); };

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Vec2> pts, regular;
  const OperatorSpec pucci = OperatorSpec::pucci_plus(e);
  Barrier b;
  AuditReport verify;
  AuditReport extra;
  bool extra_ok = true;

  if (kind == "w") {
    const double R = P("R", 1.0), delta1 = P("delta1", 1.0), A = P("A", 1.0);
    const double rho = rho_admissible(e, delta1, P("gamma_sup", 0.0));
    b = harnack_barrier(R, rho, rho, A, P("g_sup", 0.0), delta1);
    for (int s = 0; s < samples; ++s)
      pts.push_back({R * (4.0 * unit(rng) - 2.0), 2.0 * rho * R * (1e-6 + (1.0 - 1e-6) * unit(rng))});
    regular = pts;
    verify = verify_supersolution(b, pucci, pts, 0.25 * A);
    extra.set("rho", rho);
  } else if (kind == "v2") {
    QuadraticBarrierInput in{OperatorSpec::pucci_plus(e, P("F0", 0.0)), P("f_sup", 0.0), P("g_sup", 0.0),
                             P("gamma_sup", 0.0), P("phi_sup", 0.0), P("delta0", 1.0), P("height", 1.0)};
    b = dirichlet_quadratic_barrier(in);
    for (int s = 0; s < samples; ++s) pts.push_back({2.0 * unit(rng) - 1.0, in.height * unit(rng)});
    regular = pts;
    verify = verify_supersolution(b, in.op, pts, in.f_sup);
    extra = check_quadratic_barrier(b, in, samples);
    extra_ok = extra.passed;
  } else if (kind == "v3") {
    const double r1 = P("r1", 0.3);
    const Vec2 y{P("y1", 0.0), P("y2", -0.5)};
    b = exterior_sphere_barrier(r1, y, P("p", 1.0), e);
    for (int s = 0; s < samples; ++s) {
      const double r = r1 * (1.0 + 2.0 * unit(rng));
      const double t = 2.0 * M_PI * unit(rng);
      pts.push_back(y + Vec2{std::cos(t), std::sin(t)} * r);
    }
    regular = pts;
    verify = verify_supersolution(b, pucci, pts, 0.0);
  } else {
    const Vec2 x1{P("x1", 0.0), P("x2", 0.0)};
    const Vec2 n = normalized(Vec2{P("n1", 0.0), P("n2", 1.0)});
    const Vec2 tangent{-n.y, n.x};
    b = holder_cone_barrier(x1, n, P("K", 1.0), P("alpha", 1.0));
    for (int s = 0; s < samples; ++s) {
      const double t = unit(rng);
      const Vec2 x = x1 + n * t + tangent * (2.0 * unit(rng) - 1.0);
      pts.push_back(x);
      // Finite differences need distance from the apex plane.
      if (t >= 0.1) regular.push_back(x);
    }
    verify = verify_supersolution(b, pucci, pts, 0.0);
  }
  if (regular.size() > 1000) regular.resize(1000);
  const double gap = hessian_fd_gap(b, regular, 1e-4);

  AuditReport r;
  r.name = "barrier_check";
  r.note("barrier=" + to_string(b.kind));
  for (const auto& [k, v] : b.params) r.set(k, v);
  for (const auto& [k, v] : extra.values) r.set(k, v);
  r.set("samples", samples).set("lambda", e.lambda).set("Lambda", e.Lambda);
  r.set("worst", verify.at("worst")).set("margin", verify.at("margin"));
  r.set("worst_x1", verify.at("worst_x1")).set("worst_x2", verify.at("worst_x2"));
  r.set("fd_samples", static_cast<double>(regular.size())).set("hessian_fd_gap", gap);
  r.passed = verify.passed && extra_ok && gap <= 1e-6;
  return r;
}

}  // namespace oblique
