#include "oblique/operators.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace oblique {

std::array<double, 2> eigenvalues(const SymMat2& m) {
  const double mean = 0.5 * (m.a + m.c);
  const double disc = std::hypot(0.5 * (m.a - m.c), m.b);
  return {mean - disc, mean + disc};
}

double spectral_norm(const SymMat2& m) {
  const auto ev = eigenvalues(m);
  return std::max(std::abs(ev[0]), std::abs(ev[1]));
}

Vec2 leading_eigenvector(const SymMat2& m) {
  const auto ev = eigenvalues(m);
  const double l = ev[1];
  // Pick the better conditioned of the two rows of (M - l I).
  const Vec2 r0{m.b, l - m.a};
  const Vec2 r1{l - m.c, m.b};
  const Vec2 v = norm(r0) >= norm(r1) ? r0 : r1;
  if (norm(v) == 0.0) return {1.0, 0.0};
  return normalized(v);
}

SymMat2 congruence(const std::array<double, 4>& A, const SymMat2& m) {
  // (A^T M A)_{ij} = sum_kl A_ki M_kl A_lj
  const double a00 = A[0], a01 = A[1], a10 = A[2], a11 = A[3];
  const Vec2 col0{a00, a10};
  const Vec2 col1{a01, a11};
  return {m.quad(col0), dot(col0, m * col1), m.quad(col1)};
}

Ellipticity::Ellipticity(double lo, double hi) : lambda(lo), Lambda(hi) {
  if (!(lo > 0.0) || !(hi >= lo) || !std::isfinite(hi))
    throw ConfigError("ellipticity requires 0 < lambda <= Lambda (got lambda=" + std::to_string(lo) +
                      ", Lambda=" + std::to_string(hi) + ")");
}

std::string to_string(OperatorKind kind) {
  switch (kind) {
    case OperatorKind::kPucciPlus: return "pucci_plus";
    case OperatorKind::kPucciMinus: return "pucci_minus";
    case OperatorKind::kLinear: return "linear";
    case OperatorKind::kBellman: return "bellman";
  }
  return "unknown";
}

OperatorKind operator_kind_from_string(const std::string& s) {
  if (s == "pucci_plus") return OperatorKind::kPucciPlus;
  if (s == "pucci_minus") return OperatorKind::kPucciMinus;
  if (s == "linear") return OperatorKind::kLinear;
  if (s == "bellman") return OperatorKind::kBellman;
  throw ConfigError("unknown operator kind '" + s + "'");
}

namespace {

void check_member(const Ellipticity& e, const SymMat2& A) {
  const auto ev = eigenvalues(A);
  const double slack = 1e-12 * std::max(1.0, e.Lambda);
  if (ev[0] < e.lambda - slack || ev[1] > e.Lambda + slack)
    throw ConfigError("coefficient matrix eigenvalues (" + std::to_string(ev[0]) + ", " +
                      std::to_string(ev[1]) + ") outside [lambda, Lambda] = [" +
                      std::to_string(e.lambda) + ", " + std::to_string(e.Lambda) + "]");
}

}  // namespace

OperatorSpec OperatorSpec::pucci_plus(Ellipticity e, double F0) {
  return OperatorSpec(OperatorKind::kPucciPlus, e, {}, F0);
}

OperatorSpec OperatorSpec::pucci_minus(Ellipticity e, double F0) {
  return OperatorSpec(OperatorKind::kPucciMinus, e, {}, F0);
}

OperatorSpec OperatorSpec::linear(Ellipticity e, SymMat2 A, double F0) {
  check_member(e, A);
  return OperatorSpec(OperatorKind::kLinear, e, {LinearMember{A, F0}}, F0);
}

OperatorSpec OperatorSpec::bellman(Ellipticity e, std::vector<LinearMember> members) {
  if (members.empty()) throw ConfigError("bellman operator needs at least one member");
  for (const auto& m : members) check_member(e, m.A);
  return OperatorSpec(OperatorKind::kBellman, e, std::move(members), 0.0);
}

double OperatorSpec::constant_term() const {
  if (kind_ == OperatorKind::kBellman) {
    double best = members_.front().c;
    for (const auto& m : members_) best = std::max(best, m.c);
    return best;
  }
  return F0_;
}

double pucci_plus(const SymMat2& m, const Ellipticity& e) {
  const auto ev = eigenvalues(m);
  const double pos = std::max(ev[0], 0.0) + std::max(ev[1], 0.0);
  const double neg = std::max(-ev[0], 0.0) + std::max(-ev[1], 0.0);
  return e.Lambda * pos - e.lambda * neg;
}

double pucci_minus(const SymMat2& m, const Ellipticity& e) {
  const auto ev = eigenvalues(m);
  const double pos = std::max(ev[0], 0.0) + std::max(ev[1], 0.0);
  const double neg = std::max(-ev[0], 0.0) + std::max(-ev[1], 0.0);
  return e.lambda * pos - e.Lambda * neg;
}

double evaluate(const OperatorSpec& F, const SymMat2& m) {
  switch (F.kind()) {
    case OperatorKind::kPucciPlus: return pucci_plus(m, F.ellipticity()) + F.constant_term();
    case OperatorKind::kPucciMinus: return pucci_minus(m, F.ellipticity()) + F.constant_term();
    case OperatorKind::kLinear: {
      const auto& mem = F.members().front();
      return frobenius(mem.A, m) + mem.c;
    }
    case OperatorKind::kBellman: {
      double best = -INFINITY;
      for (const auto& mem : F.members()) best = std::max(best, frobenius(mem.A, m) + mem.c);
      return best;
    }
  }
  return NAN;
}

AuditReport ellipticity_audit(const OperatorSpec& F, int samples, std::uint64_t seed) {
  if (samples < 1) throw ConfigError("ellipticity_audit needs samples >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> entry(-1.0, 1.0);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI);
  std::uniform_real_distribution<double> mag(0.0, 2.0);
  std::bernoulli_distribution rank_one(0.25);

  const double lo = F.ellipticity().lambda;
  const double hi = F.ellipticity().Lambda;
  double trace_violation = 0.0;
  double spectral_violation = 0.0;
  for (int s = 0; s < samples; ++s) {
    const SymMat2 M{entry(rng), entry(rng), entry(rng)};
    const double th = angle(rng);
    const Vec2 q0{std::cos(th), std::sin(th)};
    const double d0 = mag(rng);
    const double d1 = rank_one(rng) ? 0.0 : mag(rng);
    const SymMat2 N = SymMat2::outer(q0) * d0 + SymMat2::outer(perp(q0)) * d1;
    const double diff = evaluate(F, M + N) - evaluate(F, M);
    const double tr = N.trace();
    const double sn = spectral_norm(N);
    trace_violation = std::max({trace_violation, lo * tr - diff, diff - hi * tr});
    spectral_violation = std::max({spectral_violation, lo * sn - diff, diff - 2.0 * hi * sn});
  }
  AuditReport r;
  r.name = "ellipticity";
  r.set("samples", samples);
  r.set("lambda", lo).set("Lambda", hi);
  r.set("trace_form_violation", std::max(trace_violation, 0.0));
  r.set("spectral_form_violation", std::max(spectral_violation, 0.0));
  r.passed = trace_violation <= 1e-10 && spectral_violation <= 1e-10;
  return r;
}

double reduced_boundary_operator(const OperatorSpec& F, double M, Vec2 beta, double Abar) {
  if (beta.y == 0.0) throw ConfigError("reduced boundary operator needs beta_n != 0");
  const double bt = beta.x;
  const double bn = beta.y;
  const SymMat2 full{M, -M * bt / bn, (Abar + bt * M * bt) / (bn * bn)};
  return evaluate(F, full);
}

double normalizing_shift(const OperatorSpec& F) {
  const double F0 = evaluate(F, SymMat2{});
  if (F0 == 0.0) return 0.0;
  const double bound = std::abs(F0) / F.ellipticity().lambda;
  double lo = -bound;
  double hi = bound;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, bound); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (evaluate(F, SymMat2::diag(0.0, mid)) < 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace oblique
