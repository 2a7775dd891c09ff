#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "oblique/audit.hpp"
#include "oblique/vec.hpp"

namespace oblique {

/// Symmetric 2x2 matrix [[a, b], [b, c]]. Symmetry holds by construction.
struct SymMat2 {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;

  static constexpr SymMat2 diag(double d0, double d1) { return {d0, 0.0, d1}; }
  static constexpr SymMat2 identity() { return {1.0, 0.0, 1.0}; }
  /// v v^T
  static constexpr SymMat2 outer(Vec2 v) { return {v.x * v.x, v.x * v.y, v.y * v.y}; }

  constexpr double trace() const { return a + c; }
  constexpr double det() const { return a * c - b * b; }

  constexpr SymMat2 operator+(const SymMat2& o) const { return {a + o.a, b + o.b, c + o.c}; }
  constexpr SymMat2 operator-(const SymMat2& o) const { return {a - o.a, b - o.b, c - o.c}; }
  constexpr SymMat2 operator*(double s) const { return {a * s, b * s, c * s}; }
  constexpr SymMat2 operator-() const { return {-a, -b, -c}; }
  constexpr Vec2 operator*(Vec2 v) const { return {a * v.x + b * v.y, b * v.x + c * v.y}; }
  constexpr bool operator==(const SymMat2&) const = default;

  /// v^T M v
  constexpr double quad(Vec2 v) const { return v.x * (a * v.x + b * v.y) + v.y * (b * v.x + c * v.y); }
};

constexpr SymMat2 operator*(double s, const SymMat2& m) { return m * s; }
/// tr(A B) for symmetric A, B.
constexpr double frobenius(const SymMat2& p, const SymMat2& q) {
  return p.a * q.a + 2.0 * p.b * q.b + p.c * q.c;
}

/// Eigenvalues in ascending order, closed form via trace and discriminant.
std::array<double, 2> eigenvalues(const SymMat2& m);
/// Spectral radius ||M||.
double spectral_norm(const SymMat2& m);
/// Unit eigenvector for the larger eigenvalue.
Vec2 leading_eigenvector(const SymMat2& m);
/// A^T M A for a general (not necessarily symmetric) 2x2 matrix A given row-major.
SymMat2 congruence(const std::array<double, 4>& A, const SymMat2& m);

struct Ellipticity {
  double lambda = 1.0;
  double Lambda = 1.0;

  Ellipticity() = default;
  Ellipticity(double lo, double hi);
};

/// Linear member tr(A M) + c of a Bellman family.
struct LinearMember {
  SymMat2 A;
  double c = 0.0;
};

enum class OperatorKind { kPucciPlus, kPucciMinus, kLinear, kBellman };

std::string to_string(OperatorKind kind);
OperatorKind operator_kind_from_string(const std::string& s);

/// Fully nonlinear operator F on symmetric matrices. Construct through the
/// factory functions, which enforce the ellipticity invariants.
class OperatorSpec {
 public:
  static OperatorSpec pucci_plus(Ellipticity e, double F0 = 0.0);
  static OperatorSpec pucci_minus(Ellipticity e, double F0 = 0.0);
  /// tr(A M) + F0. Eigenvalues of A must lie in [lambda, Lambda].
  static OperatorSpec linear(Ellipticity e, SymMat2 A, double F0 = 0.0);
  /// max_k tr(A_k M) + c_k. Every A_k must have eigenvalues in [lambda, Lambda].
  static OperatorSpec bellman(Ellipticity e, std::vector<LinearMember> members);

  OperatorKind kind() const { return kind_; }
  const Ellipticity& ellipticity() const { return ellipticity_; }
  /// F(0).
  double constant_term() const;
  const std::vector<LinearMember>& members() const { return members_; }
  /// Convex in M: pucci_plus, linear, bellman.
  bool is_convex() const { return kind_ != OperatorKind::kPucciMinus; }

 private:
  OperatorSpec(OperatorKind k, Ellipticity e, std::vector<LinearMember> m, double F0)
      : kind_(k), ellipticity_(e), members_(std::move(m)), F0_(F0) {}

  OperatorKind kind_;
  Ellipticity ellipticity_;
  std::vector<LinearMember> members_;
  double F0_ = 0.0;
};

/// M+(M) = Lambda * sum(positive eigenvalues) - lambda * sum(|negative eigenvalues|).
double pucci_plus(const SymMat2& m, const Ellipticity& e);
/// M-(M) = lambda * sum(positive eigenvalues) - Lambda * sum(|negative eigenvalues|).
double pucci_minus(const SymMat2& m, const Ellipticity& e);

double evaluate(const OperatorSpec& F, const SymMat2& m);

/// Samples random symmetric M and positive semidefinite N and checks
/// lambda tr N <= F(M+N) - F(M) <= Lambda tr N. The spectral-radius form
/// lambda ||N|| <= . <= n Lambda ||N|| is reported alongside.
AuditReport ellipticity_audit(const OperatorSpec& F, int samples, std::uint64_t seed = 0x5eed);

/// Boundary operator obtained by restricting F to the flat boundary:
/// evaluates F on [[M, -M b1/b2], [-b1 M/b2, (Abar + b1 M b1)/b2^2]] with
/// M the 1x1 tangential block.
double reduced_boundary_operator(const OperatorSpec& F, double M, Vec2 beta, double Abar);

/// Returns t with F(t e_n e_n^T) = 0, so that F~(M) = F(M + t e_n e_n^T)
/// satisfies F~(0) = 0. |t| <= |F(0)|/lambda.
double normalizing_shift(const OperatorSpec& F);

}  // namespace oblique
