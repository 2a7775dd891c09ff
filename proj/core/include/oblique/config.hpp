#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "oblique/discretize.hpp"
#include "oblique/expression.hpp"
#include "oblique/solve.hpp"

namespace oblique {

/// One `key = value` entry, keyed as `section.key`.
struct ConfigEntry {
  std::string value;
  int line = 0;
};

/// Validated experiment description. Every section is optional and falls
/// back to the half-disk Laplace problem with zero data.
struct ExperimentConfig {
  std::string source;
  std::string text;
  std::uint64_t hash = 0;
  std::map<std::string, ConfigEntry> entries;

  std::shared_ptr<const Domain> domain;
  OperatorSpec op = OperatorSpec::linear(Ellipticity(1, 1), SymMat2::identity());
  Expression f;

  Expression beta1 = Expression::constant(0.0);
  Expression beta2 = Expression::constant(1.0);
  Expression gamma;
  Expression g;
  Expression dirichlet;
  /// Configured, or the smallest beta.n over the boundary samples.
  double delta0 = 0.0;

  double h = 1.0 / 32.0;
  int stencil_width = 2;
  int oblique_order = 1;
  int frame_angles = 16;

  SolveMethod method = SolveMethod::kPolicyIteration;
  /// 0 selects default_tolerance.
  double tol = 0.0;
  int max_iter = 0;
  std::optional<Expression> u0;

  Vec2 x0{0.0, 0.0};
  std::vector<double> radii{0.4, 0.2, 0.1, 0.05};
  double R = 0.5;
  /// 0 selects rho_admissible.
  double rho = 0.0;
  std::optional<Expression> exact;
  std::optional<Expression> field;
  std::vector<double> h_list;
  int samples = 10000;

  Expression f2, g2, dirichlet2;

  ObliqueField oblique_field() const;
  ObliqueField oblique_field2() const;
  ProblemData problem_data() const;
  /// The comparison problem (compare.f2 / g2 / dirichlet2, defaulting to the
  /// primary data).
  ProblemData problem_data2() const;
  SchemeOptions scheme(double spacing) const;
  /// Seed for sampled audits, derived from the config hash.
  std::uint64_t seed() const { return hash ^ 0x9e3779b97f4a7c15ULL; }
  /// Line of `section.key`, or 0.
  int line_of(const std::string& key) const;
};

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(const std::string& bytes);

/// Parses INI text (`[section]` headers or dotted keys, `#`/`;` comments).
/// Throws ConfigError listing every failure as `<source>:<line>: message`.
ExperimentConfig parse_config_text(const std::string& text, const std::string& source = "<config>");
ExperimentConfig parse_config(const std::string& path);

}  // namespace oblique
