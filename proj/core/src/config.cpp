#include "oblique/config.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace oblique {

namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "domain.kind",        "domain.radius",        "domain.height",      "domain.phi",
      "operator.kind",      "operator.lambda",      "operator.Lambda",    "operator.A",
      "operator.members",   "operator.F0",          "operator.f",         "boundary.beta",
      "boundary.gamma",     "boundary.g",           "boundary.dirichlet", "boundary.delta0",
      "boundary.samples",   "grid.h",               "grid.stencil_width", "grid.oblique_order",
      "grid.frame_angles",  "solver.method",        "solver.tol",         "solver.max_iter",
      "solver.u0",          "lab.x0",               "lab.radii",          "lab.R",
      "lab.rho",            "lab.exact",            "lab.field",          "lab.h_list",
      "lab.samples",        "compare.f2",           "compare.g2",         "compare.dirichlet2"};
  return keys;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string strip_comment(const std::string& line) {
  const std::string t = trim(line);
  if (t.empty() || t[0] == '#' || t[0] == ';') return {};
  const auto hash = line.find(" #");
  return trim(hash == std::string::npos ? line : line.substr(0, hash));
}

class Builder {
 public:
  Builder(ExperimentConfig& cfg, std::string source) : cfg_(cfg), source_(std::move(source)) {}

  void error(int line, const std::string& msg) {
    errors_.push_back(source_ + ":" + std::to_string(line) + ": " + msg);
  }

  void finish() const {
    if (errors_.empty()) return;
    std::string all = "invalid configuration";
    for (const auto& e : errors_) all += "\n  " + e;
    throw ConfigError(all);
  }

  bool has(const std::string& key) const { return cfg_.entries.count(key) > 0; }

  // Runs fn(value) for a present key, recording failures against its line.
  bool with(const std::string& key, const std::function<void(const std::string&)>& fn) {
    const auto it = cfg_.entries.find(key);
    if (it == cfg_.entries.end()) return false;
    try {
      fn(it->second.value);
      return true;
    } catch (const std::exception& e) {
      error(it->second.line, key + ": " + e.what());
      return false;
    }
  }

  static double number(const std::string& v) {
    const Expression e = Expression::parse(v);
    if (!e.is_constant()) throw ConfigError("expected a constant, got '" + v + "'");
    const double x = e({0.0, 0.0});
    if (!std::isfinite(x)) throw ConfigError("value '" + v + "' is not finite");
    return x;
  }

  static int integer(const std::string& v) {
    const double x = number(v);
    if (x != std::floor(x) || std::abs(x) > 1e9) throw ConfigError("expected an integer, got '" + v + "'");
    return static_cast<int>(x);
  }

  static std::vector<double> list(const std::string& v) {
    std::string s = v;
    std::replace(s.begin(), s.end(), ',', ' ');
    std::istringstream in(s);
    std::vector<double> out;
    for (std::string tok; in >> tok;) out.push_back(number(tok));
    if (out.empty()) throw ConfigError("empty list");
    return out;
  }

  static Vec2 pair(const std::string& v) {
    const auto parts = split_tuple(v);
    if (parts.size() != 2) throw ConfigError("expected a pair (a, b), got '" + v + "'");
    return {number(parts[0]), number(parts[1])};
  }

  static SymMat2 matrix(const std::vector<double>& c) {
    if (c.size() != 3) throw ConfigError("a symmetric matrix takes three entries 'a11 a12 a22'");
    return {c[0], c[1], c[2]};
  }

 private:
  ExperimentConfig& cfg_;
  std::string source_;
  std::vector<std::string> errors_;
};

}  // namespace

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

int ExperimentConfig::line_of(const std::string& key) const {
  const auto it = entries.find(key);
  return it == entries.end() ? 0 : it->second.line;
}

ObliqueField ExperimentConfig::oblique_field() const {
  const Expression b1 = beta1, b2 = beta2, gm = gamma, gg = g;
  return {[b1, b2](Vec2 x) { return Vec2{b1(x), b2(x)}; }, [gm](Vec2 x) { return gm(x); },
          [gg](Vec2 x) { return gg(x); }, delta0};
}

ObliqueField ExperimentConfig::oblique_field2() const {
  ObliqueField of = oblique_field();
  const Expression gg = g2;
  of.g = [gg](Vec2 x) { return gg(x); };
  return of;
}

ProblemData ExperimentConfig::problem_data() const {
  const Expression ff = f, phi = dirichlet;
  return {domain, op, [ff](Vec2 x) { return ff(x); }, oblique_field(), [phi](Vec2 x) { return phi(x); }};
}

ProblemData ExperimentConfig::problem_data2() const {
  const Expression ff = f2, phi = dirichlet2;
  return {domain, op, [ff](Vec2 x) { return ff(x); }, oblique_field2(), [phi](Vec2 x) { return phi(x); }};
}

SchemeOptions ExperimentConfig::scheme(double spacing) const {
  SchemeOptions o;
  o.h = spacing;
  o.stencil_width = stencil_width;
  o.oblique_order = oblique_order;
  o.graph_frame_angles = frame_angles;
  return o;
}

ExperimentConfig parse_config_text(const std::string& text, const std::string& source) {
  ExperimentConfig cfg;
  cfg.source = source;
  cfg.text = text;
  cfg.hash = fnv1a64(text);
  Builder b(cfg, source);

  // Lexical pass.
  {
    std::istringstream in(text);
    std::string raw, section;
    int line = 0;
    while (std::getline(in, raw)) {
      ++line;
      const std::string s = strip_comment(raw);
      if (s.empty()) continue;
      if (s.front() == '[') {
        if (s.back() != ']' || s.size() < 3) {
          b.error(line, "malformed section header '" + s + "'");
          continue;
        }
        section = trim(s.substr(1, s.size() - 2));
        continue;
      }
      const auto eq = s.find('=');
      if (eq == std::string::npos) {
        b.error(line, "expected 'key = value', got '" + s + "'");
        continue;
      }
      std::string key = trim(s.substr(0, eq));
      const std::string value = trim(s.substr(eq + 1));
      if (key.find('.') == std::string::npos) {
        if (section.empty()) {
          b.error(line, "key '" + key + "' outside a section needs a 'section.' prefix");
          continue;
        }
        key = section + "." + key;
      }
      if (!known_keys().count(key)) {
        b.error(line, "unknown key '" + key + "'");
        continue;
      }
      if (value.empty()) {
        b.error(line, "empty value for '" + key + "'");
        continue;
      }
      if (cfg.entries.count(key)) {
        b.error(line, "duplicate key '" + key + "' (first set on line " + std::to_string(cfg.entries[key].line) + ")");
        continue;
      }
      cfg.entries[key] = {value, line};
    }
  }

  auto expr = [&](const std::string& key, Expression& out) {
    b.with(key, [&](const std::string& v) { out = Expression::parse(v); });
  };

  // Boundary data first: the cap's default height depends on delta0.
  b.with("boundary.beta", [&](const std::string& v) {
    const auto parts = split_tuple(v);
    if (parts.size() != 2) throw ConfigError("beta must be a pair (b1, b2)");
    cfg.beta1 = Expression::parse(parts[0]);
    cfg.beta2 = Expression::parse(parts[1]);
  });
  expr("boundary.gamma", cfg.gamma);
  expr("boundary.g", cfg.g);
  expr("boundary.dirichlet", cfg.dirichlet);
  std::optional<double> delta0;
  b.with("boundary.delta0", [&](const std::string& v) {
    delta0 = Builder::number(v);
    if (!(*delta0 > 0.0) || *delta0 > 1.0) throw ConfigError("delta0 must lie in (0, 1]");
  });
  int boundary_samples = 256;
  b.with("boundary.samples", [&](const std::string& v) {
    boundary_samples = Builder::integer(v);
    if (boundary_samples < 1) throw ConfigError("need at least one sample");
  });

  // Operator.
  double lambda = 1.0, Lambda = 1.0, F0 = 0.0;
  b.with("operator.lambda", [&](const std::string& v) { lambda = Builder::number(v); });
  if (!b.with("operator.Lambda", [&](const std::string& v) { Lambda = Builder::number(v); })) Lambda = lambda;
  b.with("operator.F0", [&](const std::string& v) { F0 = Builder::number(v); });
  expr("operator.f", cfg.f);
  std::string kind = "linear";
  b.with("operator.kind", [&](const std::string& v) { kind = to_string(operator_kind_from_string(v)); });
  const int op_line = cfg.line_of("operator.Lambda") ? cfg.line_of("operator.Lambda")
                                                      : std::max(cfg.line_of("operator.kind"), 1);
  try {
    const Ellipticity e(lambda, Lambda);
    const OperatorKind k = operator_kind_from_string(kind);
    if (k == OperatorKind::kPucciPlus) cfg.op = OperatorSpec::pucci_plus(e, F0);
    if (k == OperatorKind::kPucciMinus) cfg.op = OperatorSpec::pucci_minus(e, F0);
    if (k == OperatorKind::kLinear) {
      SymMat2 A = SymMat2::identity() * lambda;
      b.with("operator.A", [&](const std::string& v) { A = Builder::matrix(Builder::list(v)); });
      cfg.op = OperatorSpec::linear(e, A, F0);
    }
    if (k == OperatorKind::kBellman) {
      std::vector<LinearMember> members;
      if (!b.with("operator.members", [&](const std::string& v) {
            std::istringstream in(v);
            for (std::string part; std::getline(in, part, ';');) {
              if (trim(part).empty()) continue;
              const auto c = Builder::list(part);
              if (c.size() != 4) throw ConfigError("each member takes 'a11 a12 a22 c'");
              members.push_back({SymMat2{c[0], c[1], c[2]}, c[3]});
            }
          }))
        throw ConfigError("bellman operator needs operator.members");
      cfg.op = OperatorSpec::bellman(e, std::move(members));
    }
  } catch (const std::exception& e) {
    b.error(op_line, std::string("operator: ") + e.what());
  }

  // Grid and solver.
  b.with("grid.h", [&](const std::string& v) {
    cfg.h = Builder::number(v);
    if (!(cfg.h > 0.0)) throw ConfigError("h must be positive");
  });
  b.with("grid.stencil_width", [&](const std::string& v) {
    cfg.stencil_width = Builder::integer(v);
    if (cfg.stencil_width < 1 || cfg.stencil_width > 3) throw ConfigError("stencil width must be 1, 2 or 3");
  });
  b.with("grid.oblique_order", [&](const std::string& v) {
    cfg.oblique_order = Builder::integer(v);
    if (cfg.oblique_order != 1 && cfg.oblique_order != 2) throw ConfigError("oblique order must be 1 or 2");
  });
  b.with("grid.frame_angles", [&](const std::string& v) {
    cfg.frame_angles = Builder::integer(v);
    if (cfg.frame_angles < 2) throw ConfigError("need at least 2 frame angles");
  });
  b.with("solver.method", [&](const std::string& v) { cfg.method = solve_method_from_string(v); });
  b.with("solver.tol", [&](const std::string& v) {
    cfg.tol = Builder::number(v);
    if (!(cfg.tol > 0.0)) throw ConfigError("tolerance must be positive");
  });
  b.with("solver.max_iter", [&](const std::string& v) {
    cfg.max_iter = Builder::integer(v);
    if (cfg.max_iter < 1) throw ConfigError("max_iter must be positive");
  });
  b.with("solver.u0", [&](const std::string& v) { cfg.u0 = Expression::parse(v); });

  // Lab and compare.
  b.with("lab.x0", [&](const std::string& v) { cfg.x0 = Builder::pair(v); });
  b.with("lab.radii", [&](const std::string& v) { cfg.radii = Builder::list(v); });
  b.with("lab.R", [&](const std::string& v) {
    cfg.R = Builder::number(v);
    if (!(cfg.R > 0.0)) throw ConfigError("R must be positive");
  });
  b.with("lab.rho", [&](const std::string& v) {
    cfg.rho = Builder::number(v);
    if (!(cfg.rho > 0.0)) throw ConfigError("rho must be positive");
  });
  b.with("lab.exact", [&](const std::string& v) { cfg.exact = Expression::parse(v); });
  b.with("lab.field", [&](const std::string& v) { cfg.field = Expression::parse(v); });
  b.with("lab.h_list", [&](const std::string& v) { cfg.h_list = Builder::list(v); });
  b.with("lab.samples", [&](const std::string& v) {
    cfg.samples = Builder::integer(v);
    if (cfg.samples < 1) throw ConfigError("need at least one sample");
  });
  cfg.f2 = cfg.f;
  cfg.g2 = cfg.g;
  cfg.dirichlet2 = cfg.dirichlet;
  expr("compare.f2", cfg.f2);
  expr("compare.g2", cfg.g2);
  expr("compare.dirichlet2", cfg.dirichlet2);

  // Domain.
  std::string dkind = "half_disk";
  b.with("domain.kind", [&](const std::string& v) {
    if (v != "half_disk" && v != "cap" && v != "graph")
      throw ConfigError("domain kind must be half_disk, cap or graph (got '" + v + "')");
    dkind = v;
  });
  double radius = 1.0;
  b.with("domain.radius", [&](const std::string& v) {
    radius = Builder::number(v);
    if (!(radius > 0.0)) throw ConfigError("radius must be positive");
  });
  const int domain_line = std::max(cfg.line_of("domain.kind"), 1);
  try {
    if (dkind == "half_disk") cfg.domain = make_half_disk(radius);
    if (dkind == "graph") {
      Polynomial phi({0.0});
      b.with("domain.phi", [&](const std::string& v) { phi = Polynomial(Builder::list(v)); });
      cfg.domain = make_graph_domain(phi, radius);
    }
    if (dkind == "cap") {
      CapSpec cap{radius, 0.0};
      if (!b.with("domain.height", [&](const std::string& v) { cap.height = Builder::number(v); })) {
        // Smallest beta_n on the flat base decides the default height.
        double d = delta0.value_or(1.0);
        if (!delta0) {
          for (int k = 0; k < boundary_samples; ++k) {
            const double t = -radius + (k + 0.5) * 2.0 * radius / boundary_samples;
            d = std::min(d, cfg.beta2({t, 0.0}));
          }
        }
        cap.height = std::min(radius, default_cap_height(std::max(d, 1e-6)));
      }
      cfg.domain = make_spherical_cap(cap);
      const Expression b1 = cfg.beta1, b2 = cfg.beta2;
      const AuditReport check = validate_cap_height(cap, [b1, b2](Vec2 x) { return Vec2{b1(x), b2(x)}; });
      if (!check.passed)
        b.error(std::max(cfg.line_of("domain.height"), domain_line),
                "cap height " + format_double(cap.height) + " admits beta.n = " +
                    format_double(check.at("max_beta_dot_n")) + " >= 0 on the spherical part");
    }
  } catch (const std::exception& e) {
    b.error(domain_line, std::string("domain: ") + e.what());
  }

  // Obliqueness at the boundary samples.
  if (cfg.domain) {
    const int line = std::max(cfg.line_of("boundary.beta"), 1);
    double min_bn = std::numeric_limits<double>::infinity();
    Vec2 worst;
    bool ok = true;
    for (const Vec2& p : sample_oblique_patch(*cfg.domain, boundary_samples)) {
      const Vec2 beta{cfg.beta1(p), cfg.beta2(p)};
      if (!(norm(beta) <= 1.0 + 1e-12)) {
        b.error(line, "|beta| = " + format_double(norm(beta)) + " > 1 at (" + format_double(p.x) + ", " +
                          format_double(p.y) + ")");
        ok = false;
        break;
      }
      const double bn = dot(beta, cfg.domain->inner_normal(p));
      if (!(bn >= min_bn)) {
        min_bn = bn;
        worst = p;
      }
    }
    const std::string at = " at (" + format_double(worst.x) + ", " + format_double(worst.y) + ")";
    if (ok && delta0) {
      if (!(min_bn >= *delta0 - 1e-12))
        b.error(line, "beta.n = " + format_double(min_bn) + " < delta0 = " + format_double(*delta0) + at);
      cfg.delta0 = *delta0;
    } else if (ok) {
      if (!(min_bn > 0.0)) b.error(line, "beta.n = " + format_double(min_bn) + " is not positive" + at);
      cfg.delta0 = min_bn;
    }
  }

  b.finish();
  return cfg;
}

ExperimentConfig parse_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path);
}

}  // namespace oblique
