#include "oblique/cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "oblique/barriers.hpp"
#include "oblique/envelope.hpp"
#include "oblique/lab.hpp"
#include "oblique/parallel.hpp"

#ifndef OBLIQUE_VERSION
#define OBLIQUE_VERSION "0.0.0"
#endif

namespace oblique {

namespace {

struct Flags {
  std::string config;
  double h = 0.0;
  std::string method;
  double tol = 0.0;
  std::string out;
  int threads = 1;
  std::string barrier = "v2";
  double lambda = 1.0;
  double Lambda = 2.0;
  std::vector<std::string> params;
  int samples = 0;
};

struct Outcome {
  std::string report;
  std::string csv;
  bool passed = true;
  std::shared_ptr<const Grid> grid;
};

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write '" + path + "'");
  f << text;
  if (!f) throw ConfigError("failed writing '" + path + "'");
}

std::string field_csv(const GridField& u) {
  std::ostringstream s;
  write_field_csv(s, u);
  return s.str();
}

struct Context {
  const ExperimentConfig& cfg;
  double h;
  SolveMethod method;
  double tol;
};

SolveResult solve_config(const DiscreteProblem& p, const Context& c) {
  const double tol = c.tol > 0.0 ? c.tol : default_tolerance(p);
  GridField u0(p.grid());
  if (c.cfg.u0) u0 = GridField::sample(p.grid(), *c.cfg.u0);
  if (c.method == SolveMethod::kPseudoTime)
    return c.cfg.max_iter > 0 ? solve_pseudo_time(p, u0, tol, c.cfg.max_iter) : solve_pseudo_time(p, u0, tol);
  return c.cfg.max_iter > 0 ? solve_policy_iteration(p, u0, tol, c.cfg.max_iter) : solve_policy_iteration(p, u0, tol);
}

std::string solve_summary(const SolveReport& r) {
  std::ostringstream s;
  s << "solve_method=" << to_string(r.method) << '\n';
  s << "solve_iterations=" << r.iterations << '\n';
  s << "solve_final_residual=" << format_double(r.final_residual) << '\n';
  s << "solve_converged=" << (r.converged ? 1 : 0) << '\n';
  return s.str();
}

// Field for lab commands: lab.field sampled on the grid, or the solved u.
struct LabField {
  GridField u;
  std::string prefix;
  bool ok = true;
  double tol = 0.0;
};

LabField lab_field(const DiscreteProblem& p, const Context& c) {
  LabField lf;
  lf.tol = c.tol > 0.0 ? c.tol : default_tolerance(p);
  if (c.cfg.field) {
    lf.u = GridField::sample(p.grid(), *c.cfg.field);
    lf.prefix = "field=" + c.cfg.field->text() + "\n";
    return lf;
  }
  SolveResult s = solve_config(p, c);
  lf.u = std::move(s.u);
  lf.prefix = solve_summary(s.report);
  lf.ok = s.report.converged;
  return lf;
}

double delta1_of(const ExperimentConfig& cfg) {
  const ObliqueField of = cfg.oblique_field();
  return one_direction_constant(sample_oblique_patch(*cfg.domain, 256), of.beta);
}

Outcome cmd_solve(const Context& c) {
  const DiscreteProblem p(c.cfg.problem_data(), c.cfg.scheme(c.h));
  const SolveResult s = solve_config(p, c);
  Outcome o;
  o.grid = p.grid();
  o.csv = field_csv(s.u);
  std::ostringstream r;
  r << s.report.to_key_value();
  r << "h=" << format_double(c.h) << '\n';
  r << "nodes=" << p.grid()->size() - p.grid()->count(NodeClass::kExterior) << '\n';
  r << "delta0=" << format_double(c.cfg.delta0) << '\n';
  o.report = r.str();
  o.passed = s.report.converged;
  return o;
}

Outcome cmd_abp(const Context& c) {
  const DiscreteProblem p(c.cfg.problem_data(), c.cfg.scheme(c.h));
  const SolveResult s = solve_config(p, c);
  const AuditReport a = abp_audit(p, s.u, s.report.tolerance);
  Outcome o;
  o.grid = p.grid();
  o.csv = field_csv(s.u);
  o.report = a.to_key_value() + solve_summary(s.report);
  o.passed = a.passed && s.report.converged;
  return o;
}

Outcome cmd_harnack(const Context& c) {
  const DiscreteProblem p(c.cfg.problem_data(), c.cfg.scheme(c.h));
  const LabField lf = lab_field(p, c);
  const Grid& grid = *p.grid();
  double g_sup = 0.0, gamma_sup = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (grid.node(k).cls != NodeClass::kOblique) continue;
    g_sup = std::max(g_sup, std::abs(p.g_field()[k]));
    gamma_sup = std::max(gamma_sup, std::abs(p.gamma_field()[k]));
  }
  const double delta1 = delta1_of(c.cfg);
  const double rho = c.cfg.rho > 0.0 ? c.cfg.rho : rho_admissible(c.cfg.op.ellipticity(), delta1, gamma_sup);
  AuditReport a = harnack_quotient(lf.u, c.cfg.R, rho, discrete_l2_norm(p.f_field()), g_sup, lf.tol);
  a.set("delta1", delta1);
  Outcome o;
  o.grid = p.grid();
  o.csv = field_csv(lf.u);
  o.report = a.to_key_value() + lf.prefix;
  o.passed = a.passed && lf.ok;
  return o;
}

Outcome cmd_fit(const Context& c, const std::string& which) {
  const DiscreteProblem p(c.cfg.problem_data(), c.cfg.scheme(c.h));
  const LabField lf = lab_field(p, c);
  RegularityFit fit;
  if (which == "holder-fit") {
    fit = holder_fit(lf.u, c.cfg.x0, c.cfg.radii);
  } else if (which == "c1-fit") {
    std::optional<PointData> data;
    const Domain& d = *c.cfg.domain;
    if (std::abs(d.signed_distance(c.cfg.x0)) < 1e-9 && d.on_oblique_patch(c.cfg.x0)) {
      const ObliqueField of = c.cfg.oblique_field();
      data = PointData{of.beta(c.cfg.x0), of.gamma(c.cfg.x0), of.g(c.cfg.x0)};
    }
    fit = c1alpha_fit(lf.u, c.cfg.x0, c.cfg.radii, data);
  } else {
    fit = c2alpha_fit(lf.u, c.cfg.x0, c.cfg.radii, &c.cfg.op, c.cfg.f(c.cfg.x0));
  }
  Outcome o;
  o.grid = p.grid();
  o.csv = fit.to_csv();
  o.report = fit.to_report().to_key_value() + lf.prefix;
  o.passed = fit.resolved && lf.ok;
  return o;
}

Outcome cmd_compare(const Context& c) {
  const DiscreteProblem p1(c.cfg.problem_data(), c.cfg.scheme(c.h));
  const DiscreteProblem p2(c.cfg.problem_data2(), c.cfg.scheme(c.h));
  const ComparisonResult cr = comparison_audit(p1, p2, c.method, c.tol);
  GridField diff(p1.grid());
  for (std::size_t k = 0; k < diff.size(); ++k) diff[k] = cr.u1[k] - cr.u2[k];
  Outcome o;
  o.grid = p1.grid();
  o.csv = field_csv(diff);
  o.report = cr.report.to_key_value();
  o.passed = cr.report.passed;
  return o;
}

Outcome cmd_converge(const Context& c) {
  if (!c.cfg.exact) throw ConfigError("converge needs lab.exact");
  std::vector<double> hs = c.cfg.h_list;
  if (hs.empty()) hs = {c.h, c.h / 2.0, c.h / 4.0};
  const ExperimentConfig& cfg = c.cfg;
  const Expression exact = *cfg.exact;
  const AuditReport a = convergence_study([&cfg](double h) { return DiscreteProblem(cfg.problem_data(), cfg.scheme(h)); },
                                          [exact](Vec2 x) { return exact(x); }, hs, c.method, c.tol);
  std::ostringstream csv;
  csv << "h,err,order\n";
  for (std::size_t i = 0; i < hs.size(); ++i) {
    csv << format_double(hs[i]) << ',' << format_double(a.at("error_" + std::to_string(i))) << ',';
    if (i > 0) csv << format_double(a.at("order_" + std::to_string(i - 1)));
    csv << '\n';
  }
  Outcome o;
  o.csv = csv.str();
  o.report = a.to_key_value();
  o.passed = a.passed;
  o.grid = build_grid(cfg.domain, hs.back(), cfg.stencil_width);
  return o;
}

Outcome cmd_envelope(const Context& c) {
  const DiscreteProblem p(c.cfg.problem_data(), c.cfg.scheme(c.h));
  const LabField lf = lab_field(p, c);
  const Grid& grid = *p.grid();
  const EnvelopeResult env = convex_envelope(lf.u, active_mask(grid));
  double min_gap = std::numeric_limits<double>::infinity();
  double max_gap = 0.0;
  std::size_t contact = 0, active = 0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (grid.node(k).cls == NodeClass::kExterior) continue;
    ++active;
    const double gap = lf.u[k] - env.envelope[k];
    min_gap = std::min(min_gap, gap);
    max_gap = std::max(max_gap, gap);
    if (env.contact[k]) ++contact;
  }
  AuditReport a;
  a.name = "envelope";
  a.set("h", grid.h()).set("nodes", static_cast<double>(active));
  a.set("contact_nodes", static_cast<double>(contact));
  a.set("contact_fraction", active ? static_cast<double>(contact) / static_cast<double>(active) : 0.0);
  a.set("contact_tol", env.contact_tol).set("pivots", static_cast<double>(env.pivots));
  a.set("min_u_minus_envelope", min_gap).set("max_u_minus_envelope", max_gap);
  a.passed = min_gap >= -1e-9 * std::max(1.0, lf.u.max_abs());
  Outcome o;
  o.grid = p.grid();
  o.csv = field_csv(env.envelope);
  o.report = a.to_key_value() + lf.prefix;
  o.passed = a.passed && lf.ok;
  return o;
}

Outcome cmd_barrier(const Flags& f, const ExperimentConfig* cfg) {
  std::vector<std::pair<std::string, double>> params;
  for (const std::string& item : f.params) {
    std::istringstream in(item);
    for (std::string kv; std::getline(in, kv, ',');) {
      if (kv.empty()) continue;
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ConfigError("--params expects key=value, got '" + kv + "'");
      const Expression e = Expression::parse(kv.substr(eq + 1));
      if (!e.is_constant()) throw ConfigError("--params value for '" + kv.substr(0, eq) + "' must be a constant");
      params.emplace_back(kv.substr(0, eq), e({0.0, 0.0}));
    }
  }
  const int samples = f.samples > 0 ? f.samples : (cfg ? cfg->samples : 10000);
  const std::uint64_t seed = cfg ? cfg->seed() : fnv1a64(f.barrier);
  const AuditReport a = barrier_check(f.barrier, Ellipticity(f.lambda, f.Lambda), params, samples, seed);
  Outcome o;
  o.report = a.to_key_value();
  o.passed = a.passed;
  return o;
}

const std::vector<std::pair<std::string, std::string>>& subcommands() {
  static const std::vector<std::pair<std::string, std::string>> s = {
      {"solve", "solve the configured problem and write the field"},
      {"abp-audit", "solve, then audit the ABP estimate"},
      {"harnack", "boundary Harnack quotient"},
      {"holder-fit", "log-log oscillation fit at lab.x0"},
      {"c1-fit", "affine-approximation fit at lab.x0"},
      {"c2-fit", "quadratic-approximation fit at lab.x0"},
      {"compare", "solve two ordered problems and check the ordering"},
      {"converge", "manufactured-solution convergence study"},
      {"barrier-check", "certify a barrier family on random samples"},
      {"envelope", "convex envelope of the field"}};
  return s;
}

std::string usage_text() {
  std::ostringstream s;
  s << "usage: oblique <subcommand> [--config FILE] [--h H] [--method pseudo|policy] [--tol T]\n"
       "                [--out PATH] [--threads N]\n"
       "       oblique barrier-check --barrier w|v2|v3|cone [--lambda L] [--Lambda L] [--params k=v,...]\n"
       "                [--samples N]\n\nsubcommands:\n";
  for (const auto& [name, help] : subcommands()) {
    s << "  " << name;
    for (std::size_t i = name.size(); i < 16; ++i) s << ' ';
    s << help << '\n';
  }
  s << "\nOBLIQUE_VISC_THREADS overrides --threads.\n";
  return s.str();
}

}  // namespace

std::string version_string() { return OBLIQUE_VERSION; }

std::string manifest_text(const ExperimentConfig* cfg, const std::string& subcommand, const Grid* grid,
                          int threads) {
  std::ostringstream s;
  s << "subcommand=" << subcommand << '\n';
  s << "version=" << version_string() << '\n';
  s << "config=" << (cfg ? cfg->source : std::string("-")) << '\n';
  s << "config_hash=" << (cfg ? hex64(cfg->hash) : std::string("-")) << '\n';
  s << "seed=" << (cfg ? cfg->seed() : 0) << '\n';
  if (grid) {
    s << "h=" << format_double(grid->h()) << '\n';
    s << "nx=" << grid->nx() << '\n';
    s << "ny=" << grid->ny() << '\n';
    s << "nodes=" << grid->size() - grid->count(NodeClass::kExterior) << '\n';
  }
  s << "threads=" << threads << '\n';
  return s.str();
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  if (args.empty()) {
    err << usage_text();
    return kExitError;
  }
  const std::string sub = args.front();
  if (sub == "--help" || sub == "-h" || sub == "help") {
    out << usage_text();
    return kExitPass;
  }
  if (sub == "--version") {
    out << "oblique " << version_string() << '\n';
    return kExitPass;
  }
  bool known = false;
  for (const auto& s : subcommands()) known = known || s.first == sub;
  if (!known) {
    err << "error: unknown subcommand '" << sub << "'\n" << usage_text();
    return kExitError;
  }

  Flags f;
  CLI::App app{"oblique " + sub, "oblique " + sub};
  app.set_help_flag("--help", "print this help");
  app.add_option("--config", f.config, "experiment config file");
  app.add_option("--h", f.h, "grid spacing")->check(CLI::PositiveNumber);
  app.add_option("--method", f.method, "pseudo or policy");
  app.add_option("--tol", f.tol, "residual tolerance")->check(CLI::PositiveNumber);
  app.add_option("--out", f.out, "output CSV path");
  app.add_option("--threads", f.threads, "worker threads")->check(CLI::Range(1, 1024));
  if (sub == "barrier-check") {
    app.add_option("--barrier", f.barrier, "w, v2, v3 or cone");
    app.add_option("--lambda", f.lambda, "ellipticity lower constant");
    app.add_option("--Lambda", f.Lambda, "ellipticity upper constant");
    app.add_option("--params", f.params, "key=value pairs")->expected(0, -1);
    app.add_option("--samples", f.samples, "number of samples")->check(CLI::PositiveNumber);
  }
  try {
    std::vector<std::string> rest(args.rbegin(), args.rend() - 1);
    app.parse(rest);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitPass;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n' << usage_text();
    return kExitError;
  }

  try {
    int threads = f.threads;
    if (const char* env = std::getenv("OBLIQUE_VISC_THREADS"); env && *env) {
      char* end = nullptr;
      const long n = std::strtol(env, &end, 10);
      if (*end != '\0' || n < 1 || n > 1024) throw ConfigError("OBLIQUE_VISC_THREADS must be an integer in [1, 1024]");
      threads = static_cast<int>(n);
    }
    set_thread_count(threads);

    std::optional<ExperimentConfig> cfg;
    if (!f.config.empty()) cfg = parse_config(f.config);
    if (!cfg && sub != "barrier-check") throw ConfigError("'" + sub + "' needs --config");

    Outcome o;
    if (sub == "barrier-check") {
      o = cmd_barrier(f, cfg ? &*cfg : nullptr);
    } else {
      const Context c{*cfg, f.h > 0.0 ? f.h : cfg->h,
                      f.method.empty() ? cfg->method : solve_method_from_string(f.method),
                      f.tol > 0.0 ? f.tol : cfg->tol};
      if (sub == "solve") o = cmd_solve(c);
      if (sub == "abp-audit") o = cmd_abp(c);
      if (sub == "harnack") o = cmd_harnack(c);
      if (sub == "holder-fit" || sub == "c1-fit" || sub == "c2-fit") o = cmd_fit(c, sub);
      if (sub == "compare") o = cmd_compare(c);
      if (sub == "converge") o = cmd_converge(c);
      if (sub == "envelope") o = cmd_envelope(c);
    }

    const std::string path = f.out.empty() ? sub + ".csv" : f.out;
    if (!o.csv.empty()) write_file(path, o.csv);
    write_file(path + ".report", o.report);
    write_file(path + ".manifest", manifest_text(cfg ? &*cfg : nullptr, sub, o.grid.get(), threads));
    out << o.report;
    return o.passed ? kExitPass : kExitAuditFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
}

}  // namespace oblique
