#include "oblique/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace oblique {

double Polynomial::operator()(double t) const {
  double acc = 0.0;
  for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * t + *it;
  return acc;
}

double Polynomial::derivative(double t) const {
  double acc = 0.0;
  for (std::size_t k = c_.size(); k-- > 1;) acc = acc * t + static_cast<double>(k) * c_[k];
  return acc;
}

double Polynomial::second_derivative(double t) const {
  double acc = 0.0;
  for (std::size_t k = c_.size(); k-- > 2;) acc = acc * t + static_cast<double>(k * (k - 1)) * c_[k];
  return acc;
}

namespace {

void check_in_chart(const GraphChart& chart, double t) {
  if (!(std::abs(t) <= chart.half_width * (1.0 + 1e-12)))
    throw ConfigError("point with x'=" + std::to_string(t) + " lies outside the graph chart |x'| <= " +
                      std::to_string(chart.half_width));
}

}  // namespace

Vec2 flatten_transform(const GraphChart& chart, Vec2 x) {
  check_in_chart(chart, x.x);
  return {x.x, x.y - chart.phi(x.x)};
}

Vec2 unflatten_transform(const GraphChart& chart, Vec2 y) {
  check_in_chart(chart, y.x);
  return {y.x, y.y + chart.phi(y.x)};
}

Domain::Domain(Parts parts) : p_(std::move(parts)) {
  if (!p_.signed_distance || !p_.closest_boundary_point || !p_.inner_normal || !p_.on_oblique_patch)
    throw ConfigError("domain '" + p_.kind + "' is missing a geometric primitive");
  if (!(p_.box_max.x > p_.box_min.x) || !(p_.box_max.y > p_.box_min.y))
    throw ConfigError("domain '" + p_.kind + "' is degenerate (empty bounding box)");
}

namespace {

// Disk of radius R centred at c, cut by {x_n > 0}; the flat base |x'| < base is Gamma.
Domain::Parts capped_disk(const std::string& kind, Vec2 c, double R, double base, double top) {
  const double eps = 1e-12 * std::max(1.0, R);
  Domain::Parts p;
  p.kind = kind;
  p.signed_distance = [=](Vec2 x) { return std::max(norm(x - c) - R, -x.y); };
  p.closest_boundary_point = [=](Vec2 x) {
    const Vec2 flat{std::clamp(x.x, -base, base), 0.0};
    Vec2 arc;
    const Vec2 rel = x - c;
    const double len = norm(rel);
    if (len > 0.0 && (c + rel * (R / len)).y >= 0.0) {
      arc = c + rel * (R / len);
    } else {
      arc = x.x >= 0.0 ? Vec2{base, 0.0} : Vec2{-base, 0.0};
    }
    return norm(x - flat) <= norm(x - arc) ? flat : arc;
  };
  p.on_oblique_patch = [=](Vec2 q) { return std::abs(q.y) <= eps && std::abs(q.x) < base - eps; };
  p.inner_normal = [=](Vec2 q) {
    if (std::abs(q.y) <= eps && std::abs(q.x) < base - eps) return Vec2{0.0, 1.0};
    return normalized(c - q);
  };
  p.box_min = {-base, 0.0};
  p.box_max = {base, top};
  return p;
}

}  // namespace

std::shared_ptr<const Domain> make_half_disk(double radius) {
  if (!(radius > 0.0) || !std::isfinite(radius))
    throw ConfigError("half-disk radius must be positive (got " + std::to_string(radius) + ")");
  return std::make_shared<const Domain>(capped_disk("half_disk", {0.0, 0.0}, radius, radius, radius));
}

std::shared_ptr<const Domain> make_spherical_cap(const CapSpec& spec) {
  if (!(spec.base_radius > 0.0)) throw ConfigError("cap base radius must be positive");
  if (!(spec.height > 0.0) || spec.height > spec.base_radius)
    throw ConfigError("cap height must satisfy 0 < h <= r (got h=" + std::to_string(spec.height) +
                      ", r=" + std::to_string(spec.base_radius) + ")");
  return std::make_shared<const Domain>(
      capped_disk("cap", spec.center(), spec.big_radius(), spec.base_radius, spec.height));
}

std::shared_ptr<const Domain> make_graph_domain(const Polynomial& phi, double radius) {
  auto flat = make_half_disk(radius);
  GraphChart chart{phi, radius};
  Domain::Parts p;
  p.kind = "graph";
  p.chart = chart;
  p.flat = flat;
  p.signed_distance = [=](Vec2 x) {
    if (std::abs(x.x) > radius) return std::abs(x.x) - radius;
    return flat->signed_distance(flatten_transform(chart, x));
  };
  p.closest_boundary_point = [=](Vec2 x) {
    const Vec2 xc{std::clamp(x.x, -radius, radius), x.y};
    return unflatten_transform(chart, flat->closest_boundary_point(flatten_transform(chart, xc)));
  };
  p.on_oblique_patch = [=](Vec2 q) {
    if (std::abs(q.x) > radius) return false;
    return flat->on_oblique_patch(flatten_transform(chart, q));
  };
  p.inner_normal = [=](Vec2 q) {
    const Vec2 y = flatten_transform(chart, q);
    const double dphi = chart.phi.derivative(q.x);
    if (flat->on_oblique_patch(y)) return normalized(Vec2{-dphi, 1.0});
    // Gradient of |y| - radius with respect to x, pointing outward.
    const Vec2 outward{y.x - y.y * dphi, y.y};
    return normalized(-outward);
  };
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (int k = 0; k <= 256; ++k) {
    const double t = -radius + 2.0 * radius * k / 256.0;
    const double s = std::sqrt(std::max(radius * radius - t * t, 0.0));
    lo = std::min(lo, phi(t));
    hi = std::max(hi, phi(t) + s);
  }
  p.box_min = {-radius, lo};
  p.box_max = {radius, hi};
  return std::make_shared<const Domain>(std::move(p));
}

namespace {

// Flat half-width of Gamma in the computational chart, found from the box.
double flat_half_width(const Domain& computational) { return computational.box_max().x; }

}  // namespace

std::vector<Vec2> sample_oblique_patch(const Domain& domain, int count) {
  const Domain& comp = domain.computational_domain();
  const double w = flat_half_width(comp);
  std::vector<Vec2> out;
  out.reserve(count);
  for (int k = 0; k < count; ++k) {
    const double t = -w + (k + 0.5) * 2.0 * w / count;
    out.push_back(domain.to_physical({t, 0.0}));
  }
  return out;
}

std::vector<Vec2> sample_boundary(const Domain& domain, int count) {
  const Domain& comp = domain.computational_domain();
  const double w = flat_half_width(comp);
  const double top = comp.box_max().y;
  std::vector<Vec2> out;
  out.reserve(count);
  const int flat_count = count / 2;
  for (int k = 0; k < flat_count; ++k) {
    const double t = -w + (k + 0.5) * 2.0 * w / flat_count;
    out.push_back(domain.to_physical({t, 0.0}));
  }
  // Arc: walk the upper curve by projecting points of an ellipse onto the boundary.
  const int arc_count = count - flat_count;
  for (int k = 0; k < arc_count; ++k) {
    const double th = M_PI * (k + 0.5) / arc_count;
    const Vec2 probe{w * 2.0 * std::cos(th), top * 2.0 * std::sin(th) + 1e-9};
    out.push_back(domain.to_physical(comp.closest_boundary_point(probe)));
  }
  return out;
}

AuditReport check_obliqueness(const Domain& domain, const ObliqueField& field, int samples) {
  AuditReport r;
  r.name = "obliqueness";
  double min_bn = std::numeric_limits<double>::infinity();
  double max_beta = 0.0;
  Vec2 worst;
  for (const Vec2& p : sample_oblique_patch(domain, samples)) {
    const Vec2 b = field.beta(p);
    const double bn = dot(b, domain.inner_normal(p));
    if (bn < min_bn) {
      min_bn = bn;
      worst = p;
    }
    max_beta = std::max(max_beta, norm(b));
  }
  r.set("samples", samples);
  r.set("min_beta_dot_n", min_bn);
  r.set("max_beta_norm", max_beta);
  r.set("delta0", field.delta0);
  r.set("worst_x1", worst.x).set("worst_x2", worst.y);
  r.passed = min_bn >= field.delta0 - 1e-12 && max_beta <= 1.0 + 1e-12;
  return r;
}

double one_direction_constant(const std::vector<Vec2>& gamma_points, const VectorFn& beta) {
  std::vector<Vec2> betas;
  betas.reserve(gamma_points.size());
  for (const Vec2& p : gamma_points) betas.push_back(beta(p));
  auto worst = [&](double th) {
    const Vec2 xi{std::cos(th), std::sin(th)};
    double m = std::numeric_limits<double>::infinity();
    for (const Vec2& b : betas) m = std::min(m, dot(b, xi));
    return m;
  };
  constexpr int kCoarse = 3600;
  double best_th = 0.0;
  double best = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < kCoarse; ++k) {
    const double th = 2.0 * M_PI * k / kCoarse;
    const double v = worst(th);
    if (v > best) {
      best = v;
      best_th = th;
    }
  }
  // Golden-section refinement around the coarse maximiser.
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = best_th - 2.0 * M_PI / kCoarse;
  double b = best_th + 2.0 * M_PI / kCoarse;
  for (int it = 0; it < 80; ++it) {
    const double c = b - g * (b - a);
    const double d = a + g * (b - a);
    if (worst(c) > worst(d))
      b = d;
    else
      a = c;
  }
  return std::max(best, worst(0.5 * (a + b)));
}

double beta_projection(Vec2 x, Vec2 beta) {
  if (beta.y == 0.0) throw ConfigError("beta projection undefined for beta_n = 0");
  return x.x - (beta.x / beta.y) * x.y;
}

AuditReport validate_cap_height(const CapSpec& cap, const VectorFn& beta, int samples_per_side) {
  AuditReport r;
  r.name = "cap_height";
  const double R = cap.big_radius();
  const Vec2 c = cap.center();
  const double r0 = cap.base_radius;
  // h <= r implies h <= R, so the spherical part spans angles [-span, span]
  // from the vertical axis.
  const double span = std::asin(std::min(1.0, r0 / R));
  double worst = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < samples_per_side; ++i) {
    const Vec2 x{-r0 + (i + 0.5) * 2.0 * r0 / samples_per_side, 0.0};
    const Vec2 b = beta(x);
    for (int j = 0; j < samples_per_side; ++j) {
      const double th = -span + 2.0 * span * j / (samples_per_side - 1);
      const Vec2 y = c + Vec2{std::sin(th), std::cos(th)} * R;
      const Vec2 n = normalized(c - y);
      worst = std::max(worst, dot(b, n));
    }
  }
  r.set("height", cap.height);
  r.set("max_beta_dot_n", worst);
  r.passed = worst < 0.0;
  return r;
}

}  // namespace oblique
