#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "oblique/audit.hpp"
#include "oblique/vec.hpp"

namespace oblique {

/// Polynomial c0 + c1 t + c2 t^2 + ... used for graph boundaries x_n = phi(x').
class Polynomial {
 public:
  Polynomial() = default;
  explicit Polynomial(std::vector<double> coefficients) : c_(std::move(coefficients)) {}

  double operator()(double t) const;
  double derivative(double t) const;
  double second_derivative(double t) const;
  const std::vector<double>& coefficients() const { return c_; }

 private:
  std::vector<double> c_;
};

/// Chart on which a graph boundary is defined: |x'| <= half_width.
struct GraphChart {
  Polynomial phi;
  double half_width = 1.0;
};

/// y' = x', y_n = x_n - phi(x'). Maps the graph {x_n = phi(x')} onto {y_n = 0}.
Vec2 flatten_transform(const GraphChart& chart, Vec2 x);
/// Inverse of flatten_transform.
Vec2 unflatten_transform(const GraphChart& chart, Vec2 y);

enum class Patch { kOblique, kDirichlet };

/// Planar region with boundary split into an oblique patch Gamma and a
/// Dirichlet patch. Immutable after construction.
class Domain {
 public:
  struct Parts {
    std::string kind;
    std::function<double(Vec2)> signed_distance;
    std::function<Vec2(Vec2)> closest_boundary_point;
    std::function<Vec2(Vec2)> inner_normal;
    std::function<bool(Vec2)> on_oblique_patch;
    Vec2 box_min;
    Vec2 box_max;
    std::optional<GraphChart> chart;
    /// Flat computational domain used by the grid when chart is set.
    std::shared_ptr<const Domain> flat;
  };

  explicit Domain(Parts parts);

  const std::string& kind() const { return p_.kind; }
  int dimension() const { return 2; }
  /// Negative inside.
  double signed_distance(Vec2 x) const { return p_.signed_distance(x); }
  Vec2 closest_boundary_point(Vec2 x) const { return p_.closest_boundary_point(x); }
  /// Unit inner normal at a boundary point.
  Vec2 inner_normal(Vec2 boundary_point) const { return p_.inner_normal(boundary_point); }
  bool on_oblique_patch(Vec2 boundary_point) const { return p_.on_oblique_patch(boundary_point); }
  bool on_dirichlet_patch(Vec2 boundary_point) const { return !p_.on_oblique_patch(boundary_point); }
  Patch patch(Vec2 boundary_point) const {
    return on_oblique_patch(boundary_point) ? Patch::kOblique : Patch::kDirichlet;
  }
  bool contains(Vec2 x) const { return signed_distance(x) < 0.0; }
  Vec2 box_min() const { return p_.box_min; }
  Vec2 box_max() const { return p_.box_max; }
  double diameter() const { return norm(p_.box_max - p_.box_min); }

  /// Set for graph domains: the grid lives on flat_domain() and physical
  /// positions are recovered through unflatten_transform.
  const std::optional<GraphChart>& chart() const { return p_.chart; }
  /// The domain the grid is laid on: itself, or the flattened image.
  const Domain& computational_domain() const { return p_.flat ? *p_.flat : *this; }
  Vec2 to_physical(Vec2 computational) const {
    return p_.chart ? unflatten_transform(*p_.chart, computational) : computational;
  }

 private:
  Parts p_;
};

/// Spherical cap B+_{r,h}: the ball B_R(-(R-h) e_n) cut by {x_n > 0}.
struct CapSpec {
  double base_radius = 1.0;
  double height = 1.0;

  /// R = (r^2 + h^2) / (2h), so that (R-h)^2 + r^2 = R^2.
  double big_radius() const { return (base_radius * base_radius + height * height) / (2.0 * height); }
  Vec2 center() const { return {0.0, -(big_radius() - height)}; }
};

/// Upper half-disk; Gamma is the open flat segment, the arc is Dirichlet.
std::shared_ptr<const Domain> make_half_disk(double radius);
/// Cap with Gamma = T_r and Dirichlet patch = spherical part.
std::shared_ptr<const Domain> make_spherical_cap(const CapSpec& spec);
/// {x : |(x', x_n - phi(x'))| < radius, x_n > phi(x')}; flattens to a half-disk.
std::shared_ptr<const Domain> make_graph_domain(const Polynomial& phi, double radius);

using ScalarFn = std::function<double(Vec2)>;
using VectorFn = std::function<Vec2(Vec2)>;

/// Oblique boundary data beta . Du + gamma u = g on Gamma.
struct ObliqueField {
  VectorFn beta;
  ScalarFn gamma;
  ScalarFn g;
  double delta0 = 0.0;
};

/// Samples Gamma: points on the oblique patch, evenly spaced in the flat chart.
std::vector<Vec2> sample_oblique_patch(const Domain& domain, int count);
/// Samples the whole boundary (both patches), count points.
std::vector<Vec2> sample_boundary(const Domain& domain, int count);

/// Checks beta . n >= delta0 and |beta| <= 1 at `samples` points of Gamma.
/// Reports min beta.n, max |beta| and the worst sample location.
AuditReport check_obliqueness(const Domain& domain, const ObliqueField& field, int samples);

/// delta1 = max over unit xi of min over Gamma samples of beta . xi.
double one_direction_constant(const std::vector<Vec2>& gamma_points, const VectorFn& beta);

/// Projection of x onto {x_n = 0} along beta: x' - (beta'/beta_n) x_n.
double beta_projection(Vec2 x, Vec2 beta);

/// Samples condition beta(x) . n(y) < 0 for x on T_r and y on the spherical
/// part of the cap (64 x 64 pairs by default).
AuditReport validate_cap_height(const CapSpec& cap, const VectorFn& beta, int samples_per_side = 64);
/// Default cap height h0 = delta0 / 2.
inline double default_cap_height(double delta0) { return 0.5 * delta0; }

}  // namespace oblique
