#pragma once

#include <vector>

#include "oblique/audit.hpp"
#include "oblique/discretize.hpp"

namespace oblique {

/// Per-node selection on a grid.
using NodeMask = std::vector<bool>;

/// Nodes of the given classes.
NodeMask class_mask(const Grid& grid, std::initializer_list<NodeClass> classes);
/// Interior, oblique and Dirichlet nodes.
NodeMask active_mask(const Grid& grid);

struct EnvelopeResult {
  /// Convex envelope on the mask; equals u off the mask.
  GridField envelope;
  NodeMask contact;
  double contact_tol = 0.0;
  /// Simplex pivots spent (cost diagnostic).
  std::size_t pivots = 0;
};

/// Exact convex envelope of the point set {(x_k, u_k) : k in mask}: at each
/// node the minimum of sum l_k u_k over convex combinations sum l_k x_k = x,
/// solved as a three-row linear program. Contact tolerance defaults to
/// h^2 (1 + |u|_inf) when contact_tol < 0.
EnvelopeResult convex_envelope(const GridField& u, const NodeMask& mask, double contact_tol = -1.0);

/// Supporting-plane oracle: sup of affine functions below u on the mask,
/// enumerated through every non-collinear point triple. Throws ConfigError
/// for masks above 400 nodes.
GridField convex_envelope_bruteforce(const GridField& u, const NodeMask& mask);

/// Iterated midpoint convexification along the grid's direction set:
/// G <- min(u, min_e (G(x+e) + G(x-e)) / 2) until the change is below 1e-12.
/// A convex minorant that dominates the exact envelope; it only sees
/// directions whose two neighbours lie in the mask. Throws NumericalError
/// past max_sweeps.
GridField directional_convex_minorant(const GridField& u, const NodeMask& mask, int max_sweeps = 1000000);

/// Empirical check of the maximum principle
///   sup u^- <= sup_{Dirichlet} u^- + C max g^+ + C |f^+|_{L^2(contact)}
/// on a solved field. Keys: lhs, dirichlet_term, g_term, f_contact_ln,
/// f_full_ln, c_emp, contact_fraction, delta1, scale.
AuditReport abp_audit(const DiscreteProblem& problem, const GridField& u, double tol = -1.0);

}  // namespace oblique
