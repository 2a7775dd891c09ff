#include "oblique/envelope.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "oblique/parallel.hpp"
#include "oblique/solve.hpp"

namespace oblique {

NodeMask class_mask(const Grid& grid, std::initializer_list<NodeClass> classes) {
  NodeMask m(grid.size(), false);
  for (std::size_t k = 0; k < grid.size(); ++k)
    m[k] = std::find(classes.begin(), classes.end(), grid.node(k).cls) != classes.end();
  return m;
}

NodeMask active_mask(const Grid& grid) {
  return class_mask(grid, {NodeClass::kInterior, NodeClass::kOblique, NodeClass::kDirichlet});
}

namespace {

using Mat3 = std::array<std::array<double, 3>, 3>;

bool invert(const Mat3& m, Mat3& inv) {
  const double det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                     m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                     m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
  if (std::abs(det) < 1e-300) return false;
  const double id = 1.0 / det;
  inv[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) * id;
  inv[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) * id;
  inv[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) * id;
  inv[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) * id;
  inv[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) * id;
  inv[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) * id;
  inv[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) * id;
  inv[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) * id;
  inv[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) * id;
  return true;
}

// Lower convex hull of lattice points (p_j, u_j), evaluated pointwise by a
// small simplex method. Coordinates are integers, so geometry is exact.
class LowerHull {
 public:
  LowerHull(std::vector<std::array<double, 2>> pts, std::vector<double> vals)
      : p_(std::move(pts)), u_(std::move(vals)) {
    double scale = 1.0;
    for (double v : u_) scale = std::max(scale, std::abs(v));
    eps_ = 1e-13 * scale;
  }

  std::size_t pivots() const { return pivots_; }

  // Envelope value at point index `self`.
  double value(std::size_t self) {
    const double bx = p_[self][0], by = p_[self][1];
    if (!(have_basis_ && warm_start(bx, by))) {
      if (!cold_start(self)) return collinear_value(self);
    }
    int degenerate = 0;
    for (int iter = 0;; ++iter) {
      if (iter > 100000) throw NumericalError("convex envelope simplex did not terminate");
      // Duals: plane through the basis points.
      std::array<double, 3> y{};
      for (int c = 0; c < 3; ++c)
        for (int r = 0; r < 3; ++r) y[c] += u_[basis_[r]] * inv_[r][c];
      const bool bland = degenerate > 50;
      std::size_t enter = p_.size();
      double best = -eps_;
      for (std::size_t j = 0; j < p_.size(); ++j) {
        const double rc = u_[j] - (y[0] * p_[j][0] + y[1] * p_[j][1] + y[2]);
        if (rc < best) {
          best = rc;
          enter = j;
          if (bland) break;
        }
      }
      if (enter == p_.size()) {
        double v = 0.0;
        for (int r = 0; r < 3; ++r) v += lambda_[r] * u_[basis_[r]];
        return v;
      }
      const std::array<double, 3> a{p_[enter][0], p_[enter][1], 1.0};
      std::array<double, 3> d{};
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) d[r] += inv_[r][c] * a[c];
      int leave = -1;
      double ratio = std::numeric_limits<double>::infinity();
      for (int r = 0; r < 3; ++r) {
        if (d[r] <= 1e-12) continue;
        const double t = std::max(lambda_[r], 0.0) / d[r];
        if (t < ratio - 1e-15 || (std::abs(t - ratio) <= 1e-15 && leave >= 0 && basis_[r] < basis_[leave])) {
          ratio = t;
          leave = r;
        }
      }
      if (leave < 0) throw NumericalError("convex envelope program is unbounded");
      degenerate = ratio <= 1e-15 ? degenerate + 1 : 0;
      basis_[leave] = enter;
      ++pivots_;
      if (!refactor(bx, by)) throw NumericalError("singular basis in convex envelope");
    }
  }

 private:
  bool refactor(double bx, double by) {
    Mat3 B;
    for (int r = 0; r < 3; ++r) {
      B[0][r] = p_[basis_[r]][0];
      B[1][r] = p_[basis_[r]][1];
      B[2][r] = 1.0;
    }
    if (!invert(B, inv_)) return false;
    for (int r = 0; r < 3; ++r) lambda_[r] = inv_[r][0] * bx + inv_[r][1] * by + inv_[r][2];
    return true;
  }

  // Reuses the previous optimal triangle when it still contains the point.
  bool warm_start(double bx, double by) {
    if (!refactor(bx, by)) return false;
    for (double l : lambda_)
      if (l < -1e-12) return false;
    return true;
  }

  bool cold_start(std::size_t self) {
    const auto& x = p_[self];
    std::size_t a = self;
    double far = -1.0;
    for (std::size_t j = 0; j < p_.size(); ++j) {
      const double d = std::hypot(p_[j][0] - x[0], p_[j][1] - x[1]);
      if (d > far) {
        far = d;
        a = j;
      }
    }
    std::size_t b = self;
    double area = 0.0;
    for (std::size_t j = 0; j < p_.size(); ++j) {
      const double c = std::abs((p_[a][0] - x[0]) * (p_[j][1] - x[1]) - (p_[a][1] - x[1]) * (p_[j][0] - x[0]));
      if (c > area) {
        area = c;
        b = j;
      }
    }
    if (area <= 0.5) return false;  // twice a lattice triangle area is >= 1
    basis_ = {self, a, b};
    have_basis_ = refactor(x[0], x[1]);
    return have_basis_;
  }

  // All points on one line: 1-D lower hull by a monotone chain.
  double collinear_value(std::size_t self) {
    if (!line_ready_) {
      std::size_t a = 0;
      double far = -1.0;
      for (std::size_t j = 0; j < p_.size(); ++j) {
        const double d = std::hypot(p_[j][0] - p_[0][0], p_[j][1] - p_[0][1]);
        if (d > far) {
          far = d;
          a = j;
        }
      }
      const double dx = p_[a][0] - p_[0][0], dy = p_[a][1] - p_[0][1];
      std::vector<std::pair<double, double>> tv;
      for (std::size_t j = 0; j < p_.size(); ++j)
        tv.push_back({(p_[j][0] - p_[0][0]) * dx + (p_[j][1] - p_[0][1]) * dy, u_[j]});
      std::sort(tv.begin(), tv.end());
      for (const auto& q : tv) {
        while (chain_.size() >= 2) {
          const auto& o = chain_[chain_.size() - 2];
          const auto& m = chain_.back();
          if ((m.first - o.first) * (q.second - o.second) - (m.second - o.second) * (q.first - o.first) <= 0.0)
            chain_.pop_back();
          else
            break;
        }
        chain_.push_back(q);
      }
      line_dir_ = {dx, dy};
      line_ready_ = true;
    }
    const double t = (p_[self][0] - p_[0][0]) * line_dir_[0] + (p_[self][1] - p_[0][1]) * line_dir_[1];
    if (chain_.size() == 1) return chain_[0].second;
    for (std::size_t s = 1; s < chain_.size(); ++s) {
      if (t <= chain_[s].first) {
        const auto& l = chain_[s - 1];
        const auto& r = chain_[s];
        const double w = (t - l.first) / (r.first - l.first);
        return (1.0 - w) * l.second + w * r.second;
      }
    }
    return chain_.back().second;
  }

  std::vector<std::array<double, 2>> p_;
  std::vector<double> u_;
  double eps_ = 0.0;
  std::array<std::size_t, 3> basis_{};
  std::array<double, 3> lambda_{};
  Mat3 inv_{};
  bool have_basis_ = false;
  std::size_t pivots_ = 0;
  bool line_ready_ = false;
  std::array<double, 2> line_dir_{};
  std::vector<std::pair<double, double>> chain_;
};

void check_field(const GridField& u, const NodeMask& mask) {
  if (!u.grid) throw ConfigError("field has no grid");
  if (mask.size() != u.size()) throw ConfigError("mask size does not match the grid");
  for (std::size_t k = 0; k < u.size(); ++k)
    if (mask[k] && !std::isfinite(u[k])) throw NumericalError("envelope input contains NaN or Inf");
}

}  // namespace

EnvelopeResult convex_envelope(const GridField& u, const NodeMask& mask, double contact_tol) {
  check_field(u, mask);
  const Grid& g = *u.grid;
  EnvelopeResult out{u, NodeMask(u.size(), false), contact_tol, 0};
  if (out.contact_tol < 0.0) out.contact_tol = g.h() * g.h() * (1.0 + u.max_abs());
  std::vector<std::size_t> ids;
  std::vector<std::array<double, 2>> pts;
  std::vector<double> vals;
  for (std::size_t k = 0; k < u.size(); ++k) {
    if (!mask[k]) continue;
    ids.push_back(k);
    pts.push_back({double(g.node(k).i), double(g.node(k).j)});
    vals.push_back(u[k]);
  }
  if (ids.empty()) return out;
  LowerHull hull(pts, vals);
  for (std::size_t s = 0; s < ids.size(); ++s) {
    const std::size_t k = ids[s];
    out.envelope[k] = std::min(u[k], hull.value(s));
    out.contact[k] = std::abs(u[k] - out.envelope[k]) <= out.contact_tol;
  }
  out.pivots = hull.pivots();
  return out;
}

GridField convex_envelope_bruteforce(const GridField& u, const NodeMask& mask) {
  check_field(u, mask);
  const Grid& g = *u.grid;
  std::vector<std::size_t> ids;
  for (std::size_t k = 0; k < u.size(); ++k)
    if (mask[k]) ids.push_back(k);
  if (ids.size() > 400) throw ConfigError("brute-force envelope oracle is limited to 400 nodes");
  const std::size_t N = ids.size();
  std::vector<double> px(N), py(N), pu(N);
  double scale = 1.0;
  for (std::size_t s = 0; s < N; ++s) {
    px[s] = g.node(ids[s]).i;
    py[s] = g.node(ids[s]).j;
    pu[s] = u[ids[s]];
    scale = std::max(scale, std::abs(pu[s]));
  }
  const double slack = 1e-12 * scale;
  // Valid supporting planes z = a x + b y + c through three points.
  std::vector<std::array<double, 3>> planes;
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t j = i + 1; j < N; ++j) {
      for (std::size_t k = j + 1; k < N; ++k) {
        const double x1 = px[j] - px[i], y1 = py[j] - py[i], z1 = pu[j] - pu[i];
        const double x2 = px[k] - px[i], y2 = py[k] - py[i], z2 = pu[k] - pu[i];
        const double det = x1 * y2 - x2 * y1;
        if (det == 0.0) continue;
        const double a = (z1 * y2 - z2 * y1) / det;
        const double b = (x1 * z2 - x2 * z1) / det;
        const double c = pu[i] - a * px[i] - b * py[i];
        bool ok = true;
        for (std::size_t s = 0; s < N && ok; ++s) ok = a * px[s] + b * py[s] + c <= pu[s] + slack;
        if (ok) planes.push_back({a, b, c});
      }
    }
  }
  GridField out = u;
  if (planes.empty()) {
    // Collinear (or tiny) mask: supporting lines through point pairs.
    for (std::size_t s = 0; s < N; ++s) {
      double best = N == 1 ? pu[s] : -std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < N; ++i) {
        for (std::size_t j = i + 1; j < N; ++j) {
          const double dx = px[j] - px[i], dy = py[j] - py[i];
          const double len2 = dx * dx + dy * dy;
          const double slope = (pu[j] - pu[i]) / len2;
          bool ok = true;
          for (std::size_t q = 0; q < N && ok; ++q)
            ok = pu[i] + slope * ((px[q] - px[i]) * dx + (py[q] - py[i]) * dy) <= pu[q] + slack;
          if (ok) best = std::max(best, pu[i] + slope * ((px[s] - px[i]) * dx + (py[s] - py[i]) * dy));
        }
      }
      out[ids[s]] = std::min(pu[s], best);
    }
    return out;
  }
  for (std::size_t s = 0; s < N; ++s) {
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& p : planes) best = std::max(best, p[0] * px[s] + p[1] * py[s] + p[2]);
    out[ids[s]] = std::min(pu[s], best);
  }
  return out;
}

GridField directional_convex_minorant(const GridField& u, const NodeMask& mask, int max_sweeps) {
  check_field(u, mask);
  const Grid& g = *u.grid;
  const auto& dirs = g.directions();
  // Neighbour pairs usable at each node.
  std::vector<std::vector<std::array<int, 2>>> pairs(u.size());
  for (std::size_t k = 0; k < u.size(); ++k) {
    if (!mask[k]) continue;
    const Node& n = g.node(k);
    for (const auto& d : dirs) {
      const int p = g.index(n.i + d.di, n.j + d.dj);
      const int m = g.index(n.i - d.di, n.j - d.dj);
      if (p >= 0 && m >= 0 && mask[p] && mask[m]) pairs[k].push_back({p, m});
    }
  }
  GridField cur = u, next = u;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double change = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
      if (!mask[k]) continue;
      double v = u[k];
      for (const auto& pm : pairs[k]) v = std::min(v, 0.5 * (cur[pm[0]] + cur[pm[1]]));
      change = std::max(change, std::abs(v - cur[k]));
      next[k] = v;
    }
    std::swap(cur.values, next.values);
    if (change <= 1e-12) return cur;
  }
  throw NumericalError("directional convexification did not converge within the sweep cap");
}

AuditReport abp_audit(const DiscreteProblem& problem, const GridField& u, double tol) {
  if (tol <= 0.0) tol = default_tolerance(problem);
  const Grid& g = *problem.grid();
  AuditReport r;
  r.name = "abp";
  double gamma_max = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < g.size(); ++k)
    if (g.node(k).cls == NodeClass::kOblique) gamma_max = std::max(gamma_max, problem.gamma_field()[k]);
  r.set("gamma_max", gamma_max);
  if (gamma_max > 0.0) {
    r.applicable = false;
    r.passed = false;
    r.note("gamma > 0 somewhere on Gamma; the estimate assumes gamma <= 0");
    return r;
  }
  // Rescale into the unit ball: x -> x/s multiplies f by s^2 and g by s.
  double s = 0.0;
  for (const Node& n : g.nodes())
    if (n.cls != NodeClass::kExterior) s = std::max(s, norm(n.phys));
  s = std::max(s, 1.0);
  r.set("scale", s);
  const double hs = g.h() / s;

  double lhs = 0.0, dir = 0.0, gmax = 0.0;
  GridField v(problem.grid());
  for (std::size_t k = 0; k < g.size(); ++k) {
    const NodeClass c = g.node(k).cls;
    if (c == NodeClass::kExterior) continue;
    v[k] = std::min(u[k], 0.0);
    if (c == NodeClass::kInterior || c == NodeClass::kOblique) lhs = std::max(lhs, -u[k]);
    if (c == NodeClass::kDirichlet) dir = std::max(dir, -u[k]);
    if (c == NodeClass::kOblique) gmax = std::max(gmax, s * problem.g_field()[k]);
  }
  const EnvelopeResult env = convex_envelope(v, active_mask(g));
  double f_contact = 0.0, f_full = 0.0;
  std::size_t contact = 0, interior = 0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (g.node(k).cls != NodeClass::kInterior) continue;
    ++interior;
    const double fp = std::max(s * s * problem.f_field()[k], 0.0);
    const double w = fp * fp * hs * hs;
    f_full += w;
    if (env.contact[k]) {
      ++contact;
      f_contact += w;
    }
  }
  f_contact = std::sqrt(f_contact);
  f_full = std::sqrt(f_full);
  const double excess = std::max(lhs - dir, 0.0);
  const double denom = gmax + f_contact;
  double c_emp;
  if (excess <= 10.0 * tol) {
    c_emp = 0.0;
  } else if (denom <= 0.0) {
    c_emp = std::numeric_limits<double>::infinity();
  } else {
    c_emp = excess / denom;
  }
  r.set("lhs", lhs);
  r.set("dirichlet_term", dir);
  r.set("g_term", gmax);
  r.set("f_contact_ln", f_contact);
  r.set("f_full_ln", f_full);
  r.set("c_emp", c_emp);
  r.set("contact_fraction", interior ? double(contact) / double(interior) : 0.0);
  r.set("contact_nodes", double(contact));
  r.set("contact_tol", env.contact_tol);
  r.set("delta1", one_direction_constant(sample_oblique_patch(g.domain(), 256), problem.data().oblique.beta));
  r.set("h", g.h());
  r.passed = std::isfinite(c_emp);
  if (!r.passed) r.note("sup u^- exceeds the boundary term with vanishing data");
  return r;
}

}  // namespace oblique
