#include "oblique/discretize.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>

#include "oblique/parallel.hpp"

namespace oblique {

std::string to_string(NodeClass c) {
  switch (c) {
    case NodeClass::kInterior: return "interior";
    case NodeClass::kOblique: return "oblique";
    case NodeClass::kDirichlet: return "dirichlet";
    case NodeClass::kExterior: return "exterior";
  }
  return "exterior";
}

namespace {

NodeClass node_class_from_string(const std::string& s) {
  if (s == "interior") return NodeClass::kInterior;
  if (s == "oblique") return NodeClass::kOblique;
  if (s == "dirichlet") return NodeClass::kDirichlet;
  throw ConfigError("unknown node class '" + s + "' in field file");
}

bool active(NodeClass c) { return c != NodeClass::kExterior; }

// Physical position of a computational point, clamped into the chart.
Vec2 safe_physical(const Domain& domain, Vec2 p) {
  if (const auto& chart = domain.chart()) p.x = std::clamp(p.x, -chart->half_width, chart->half_width);
  return domain.to_physical(p);
}

}  // namespace

std::vector<LatticeDir> stencil_directions(int width) {
  if (width < 1 || width > 3) throw ConfigError("stencil width must be 1, 2 or 3");
  std::vector<LatticeDir> dirs{{1, 0}, {0, 1}, {1, 1}, {1, -1}};
  if (width >= 2) {
    for (LatticeDir d : {LatticeDir{2, 1}, LatticeDir{1, 2}, LatticeDir{2, -1}, LatticeDir{1, -2}})
      dirs.push_back(d);
  }
  if (width >= 3) {
    for (LatticeDir d : {LatticeDir{3, 1}, LatticeDir{1, 3}, LatticeDir{3, -1}, LatticeDir{1, -3},
                         LatticeDir{3, 2}, LatticeDir{2, 3}, LatticeDir{3, -2}, LatticeDir{2, -3}})
      dirs.push_back(d);
  }
  return dirs;
}

std::vector<std::array<int, 2>> stencil_frames(const std::vector<LatticeDir>& dirs) {
  std::vector<std::array<int, 2>> frames;
  for (std::size_t p = 0; p < dirs.size(); ++p)
    for (std::size_t q = p + 1; q < dirs.size(); ++q)
      if (dirs[p].di * dirs[q].di + dirs[p].dj * dirs[q].dj == 0)
        frames.push_back({int(p), int(q)});
  return frames;
}

Grid::Grid(std::shared_ptr<const Domain> domain, double h, int stencil_width)
    : domain_(std::move(domain)), h_(h), width_(stencil_width) {
  if (!domain_) throw ConfigError("grid requires a domain");
  if (!(h > 0.0) || !std::isfinite(h)) throw ConfigError("mesh size h must be positive");
  dirs_ = stencil_directions(stencil_width);
  frames_ = stencil_frames(dirs_);
  const Domain& comp = computational();
  const int margin = stencil_width + 1;
  i_min_ = int(std::floor(comp.box_min().x / h)) - margin;
  j_min_ = int(std::floor(comp.box_min().y / h)) - margin;
  nx_ = int(std::ceil(comp.box_max().x / h)) + margin - i_min_ + 1;
  ny_ = int(std::ceil(comp.box_max().y / h)) + margin - j_min_ + 1;
  nodes_.resize(std::size_t(nx_) * std::size_t(ny_));
  for (int jj = 0; jj < ny_; ++jj) {
    for (int ii = 0; ii < nx_; ++ii) {
      Node& n = nodes_[std::size_t(jj) * nx_ + ii];
      n.i = i_min_ + ii;
      n.j = j_min_ + jj;
      n.pos = {n.i * h, n.j * h};
      n.phys = n.pos;
      n.snap = n.pos;
      const double d = comp.signed_distance(n.pos);
      if (d <= -0.5 * h) {
        n.cls = NodeClass::kInterior;
        n.phys = safe_physical(*domain_, n.pos);
      } else if (std::abs(d) < 0.5 * h) {
        n.snap = comp.closest_boundary_point(n.pos);
        n.cls = comp.on_oblique_patch(n.snap) ? NodeClass::kOblique : NodeClass::kDirichlet;
        n.phys = safe_physical(*domain_, n.pos);
      } else {
        n.cls = NodeClass::kExterior;
      }
    }
  }
}

int Grid::index(int i, int j) const {
  const int ii = i - i_min_;
  const int jj = j - j_min_;
  if (ii < 0 || jj < 0 || ii >= nx_ || jj >= ny_) return -1;
  return jj * nx_ + ii;
}

std::size_t Grid::count(NodeClass c) const {
  return std::size_t(std::count_if(nodes_.begin(), nodes_.end(), [c](const Node& n) { return n.cls == c; }));
}

std::shared_ptr<const Grid> build_grid(std::shared_ptr<const Domain> domain, double h, int stencil_width) {
  if (!domain) throw ConfigError("grid requires a domain");
  if (!(h > 0.0) || !std::isfinite(h)) throw ConfigError("mesh size h must be positive");
  if (domain->computational_domain().diameter() / h < 8.0)
    throw ConfigError("mesh size h=" + format_double(h) + " is too coarse: fewer than 8 nodes across the domain");
  auto grid = std::make_shared<const Grid>(std::move(domain), h, stencil_width);
  if (grid->count(NodeClass::kInterior) == 0) throw ConfigError("grid has no interior nodes");
  return grid;
}

GridField GridField::sample(std::shared_ptr<const Grid> g, const ScalarFn& fn) {
  GridField out(g);
  for (std::size_t k = 0; k < g->size(); ++k) {
    const Node& n = g->node(k);
    if (active(n.cls)) out.values[k] = fn(n.phys);
  }
  return out;
}

double GridField::max_abs() const {
  double m = 0.0;
  for (std::size_t k = 0; k < values.size(); ++k)
    if (active(grid->node(k).cls)) m = std::max(m, std::abs(values[k]));
  return m;
}

bool GridField::all_finite() const {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

void write_field_csv(std::ostream& out, const GridField& field) {
  const Grid& g = *field.grid;
  out << "# h=" << format_double(g.h()) << " nx=" << g.nx() << " ny=" << g.ny() << "\n";
  out << "i,j,x,y,class,value\n";
  for (std::size_t k = 0; k < g.size(); ++k) {
    const Node& n = g.node(k);
    if (!active(n.cls)) continue;
    out << n.i << ',' << n.j << ',' << format_double(n.phys.x) << ',' << format_double(n.phys.y) << ','
        << to_string(n.cls) << ',' << format_double(field.values[k]) << "\n";
  }
}

GridField read_field_csv(std::istream& in, std::shared_ptr<const Grid> grid) {
  GridField field(grid);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("i,j", 0) == 0) continue;
    std::stringstream ss(line);
    std::string cell[6];
    for (auto& c : cell) std::getline(ss, c, ',');
    const int i = std::stoi(cell[0]);
    const int j = std::stoi(cell[1]);
    const int k = grid->index(i, j);
    if (k < 0 || grid->node(k).cls != node_class_from_string(cell[4]))
      throw ConfigError("field row (" + cell[0] + "," + cell[1] + ") does not match the grid");
    field.values[k] = std::stod(cell[5]);
  }
  return field;
}

void LinearForm::add_scaled(const LinearForm& other, double s, int self) {
  diag += s * other.diag;
  constant += s * other.constant;
  for (const Tap& t : other.taps) {
    if (t.node == self) {
      diag += s * t.weight;
      continue;
    }
    auto it = std::find_if(taps.begin(), taps.end(), [&](const Tap& x) { return x.node == t.node; });
    if (it != taps.end()) {
      it->weight += s * t.weight;
    } else {
      taps.push_back({t.node, s * t.weight});
    }
  }
}

namespace {

// Value at the end of one stencil arm, as an affine form in u.
struct Arm {
  LinearForm value;
  double length = 0.0;
  ArmState state = ArmState::kLattice;
};

Arm make_arm(const Grid& grid, std::size_t node, int di, int dj, const ScalarFn& dirichlet) {
  const Node& n = grid.node(node);
  const double h = grid.h();
  Arm arm;
  const int t = grid.index(n.i + di, n.j + dj);
  if (t >= 0) {
    const NodeClass c = grid.node(t).cls;
    if (c == NodeClass::kInterior || c == NodeClass::kOblique) {
      arm.value.taps.push_back({t, 1.0});
      arm.length = std::hypot(double(di), double(dj)) * h;
      return arm;
    }
  }
  const Domain& comp = grid.computational();
  const Vec2 step{di * h, dj * h};
  auto sd = [&](double s) { return comp.signed_distance(n.pos + step * s); };
  double lo = 0.0;
  double hi = -1.0;
  constexpr double kDt = 1.0 / 16.0;
  for (double s = kDt; s <= 3.0 + 1e-12; s += kDt) {
    if (sd(s) >= 0.0) {
      hi = s;
      break;
    }
    lo = s;
  }
  if (hi < 0.0) {
    arm.state = ArmState::kUnavailable;
    return arm;
  }
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (sd(mid) >= 0.0 ? hi : lo) = mid;
  }
  const double s = hi;
  const Vec2 q = n.pos + step * s;
  const Vec2 bp = comp.closest_boundary_point(q);
  arm.length = s * std::hypot(double(di), double(dj)) * h;
  if (comp.on_dirichlet_patch(bp)) {
    arm.value.constant = dirichlet(safe_physical(grid.domain(), bp));
    return arm;
  }
  // Crossing through Gamma between lattice nodes: interpolate along the row.
  const int j0 = int(std::lround(bp.y / h));
  const double xs = bp.x / h;
  const int i0 = int(std::floor(xs));
  const double w = xs - i0;
  arm.state = ArmState::kFallback;
  auto add = [&](int i, double weight) {
    if (weight <= 1e-12) return true;
    const int k = grid.index(i, j0);
    if (k < 0 || !active(grid.node(k).cls)) return false;
    arm.value.taps.push_back({k, weight});
    return true;
  };
  if (!add(i0, 1.0 - w) || !add(i0 + 1, w)) arm.state = ArmState::kUnavailable;
  return arm;
}

// Bilinear interpolation at p as taps; false if a needed corner is exterior.
bool interpolate(const Grid& grid, Vec2 p, double scale, LinearForm& out, int self) {
  const double h = grid.h();
  const double xs = p.x / h;
  const double ys = p.y / h;
  int i0 = int(std::floor(xs));
  int j0 = int(std::floor(ys));
  double fx = xs - i0;
  double fy = ys - j0;
  constexpr double kSnap = 1e-10;
  if (fx > 1.0 - kSnap) {
    ++i0;
    fx = 0.0;
  }
  if (fy > 1.0 - kSnap) {
    ++j0;
    fy = 0.0;
  }
  if (fx < kSnap) fx = 0.0;
  if (fy < kSnap) fy = 0.0;
  LinearForm part;
  const std::array<std::array<double, 3>, 4> corners{{{0, 0, (1 - fx) * (1 - fy)},
                                                       {1, 0, fx * (1 - fy)},
                                                       {0, 1, (1 - fx) * fy},
                                                       {1, 1, fx * fy}}};
  for (const auto& c : corners) {
    if (c[2] <= 0.0) continue;
    const int k = grid.index(i0 + int(c[0]), j0 + int(c[1]));
    if (k < 0 || !active(grid.node(k).cls)) return false;
    part.taps.push_back({k, c[2]});
  }
  out.add_scaled(part, scale, self);
  return true;
}

// Nonnegative decompositions over direction triples, shortest stencils first.
class Decomposer {
 public:
  explicit Decomposer(const std::vector<LatticeDir>& dirs) {
    for (const LatticeDir& d : dirs) {
      const Vec2 e = d.unit();
      units_.push_back(e);
      lengths_.push_back(d.length());
    }
    const int m = int(dirs.size());
    for (int p = 0; p < m; ++p)
      for (int q = p + 1; q < m; ++q)
        for (int r = q + 1; r < m; ++r) triples_.push_back({p, q, r});
    auto key = [&](const std::array<int, 3>& t) {
      const double mx = std::max({lengths_[t[0]], lengths_[t[1]], lengths_[t[2]]});
      return std::pair{mx, lengths_[t[0]] + lengths_[t[1]] + lengths_[t[2]]};
    };
    std::stable_sort(triples_.begin(), triples_.end(),
                     [&](const auto& x, const auto& y) { return key(x) < key(y); });
  }

  // mask[d] true if direction d may be used.
  bool decompose(const SymMat2& Q, const std::vector<bool>& mask, std::vector<std::pair<int, double>>& out) const {
    const double scale = std::max({std::abs(Q.a), std::abs(Q.b), std::abs(Q.c), 1e-300});
    for (const auto& t : triples_) {
      if (!mask[t[0]] || !mask[t[1]] || !mask[t[2]]) continue;
      double m[3][3];
      for (int k = 0; k < 3; ++k) {
        const Vec2 e = units_[t[k]];
        m[0][k] = e.x * e.x;
        m[1][k] = e.x * e.y;
        m[2][k] = e.y * e.y;
      }
      const double det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                         m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                         m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
      if (std::abs(det) < 1e-14) continue;
      const double rhs[3] = {Q.a, Q.b, Q.c};
      double w[3];
      for (int k = 0; k < 3; ++k) {
        double mk[3][3];
        for (int r = 0; r < 3; ++r)
          for (int c = 0; c < 3; ++c) mk[r][c] = (c == k) ? rhs[r] : m[r][c];
        w[k] = (mk[0][0] * (mk[1][1] * mk[2][2] - mk[1][2] * mk[2][1]) -
                mk[0][1] * (mk[1][0] * mk[2][2] - mk[1][2] * mk[2][0]) +
                mk[0][2] * (mk[1][0] * mk[2][1] - mk[1][1] * mk[2][0])) /
               det;
      }
      const double tol = 1e-12 * scale;
      if (w[0] < -tol || w[1] < -tol || w[2] < -tol) continue;
      out.clear();
      for (int k = 0; k < 3; ++k)
        if (w[k] > tol) out.push_back({t[k], w[k]});
      return true;
    }
    return false;
  }

 private:
  std::vector<Vec2> units_;
  std::vector<double> lengths_;
  std::vector<std::array<int, 3>> triples_;
};

}  // namespace

DirectionalStencil directional_stencil(const Grid& grid, std::size_t node, const LatticeDir& dir,
                                       const ScalarFn& dirichlet) {
  const Arm fwd = make_arm(grid, node, dir.di, dir.dj, dirichlet);
  const Arm bwd = make_arm(grid, node, -dir.di, -dir.dj, dirichlet);
  DirectionalStencil st;
  st.state = std::max(fwd.state, bwd.state);
  if (st.state == ArmState::kUnavailable) return st;
  const double a = fwd.length;
  const double b = bwd.length;
  const int self = int(node);
  st.form.diag = -2.0 / (a * b);
  st.form.add_scaled(fwd.value, 2.0 / (a * (a + b)), self);
  st.form.add_scaled(bwd.value, 2.0 / (b * (a + b)), self);
  return st;
}

double directional_second_difference(const GridField& u, std::size_t node, const LatticeDir& dir) {
  const Grid& g = *u.grid;
  const Node& n = g.node(node);
  const int p = g.index(n.i + dir.di, n.j + dir.dj);
  const int m = g.index(n.i - dir.di, n.j - dir.dj);
  if (p < 0 || m < 0 || !active(g.node(p).cls) || !active(g.node(m).cls))
    throw NumericalError("second difference leaves the grid at node (" + std::to_string(n.i) + "," +
                         std::to_string(n.j) + ")");
  const double len = dir.length() * g.h();
  return (u[p] - 2.0 * u[node] + u[m]) / (len * len);
}

std::vector<std::pair<int, double>> decompose_onto_directions(const SymMat2& Q,
                                                              const std::vector<LatticeDir>& dirs) {
  Decomposer dec(dirs);
  std::vector<std::pair<int, double>> out;
  if (!dec.decompose(Q, std::vector<bool>(dirs.size(), true), out))
    throw ConfigError("coefficient matrix has no nonnegative decomposition on the stencil; increase stencil width");
  return out;
}

DiscreteProblem::DiscreteProblem(ProblemData data, SchemeOptions options)
    : data_(std::move(data)), options_(options) {
  if (!data_.domain) throw ConfigError("problem has no domain");
  if (!data_.f || !data_.dirichlet || !data_.oblique.beta || !data_.oblique.gamma || !data_.oblique.g)
    throw ConfigError("problem data is incomplete (f, g, beta, gamma and dirichlet are required)");
  if (options_.oblique_order != 1 && options_.oblique_order != 2)
    throw ConfigError("oblique order must be 1 or 2");
  grid_ = build_grid(data_.domain, options_.h, options_.stencil_width);
  const Grid& g = *grid_;
  rows_.resize(g.size());
  f_ = GridField(grid_);
  gamma_ = GridField(grid_);
  g_ = GridField(grid_);
  phi_ = GridField(grid_);

  const OperatorKind kind = data_.op.kind();
  const bool pucci = kind == OperatorKind::kPucciPlus || kind == OperatorKind::kPucciMinus;
  use_frames_ = pucci && !data_.domain->chart();
  maximize_ = kind != OperatorKind::kPucciMinus;

  for (std::size_t k = 0; k < g.size(); ++k) {
    const Node& n = g.node(k);
    switch (n.cls) {
      case NodeClass::kInterior:
        f_[k] = data_.f(n.phys);
        break;
      case NodeClass::kOblique: {
        const Vec2 s = safe_physical(*data_.domain, n.snap);
        gamma_[k] = data_.oblique.gamma(s);
        g_[k] = data_.oblique.g(s);
        break;
      }
      case NodeClass::kDirichlet:
        phi_[k] = data_.dirichlet(safe_physical(*data_.domain, n.snap));
        break;
      case NodeClass::kExterior:
        break;
    }
  }
  std::vector<char> flagged(g.size(), 0);
  std::vector<char> corner(g.size(), 0);
  parallel_for(g.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      const Node& n = g.node(k);
      Row& r = rows_[k];
      switch (n.cls) {
        case NodeClass::kInterior:
          assemble_interior(k);
          for (const auto& m : r.members)
            for (const auto& [d, w] : m.weights)
              if (r.diffs[d].state == ArmState::kFallback) flagged[k] = 1;
          for (const auto& fr : r.frames)
            if (r.diffs[fr[0]].state != ArmState::kLattice || r.diffs[fr[1]].state != ArmState::kLattice)
              flagged[k] = 1;
          break;
        case NodeClass::kOblique:
          assemble_oblique(k);
          if (r.kind == RowKind::kDirichlet) corner[k] = 1;
          break;
        case NodeClass::kDirichlet:
          r.kind = RowKind::kDirichlet;
          r.data = phi_[k];
          r.form.diag = 1.0;
          r.form.constant = -phi_[k];
          break;
        case NodeClass::kExterior:
          r.kind = RowKind::kInactive;
          break;
      }
    }
  });
  fallback_rows_ = std::size_t(std::count(flagged.begin(), flagged.end(), 1));
  corner_rows_ = std::size_t(std::count(corner.begin(), corner.end(), 1));
}

void DiscreteProblem::assemble_interior(std::size_t k) {
  const Grid& g = *grid_;
  const Node& n = g.node(k);
  Row& r = rows_[k];
  r.kind = RowKind::kInterior;
  r.data = f_[k];
  const auto& dirs = g.directions();
  r.diffs.resize(dirs.size());
  for (std::size_t d = 0; d < dirs.size(); ++d) r.diffs[d] = directional_stencil(g, k, dirs[d], data_.dirichlet);

  if (use_frames_) {
    for (const auto& fr : g.frames())
      if (r.diffs[fr[0]].state == ArmState::kLattice && r.diffs[fr[1]].state == ArmState::kLattice)
        r.frames.push_back(fr);
    if (r.frames.empty()) {
      for (const auto& fr : g.frames())
        if (r.diffs[fr[0]].state != ArmState::kUnavailable && r.diffs[fr[1]].state != ArmState::kUnavailable)
          r.frames.push_back(fr);
    }
    if (r.frames.empty())
      throw ConfigError("no usable stencil frame at node (" + std::to_string(n.i) + "," + std::to_string(n.j) + ")");
    return;
  }

  // Linear members tr(C D^2u) + c, mapped to the computational chart.
  struct Raw {
    SymMat2 C;
    double c;
  };
  std::vector<Raw> raw;
  const Ellipticity& e = data_.op.ellipticity();
  switch (data_.op.kind()) {
    case OperatorKind::kLinear:
      raw.push_back({data_.op.members().front().A, data_.op.constant_term()});
      break;
    case OperatorKind::kBellman:
      for (const auto& m : data_.op.members()) raw.push_back({m.A, m.c});
      break;
    case OperatorKind::kPucciPlus:
    case OperatorKind::kPucciMinus: {
      const int K = std::max(1, options_.graph_frame_angles);
      const double F0 = data_.op.constant_term();
      for (int a = 0; a < K; ++a) {
        const double th = 0.5 * M_PI * a / K;
        const Vec2 v{std::cos(th), std::sin(th)};
        const Vec2 w = perp(v);
        for (double c1 : {e.lambda, e.Lambda})
          for (double c2 : {e.lambda, e.Lambda}) raw.push_back({SymMat2::outer(v) * c1 + SymMat2::outer(w) * c2, F0});
      }
      break;
    }
  }

  // Direction sets depend only on the stencil width.
  static thread_local std::unique_ptr<Decomposer> dec;
  static thread_local std::size_t dec_size = 0;
  if (!dec || dec_size != dirs.size()) {
    dec = std::make_unique<Decomposer>(dirs);
    dec_size = dirs.size();
  }
  std::vector<bool> lattice(dirs.size()), usable(dirs.size());
  for (std::size_t d = 0; d < dirs.size(); ++d) {
    lattice[d] = r.diffs[d].state == ArmState::kLattice;
    usable[d] = r.diffs[d].state != ArmState::kUnavailable;
  }

  const auto& chart = data_.domain->chart();
  double dphi = 0.0, ddphi = 0.0;
  if (chart) {
    dphi = chart->phi.derivative(n.pos.x);
    ddphi = chart->phi.second_derivative(n.pos.x);
  }
  const std::array<double, 4> At{1.0, -dphi, 0.0, 1.0};

  // Upwind first differences in the x_n direction, built lazily.
  std::optional<DirectionalStencil> up, down;
  auto one_sided = [&](int sign) {
    const Arm arm = make_arm(g, k, 0, sign, data_.dirichlet);
    DirectionalStencil st;
    st.state = arm.state;
    if (arm.state == ArmState::kUnavailable) return st;
    st.form.add_scaled(arm.value, sign / arm.length, int(k));
    st.form.diag -= sign / arm.length;
    return st;
  };

  r.members.reserve(raw.size());
  for (const Raw& m : raw) {
    SchemeMember sm;
    sm.constant = m.c;
    SymMat2 Q = chart ? congruence(At, m.C) : m.C;
    if (!dec->decompose(Q, lattice, sm.weights) && !dec->decompose(Q, usable, sm.weights))
      throw ConfigError("coefficient matrix has no nonnegative decomposition at node (" + std::to_string(n.i) + "," +
                        std::to_string(n.j) + "); increase stencil width");
    const double b = chart ? -m.C.a * ddphi : 0.0;
    if (b != 0.0) {
      // b u_{y_n} is monotone with a forward difference for b > 0.
      auto& st = b > 0.0 ? up : down;
      if (!st) st = one_sided(b > 0.0 ? 1 : -1);
      if (st->state == ArmState::kUnavailable)
        throw ConfigError("no upwind drift stencil at node (" + std::to_string(n.i) + "," + std::to_string(n.j) + ")");
      sm.drift.add_scaled(st->form, b, int(k));
    }
    r.members.push_back(std::move(sm));
  }
}

void DiscreteProblem::assemble_oblique(std::size_t k) {
  const Grid& g = *grid_;
  const Node& n = g.node(k);
  Row& r = rows_[k];
  r.kind = RowKind::kOblique;
  r.data = g_[k];
  const Vec2 s = safe_physical(*data_.domain, n.snap);
  Vec2 beta = data_.oblique.beta(s);
  if (const auto& chart = data_.domain->chart()) beta = {beta.x, beta.y - chart->phi.derivative(n.snap.x) * beta.x};
  const double bn = norm(beta);
  if (!(bn > 0.0) || !(beta.y > 0.0))
    throw ConfigError("beta does not point into the domain at boundary node (" + std::to_string(n.i) + "," +
                      std::to_string(n.j) + ")");
  const Vec2 bh = beta / bn;
  const int self = int(k);
  // Step length from the best-aligned inward lattice neighbour: h or h sqrt(2).
  double best_cos = -1.0;
  double step = g.h();
  for (int di = -1; di <= 1; ++di) {
    for (int dj = -1; dj <= 1; ++dj) {
      if (di == 0 && dj == 0) continue;
      const int t = g.index(n.i + di, n.j + dj);
      if (t < 0 || !active(g.node(t).cls)) continue;
      const double c = dot(bh, normalized(Vec2{double(di), double(dj)}));
      if (c > best_cos) {
        best_cos = c;
        step = std::hypot(double(di), double(dj)) * g.h();
      }
    }
  }
  if (best_cos < 0.5)
    throw ConfigError("no inward lattice direction within 60 degrees of beta at boundary node (" +
                      std::to_string(n.i) + "," + std::to_string(n.j) + ")");
  for (int attempt = 0; attempt < 3; ++attempt, step *= 0.5) {
    LinearForm form;
    form.diag = gamma_[k];
    form.constant = -g_[k];
    bool ok;
    if (options_.oblique_order == 1) {
      form.diag -= bn / step;
      ok = interpolate(g, n.pos + bh * step, bn / step, form, self);
    } else {
      form.diag -= 1.5 * bn / step;
      ok = interpolate(g, n.pos + bh * step, 2.0 * bn / step, form, self) &&
           interpolate(g, n.pos + bh * (2.0 * step), -0.5 * bn / step, form, self);
    }
    if (ok) {
      r.form = std::move(form);
      return;
    }
  }
  // Next to the end of Gamma the step may leave the domain; such rows take the
  // Dirichlet data at the snapped point.
  const double to_end = g.computational().box_max().x - std::abs(n.snap.x);
  if (to_end > 4.0 * g.h() * g.stencil_width())
    throw ConfigError("oblique stencil leaves the domain at boundary node (" + std::to_string(n.i) + "," +
                      std::to_string(n.j) + ")");
  phi_[k] = data_.dirichlet(s);
  r.kind = RowKind::kDirichlet;
  r.data = phi_[k];
  r.form = LinearForm{};
  r.form.diag = 1.0;
  r.form.constant = -phi_[k];
}

double DiscreteProblem::row_residual(std::span<const double> u, std::size_t k, int* policy) const {
  const Row& r = rows_[k];
  switch (r.kind) {
    case RowKind::kInactive:
      if (policy) *policy = 0;
      return 0.0;
    case RowKind::kOblique:
    case RowKind::kDirichlet:
      if (policy) *policy = 0;
      return r.form.apply(u, k);
    case RowKind::kInterior:
      break;
  }
  double best = maximize_ ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
  int best_policy = 0;
  if (use_frames_) {
    const Ellipticity& e = data_.op.ellipticity();
    for (std::size_t f = 0; f < r.frames.size(); ++f) {
      double v = 0.0;
      int bits = 0;
      for (int s = 0; s < 2; ++s) {
        const double d = r.diffs[r.frames[f][s]].form.apply(u, k);
        // Coefficient choice that maximizes (or minimizes) c * d.
        const bool big = maximize_ ? d >= 0.0 : d < 0.0;
        v += (big ? e.Lambda : e.lambda) * d;
        if (big) bits |= 1 << s;
      }
      if (maximize_ ? v > best : v < best) {
        best = v;
        best_policy = int(f) * 4 + bits;
      }
    }
  } else {
    for (std::size_t m = 0; m < r.members.size(); ++m) {
      const SchemeMember& sm = r.members[m];
      double v = sm.constant + sm.drift.apply(u, k);
      for (const auto& [d, w] : sm.weights) v += w * r.diffs[d].form.apply(u, k);
      if (maximize_ ? v > best : v < best) {
        best = v;
        best_policy = int(m);
      }
    }
  }
  if (policy) *policy = best_policy;
  const double F0 = use_frames_ ? data_.op.constant_term() : 0.0;
  return best + F0 - r.data;
}

LinearForm DiscreteProblem::linearize(std::size_t k, int policy) const {
  const Row& r = rows_[k];
  if (r.kind != RowKind::kInterior) {
    if (r.kind == RowKind::kInactive) {
      LinearForm id;
      id.diag = 1.0;
      return id;
    }
    return r.form;
  }
  LinearForm out;
  const int self = int(k);
  if (use_frames_) {
    const Ellipticity& e = data_.op.ellipticity();
    const auto& fr = r.frames.at(std::size_t(policy / 4));
    for (int s = 0; s < 2; ++s) {
      const double c = (policy & (1 << s)) ? e.Lambda : e.lambda;
      out.add_scaled(r.diffs[fr[s]].form, c, self);
    }
    out.constant += data_.op.constant_term() - r.data;
    return out;
  }
  const SchemeMember& sm = r.members.at(std::size_t(policy));
  for (const auto& [d, w] : sm.weights) out.add_scaled(r.diffs[d].form, w, self);
  out.add_scaled(sm.drift, 1.0, self);
  out.constant += sm.constant - r.data;
  return out;
}

double DiscreteProblem::diagonal_bound(std::size_t k) const {
  const Row& r = rows_[k];
  if (r.kind != RowKind::kInterior) return r.kind == RowKind::kInactive ? 1.0 : std::abs(r.form.diag);
  double bound = 0.0;
  if (use_frames_) {
    const double L = data_.op.ellipticity().Lambda;
    for (const auto& fr : r.frames)
      bound = std::max(bound, L * (std::abs(r.diffs[fr[0]].form.diag) + std::abs(r.diffs[fr[1]].form.diag)));
    return bound;
  }
  for (const SchemeMember& sm : r.members) {
    double d = std::abs(sm.drift.diag);
    for (const auto& [dd, w] : sm.weights) d += w * std::abs(r.diffs[dd].form.diag);
    bound = std::max(bound, d);
  }
  return bound;
}

double interior_residual(const DiscreteProblem& problem, const GridField& u, std::size_t node) {
  if (problem.row(node).kind != RowKind::kInterior) throw ConfigError("node is not an interior node");
  return problem.row_residual(u.values, node);
}

double oblique_residual(const DiscreteProblem& problem, const GridField& u, std::size_t node) {
  if (problem.row(node).kind != RowKind::kOblique) throw ConfigError("node is not an oblique boundary node");
  return problem.row_residual(u.values, node);
}

ResidualSummary full_residual(const DiscreteProblem& problem, const GridField& u) {
  if (!u.all_finite()) throw NumericalError("residual evaluated on a field containing NaN or Inf");
  ResidualSummary s{GridField(problem.grid())};
  parallel_for(problem.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) s.residual[k] = problem.row_residual(u.values, k);
  });
  for (std::size_t k = 0; k < problem.size(); ++k) {
    const double a = std::abs(s.residual[k]);
    switch (problem.row(k).kind) {
      case RowKind::kInterior: s.max_interior = std::max(s.max_interior, a); break;
      case RowKind::kOblique: s.max_oblique = std::max(s.max_oblique, a); break;
      case RowKind::kDirichlet: s.max_dirichlet = std::max(s.max_dirichlet, a); break;
      case RowKind::kInactive: break;
    }
  }
  s.max_non_dirichlet = std::max(s.max_interior, s.max_oblique);
  return s;
}

}  // namespace oblique
