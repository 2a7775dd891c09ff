#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "oblique/geometry.hpp"
#include "oblique/operators.hpp"

namespace oblique {

enum class NodeClass : std::uint8_t { kInterior, kOblique, kDirichlet, kExterior };

std::string to_string(NodeClass c);

/// Primitive lattice direction (di, dj), representing the line through +-v.
struct LatticeDir {
  int di = 0;
  int dj = 0;

  Vec2 unit() const { return normalized(Vec2{double(di), double(dj)}); }
  double length() const { return std::hypot(double(di), double(dj)); }
};

/// Direction lines for a stencil width: 1 gives the 3x3 neighbourhood (4
/// lines, 2 frames), 2 adds the 5x5 ring knight moves (8 lines, 4 frames), 3
/// adds the 7x7 ring (16 lines, 8 frames).
std::vector<LatticeDir> stencil_directions(int width);
/// Orthogonal pairs of direction indices.
std::vector<std::array<int, 2>> stencil_frames(const std::vector<LatticeDir>& dirs);

struct Node {
  int i = 0;
  int j = 0;
  /// Lattice position (i h, j h) in the computational chart.
  Vec2 pos;
  /// Physical position (differs from pos on graph domains).
  Vec2 phys;
  NodeClass cls = NodeClass::kExterior;
  /// Nearest boundary point in the computational chart (boundary nodes).
  Vec2 snap;
};

/// Uniform lattice h Z^2 over the bounding box of a domain, with every node
/// classified. Interior if signed distance <= -h/2, boundary (snapped) if
/// |distance| < h/2, exterior otherwise.
class Grid {
 public:
  Grid(std::shared_ptr<const Domain> domain, double h, int stencil_width);

  double h() const { return h_; }
  int nx() const { return nx_; }
  int ny() const { return ny_; }
  int i_min() const { return i_min_; }
  int j_min() const { return j_min_; }
  std::size_t size() const { return nodes_.size(); }
  const Node& node(std::size_t k) const { return nodes_[k]; }
  const std::vector<Node>& nodes() const { return nodes_; }
  /// Node index for lattice coordinates, or -1 outside the box.
  int index(int i, int j) const;
  const Domain& domain() const { return *domain_; }
  const std::shared_ptr<const Domain>& domain_ptr() const { return domain_; }
  const Domain& computational() const { return domain_->computational_domain(); }
  int stencil_width() const { return width_; }
  const std::vector<LatticeDir>& directions() const { return dirs_; }
  const std::vector<std::array<int, 2>>& frames() const { return frames_; }
  std::size_t count(NodeClass c) const;

 private:
  std::shared_ptr<const Domain> domain_;
  double h_;
  int width_;
  int i_min_ = 0;
  int j_min_ = 0;
  int nx_ = 0;
  int ny_ = 0;
  std::vector<Node> nodes_;
  std::vector<LatticeDir> dirs_;
  std::vector<std::array<int, 2>> frames_;
};

/// Throws ConfigError when h <= 0, fewer than 8 nodes span the domain, or no
/// interior node exists.
std::shared_ptr<const Grid> build_grid(std::shared_ptr<const Domain> domain, double h,
                                       int stencil_width = 2);

/// Scalar per node. Exterior entries are kept at 0.
struct GridField {
  std::shared_ptr<const Grid> grid;
  std::vector<double> values;

  GridField() = default;
  explicit GridField(std::shared_ptr<const Grid> g, double fill = 0.0)
      : grid(std::move(g)), values(grid->size(), fill) {
    for (std::size_t k = 0; k < values.size(); ++k)
      if (grid->node(k).cls == NodeClass::kExterior) values[k] = 0.0;
  }

  /// Evaluates fn at the physical position of every non-exterior node.
  static GridField sample(std::shared_ptr<const Grid> g, const ScalarFn& fn);

  double& operator[](std::size_t k) { return values[k]; }
  double operator[](std::size_t k) const { return values[k]; }
  std::size_t size() const { return values.size(); }
  /// Max |value| over non-exterior nodes.
  double max_abs() const;
  bool all_finite() const;
};

/// Field CSV: header `# h=<h> nx=<nx> ny=<ny>`, then `i,j,x,y,class,value`
/// rows for non-exterior nodes, with physical coordinates.
void write_field_csv(std::ostream& out, const GridField& field);
/// Reads values back onto an existing grid; rows must reference its nodes.
GridField read_field_csv(std::istream& in, std::shared_ptr<const Grid> grid);

struct Tap {
  int node = 0;
  double weight = 0.0;
};

/// sum_k w_k u[node_k] + diag * u[self] + constant.
struct LinearForm {
  std::vector<Tap> taps;
  double diag = 0.0;
  double constant = 0.0;

  double apply(std::span<const double> u, std::size_t self) const {
    double acc = constant + diag * u[self];
    for (const Tap& t : taps) acc += t.weight * u[t.node];
    return acc;
  }
  /// Adds s * other; taps on `self` fold into diag.
  void add_scaled(const LinearForm& other, double s, int self);
};

/// Availability of a directional second difference at a node.
enum class ArmState : std::uint8_t { kLattice, kFallback, kUnavailable };

struct DirectionalStencil {
  LinearForm form;
  ArmState state = ArmState::kLattice;
};

/// Discretizes e^T D^2 u e along direction `dir` at an interior node:
/// three-point difference, with arms leaving through the Dirichlet patch
/// ending at the boundary crossing (value from `dirichlet`). Arms leaving
/// through Gamma off-lattice are interpolated along the flat row (fallback)
/// or marked unavailable.
DirectionalStencil directional_stencil(const Grid& grid, std::size_t node, const LatticeDir& dir,
                                       const ScalarFn& dirichlet);

/// (u(x+ke) - 2u(x) + u(x-ke)) / |ke|^2 using lattice neighbours only.
/// Throws NumericalError when a neighbour is not an interior/oblique node.
double directional_second_difference(const GridField& u, std::size_t node, const LatticeDir& dir);

/// Nonnegative weights w_d with Q = sum_d w_d e_d e_d^T over the given
/// direction lines (e_d unit). Prefers the shortest stencil. Throws
/// ConfigError when no nonnegative decomposition exists.
std::vector<std::pair<int, double>> decompose_onto_directions(const SymMat2& Q,
                                                              const std::vector<LatticeDir>& dirs);

struct ProblemData {
  std::shared_ptr<const Domain> domain;
  OperatorSpec op;
  ScalarFn f;
  ObliqueField oblique;
  ScalarFn dirichlet;
};

struct SchemeOptions {
  double h = 1.0 / 32.0;
  int stencil_width = 2;
  /// 1: monotone upwind difference along beta. 2: one-sided second order.
  int oblique_order = 1;
  /// Frame angles for Pucci operators on flattened graph domains.
  int graph_frame_angles = 16;
};

enum class RowKind : std::uint8_t { kInterior, kOblique, kDirichlet, kInactive };

/// One member tr(C D^2u) + b u_{x_n} + c of a max/min family, already mapped
/// onto lattice directions.
struct SchemeMember {
  std::vector<std::pair<int, double>> weights;
  LinearForm drift;
  double constant = 0.0;
};

struct Row {
  RowKind kind = RowKind::kInactive;
  /// Interior rows: per-direction second differences.
  std::vector<DirectionalStencil> diffs;
  /// Flat Pucci rows: orthogonal frames usable at this node.
  std::vector<std::array<int, 2>> frames;
  /// Linear / Bellman / graph-Pucci rows.
  std::vector<SchemeMember> members;
  /// Boundary rows.
  LinearForm form;
  /// f at interior nodes, g at oblique nodes, phi at Dirichlet nodes.
  double data = 0.0;
};

/// Per-node policy index selected by the max/min in an interior row.
using Policy = std::vector<int>;

/// Assembled monotone scheme: F_h[u] - f on interior rows, beta.D_h u +
/// gamma u - g on oblique rows, u - phi on Dirichlet rows.
class DiscreteProblem {
 public:
  DiscreteProblem(ProblemData data, SchemeOptions options);

  const std::shared_ptr<const Grid>& grid() const { return grid_; }
  const ProblemData& data() const { return data_; }
  const SchemeOptions& options() const { return options_; }
  const OperatorSpec& op() const { return data_.op; }
  const Row& row(std::size_t k) const { return rows_[k]; }
  std::size_t size() const { return rows_.size(); }
  /// Rows using a fallback arm.
  std::size_t fallback_rows() const { return fallback_rows_; }
  /// Oblique nodes next to the end of Gamma whose step leaves the domain;
  /// their rows hold the Dirichlet data instead.
  std::size_t corner_rows() const { return corner_rows_; }
  bool uses_frames() const { return use_frames_; }
  bool maximizes() const { return maximize_; }

  /// f, gamma, g and phi as sampled by the scheme (0 where not applicable).
  const GridField& f_field() const { return f_; }
  const GridField& gamma_field() const { return gamma_; }
  const GridField& g_field() const { return g_; }
  const GridField& dirichlet_field() const { return phi_; }

  /// Residual of row k. Writes the selected member into *policy if given.
  double row_residual(std::span<const double> u, std::size_t k, int* policy = nullptr) const;
  /// Linear form of row k under a fixed policy (residual = form.apply(u)).
  LinearForm linearize(std::size_t k, int policy) const;
  /// Largest |d residual / d u(x)| over members; the local CFL bound.
  double diagonal_bound(std::size_t k) const;

 private:
  void assemble_interior(std::size_t k);
  void assemble_oblique(std::size_t k);

  ProblemData data_;
  SchemeOptions options_;
  std::shared_ptr<const Grid> grid_;
  std::vector<Row> rows_;
  GridField f_, gamma_, g_, phi_;
  bool use_frames_ = false;
  bool maximize_ = true;
  std::size_t fallback_rows_ = 0;
  std::size_t corner_rows_ = 0;
};

/// Residual of an interior row: F_h[u](x) - f(x).
double interior_residual(const DiscreteProblem& problem, const GridField& u, std::size_t node);
/// Residual of an oblique row: beta . D_h u + gamma u - g.
double oblique_residual(const DiscreteProblem& problem, const GridField& u, std::size_t node);

struct ResidualSummary {
  GridField residual;
  double max_interior = 0.0;
  double max_oblique = 0.0;
  double max_dirichlet = 0.0;
  /// Max over interior and oblique rows.
  double max_non_dirichlet = 0.0;
};

/// Applies every row. Throws NumericalError if u contains NaN.
ResidualSummary full_residual(const DiscreteProblem& problem, const GridField& u);

}  // namespace oblique
