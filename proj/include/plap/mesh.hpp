#pragma once

// Structured P1 meshes on intervals and rectangles, node/cell fields and
// cellwise quadrature.

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace plap {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Values attached to mesh nodes (piecewise-linear interpolant).
struct NodeField {
  std::vector<double> values;
  bool dirichlet = true;

  std::size_t size() const { return values.size(); }
  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
};

/// Values attached to cells (piecewise-constant).
struct CellField {
  std::vector<double> values;

  CellField() = default;
  explicit CellField(std::vector<double> v) : values(std::move(v)) {}
  CellField(std::initializer_list<double> v) : values(v) {}
  CellField(std::size_t n, double c) : values(n, c) {}

  std::size_t size() const { return values.size(); }
  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
  bool operator==(const CellField&) const = default;
};

/// Uniform mesh of an interval (2-node cells) or a rectangle (each grid
/// square split into two equal triangles along its rising diagonal).
class Mesh {
 public:
  int dimension() const { return dim_; }
  std::size_t node_count() const { return nodes_.size(); }
  std::size_t cell_count() const { return cells_.size(); }
  /// Vertices per cell (N + 1).
  int cell_vertex_count() const { return dim_ + 1; }

  const Vec2& node(std::size_t i) const { return nodes_[i]; }
  bool is_boundary(std::size_t i) const { return boundary_[i] != 0; }

  std::span<const int> cell_nodes(std::size_t c) const {
    return {cells_[c].data(), static_cast<std::size_t>(dim_ + 1)};
  }
  /// Gradients of the local P1 basis functions (one per vertex).
  std::span<const Vec2> basis_gradients(std::size_t c) const {
    return {grads_[c].data(), static_cast<std::size_t>(dim_ + 1)};
  }
  const Vec2& centroid(std::size_t c) const { return centroids_[c]; }
  double cell_measure(std::size_t c) const { return measures_[c]; }
  std::span<const double> cell_measures() const { return measures_; }

  double measure() const { return measure_; }
  double diameter() const { return (hi_ - lo_).norm(); }
  const Vec2& lower() const { return lo_; }
  const Vec2& upper() const { return hi_; }
  std::array<int, 2> resolution() const { return res_; }
  Vec2 spacing() const { return h_; }
  /// Largest edge length of a cell.
  double cell_diameter() const { return dim_ == 1 ? h_.x() : h_.norm(); }

  /// Interior (free) node ids in ascending order.
  std::span<const int> interior_nodes() const { return interior_; }
  /// Position of a node in interior_nodes(), or -1 on the boundary.
  int dof_of(std::size_t node) const { return dof_[node]; }

  bool contains(const Vec2& x, double tol = 0.0) const {
    for (int d = 0; d < dim_; ++d)
      if (x[d] < lo_[d] - tol || x[d] > hi_[d] + tol) return false;
    return true;
  }

  /// Index of the cell containing x (closed domain), via the grid index.
  std::optional<std::size_t> locate(const Vec2& x) const {
    constexpr double kSlack = 1e-12;
    if (!contains(x, kSlack * diameter())) return std::nullopt;
    auto index = [&](int d) {
      const double s = (x[d] - lo_[d]) / h_[d];
      int i = static_cast<int>(std::floor(s));
      if (i < 0) i = 0;
      if (i >= res_[d]) i = res_[d] - 1;
      return i;
    };
    const int i = index(0);
    if (dim_ == 1) return static_cast<std::size_t>(i);
    const int j = index(1);
    const double xi = (x.x() - lo_.x()) / h_.x() - i;
    const double eta = (x.y() - lo_.y()) / h_.y() - j;
    const std::size_t square = static_cast<std::size_t>(j) * res_[0] + i;
    return 2 * square + (xi >= eta ? 0 : 1);
  }

  friend Mesh build_mesh(int dimension, std::span<const double> extents,
                         std::span<const int> resolution);

 private:
  Mesh() = default;
  void finalize();

  int dim_ = 1;
  Vec2 lo_ = Vec2::Zero();
  Vec2 hi_ = Vec2::Zero();
  Vec2 h_ = Vec2::Zero();
  std::array<int, 2> res_{1, 1};
  double measure_ = 0.0;
  std::vector<Vec2> nodes_;
  std::vector<std::array<int, 3>> cells_;
  std::vector<std::array<Vec2, 3>> grads_;
  std::vector<Vec2> centroids_;
  std::vector<double> measures_;
  std::vector<char> boundary_;
  std::vector<int> interior_;
  std::vector<int> dof_;
};

/// extents: {a, b} in 1D, {x0, x1, y0, y1} in 2D. resolution: cells per axis.
inline Mesh build_mesh(int dimension, std::span<const double> extents,
                       std::span<const int> resolution) {
  if (dimension != 1 && dimension != 2)
    throw std::invalid_argument("mesh dimension must be 1 or 2");
  if (extents.size() != static_cast<std::size_t>(2 * dimension))
    throw std::invalid_argument("mesh extents need 2 values per axis");
  if (resolution.size() != static_cast<std::size_t>(dimension))
    throw std::invalid_argument("mesh resolution needs one entry per axis");

  Mesh m;
  m.dim_ = dimension;
  for (int d = 0; d < dimension; ++d) {
    const double a = extents[2 * d], b = extents[2 * d + 1];
    if (!std::isfinite(a) || !std::isfinite(b) || !(b > a))
      throw std::invalid_argument("degenerate mesh extents on axis " + std::to_string(d));
    if (resolution[d] < 2)
      throw std::invalid_argument("mesh resolution must be >= 2 per axis");
    m.lo_[d] = a;
    m.hi_[d] = b;
    m.res_[d] = resolution[d];
    m.h_[d] = (b - a) / resolution[d];
  }

  if (dimension == 1) {
    const int n = m.res_[0];
    m.res_[1] = 1;
    for (int i = 0; i <= n; ++i) m.nodes_.emplace_back(m.lo_.x() + i * m.h_.x(), 0.0);
    m.nodes_.back().x() = m.hi_.x();
    for (int i = 0; i < n; ++i) {
      m.cells_.push_back({i, i + 1, -1});
      m.grads_.push_back({Vec2(-1.0 / m.h_.x(), 0.0), Vec2(1.0 / m.h_.x(), 0.0), Vec2::Zero()});
    }
    m.measure_ = m.hi_.x() - m.lo_.x();
  } else {
    const int nx = m.res_[0], ny = m.res_[1];
    for (int j = 0; j <= ny; ++j)
      for (int i = 0; i <= nx; ++i)
        m.nodes_.emplace_back(i == nx ? m.hi_.x() : m.lo_.x() + i * m.h_.x(),
                              j == ny ? m.hi_.y() : m.lo_.y() + j * m.h_.y());
    const double hx = m.h_.x(), hy = m.h_.y();
    for (int j = 0; j < ny; ++j) {
      for (int i = 0; i < nx; ++i) {
        const int v00 = j * (nx + 1) + i, v10 = v00 + 1;
        const int v01 = v00 + nx + 1, v11 = v01 + 1;
        // lower-right triangle (v00, v10, v11)
        m.cells_.push_back({v00, v10, v11});
        m.grads_.push_back({Vec2(-1.0 / hx, 0.0), Vec2(1.0 / hx, -1.0 / hy), Vec2(0.0, 1.0 / hy)});
        // upper-left triangle (v00, v11, v01)
        m.cells_.push_back({v00, v11, v01});
        m.grads_.push_back({Vec2(0.0, -1.0 / hy), Vec2(1.0 / hx, 0.0), Vec2(-1.0 / hx, 1.0 / hy)});
      }
    }
    m.measure_ = (m.hi_.x() - m.lo_.x()) * (m.hi_.y() - m.lo_.y());
  }
  m.finalize();
  return m;
}

inline Mesh build_mesh(int dimension, std::initializer_list<double> extents,
                       std::initializer_list<int> resolution) {
  return build_mesh(dimension, std::span<const double>(extents.begin(), extents.size()),
                    std::span<const int>(resolution.begin(), resolution.size()));
}

/// Unit interval with n cells.
inline Mesh unit_interval(int n) { return build_mesh(1, {0.0, 1.0}, {n}); }
/// Unit square with n x n squares (2 n^2 triangles).
inline Mesh unit_square(int n) { return build_mesh(2, {0.0, 1.0, 0.0, 1.0}, {n, n}); }

inline void Mesh::finalize() {
  const std::size_t nc = cells_.size();
  const double cell = measure_ / static_cast<double>(nc);
  measures_.assign(nc, cell);
  centroids_.resize(nc);
  for (std::size_t c = 0; c < nc; ++c) {
    Vec2 s = Vec2::Zero();
    for (int v : cell_nodes(c)) s += nodes_[v];
    centroids_[c] = s / (dim_ + 1);
  }
  boundary_.assign(nodes_.size(), 0);
  dof_.assign(nodes_.size(), -1);
  interior_.clear();
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    bool b = false;
    for (int d = 0; d < dim_; ++d) {
      const int nd = res_[d];
      const int k = dim_ == 1 ? static_cast<int>(i)
                              : (d == 0 ? static_cast<int>(i % (res_[0] + 1))
                                        : static_cast<int>(i / (res_[0] + 1)));
      if (k == 0 || k == nd) b = true;
    }
    boundary_[i] = b ? 1 : 0;
    if (!b) {
      dof_[i] = static_cast<int>(interior_.size());
      interior_.push_back(static_cast<int>(i));
    }
  }
}

inline NodeField zero_node_field(const Mesh& mesh) {
  return NodeField{std::vector<double>(mesh.node_count(), 0.0), true};
}

/// Node field from a function of position; boundary entries pinned to 0.
template <class F>
NodeField interpolate(const Mesh& mesh, F&& f) {
  NodeField u = zero_node_field(mesh);
  for (int i : mesh.interior_nodes()) u[i] = f(mesh.node(i));
  return u;
}

/// Cell field sampled from a function at cell centroids.
template <class F>
CellField sample_cells(const Mesh& mesh, F&& f) {
  CellField out(mesh.cell_count(), 0.0);
  for (std::size_t c = 0; c < mesh.cell_count(); ++c) out[c] = f(mesh.centroid(c));
  return out;
}

inline void require_node_field(const Mesh& mesh, const NodeField& u) {
  if (u.size() != mesh.node_count())
    throw std::invalid_argument("node field size " + std::to_string(u.size()) +
                                " does not match mesh node count " +
                                std::to_string(mesh.node_count()));
}

inline void require_cell_field(const Mesh& mesh, const CellField& f) {
  if (f.size() != mesh.cell_count())
    throw std::invalid_argument("cell field size " + std::to_string(f.size()) +
                                " does not match mesh cell count " +
                                std::to_string(mesh.cell_count()));
}

/// Constant gradient of the P1 interpolant on each cell.
inline std::vector<Vec2> p1_gradient(const Mesh& mesh, const NodeField& u) {
  require_node_field(mesh, u);
  std::vector<Vec2> grad(mesh.cell_count());
  for (std::size_t c = 0; c < mesh.cell_count(); ++c) {
    Vec2 g = Vec2::Zero();
    const auto nodes = mesh.cell_nodes(c);
    const auto basis = mesh.basis_gradients(c);
    for (std::size_t k = 0; k < nodes.size(); ++k) g += u[nodes[k]] * basis[k];
    grad[c] = g;
  }
  return grad;
}

/// Sum over cells of c * w * measure.
inline double integrate(const Mesh& mesh, const CellField& c, std::span<const double> w) {
  require_cell_field(mesh, c);
  if (w.size() != mesh.cell_count())
    throw std::invalid_argument("integrate: weight size does not match mesh cell count");
  double s = 0.0;
  for (std::size_t k = 0; k < c.size(); ++k) s += c[k] * w[k] * mesh.cell_measure(k);
  return s;
}

inline double integrate(const Mesh& mesh, const CellField& c, const CellField& w) {
  return integrate(mesh, c, std::span<const double>(w.values));
}

inline double integrate(const Mesh& mesh, const CellField& c) {
  require_cell_field(mesh, c);
  double s = 0.0;
  for (std::size_t k = 0; k < c.size(); ++k) s += c[k] * mesh.cell_measure(k);
  return s;
}

/// Cell average over vertices of |u|^p.
inline CellField cell_power_average(const Mesh& mesh, const NodeField& u, double p) {
  require_node_field(mesh, u);
  CellField out(mesh.cell_count(), 0.0);
  const double inv = 1.0 / mesh.cell_vertex_count();
  for (std::size_t c = 0; c < mesh.cell_count(); ++c) {
    double s = 0.0;
    for (int v : mesh.cell_nodes(c)) s += std::pow(std::abs(u[v]), p);
    out[c] = s * inv;
  }
  return out;
}

/// Cell average over vertices of |u|^(p-2) u.
inline CellField cell_signed_power_average(const Mesh& mesh, const NodeField& u, double p) {
  require_node_field(mesh, u);
  CellField out(mesh.cell_count(), 0.0);
  const double inv = 1.0 / mesh.cell_vertex_count();
  for (std::size_t c = 0; c < mesh.cell_count(); ++c) {
    double s = 0.0;
    for (int v : mesh.cell_nodes(c)) {
      const double a = std::abs(u[v]);
      if (a > 0.0) s += std::pow(a, p - 1.0) * (u[v] > 0 ? 1.0 : -1.0);
    }
    out[c] = s * inv;
  }
  return out;
}

/// Lumped node weights: sum over incident cells of f_c * |cell| / (N + 1).
inline std::vector<double> lumped_weights(const Mesh& mesh, const CellField& f) {
  require_cell_field(mesh, f);
  std::vector<double> w(mesh.node_count(), 0.0);
  const double inv = 1.0 / mesh.cell_vertex_count();
  for (std::size_t c = 0; c < mesh.cell_count(); ++c) {
    const double share = f[c] * mesh.cell_measure(c) * inv;
    for (int v : mesh.cell_nodes(c)) w[v] += share;
  }
  return w;
}

inline void write_cell_csv(std::ostream& os, const Mesh& mesh, const CellField& f) {
  require_cell_field(mesh, f);
  os.precision(17);
  os << (mesh.dimension() == 1 ? "cell,x,value\n" : "cell,x,y,value\n");
  for (std::size_t c = 0; c < mesh.cell_count(); ++c) {
    const Vec2& x = mesh.centroid(c);
    os << c << ',' << x.x();
    if (mesh.dimension() == 2) os << ',' << x.y();
    os << ',' << f[c] << '\n';
  }
}

inline void write_node_csv(std::ostream& os, const Mesh& mesh, const NodeField& u) {
  require_node_field(mesh, u);
  os.precision(17);
  os << (mesh.dimension() == 1 ? "node,x,value\n" : "node,x,y,value\n");
  for (std::size_t i = 0; i < mesh.node_count(); ++i) {
    const Vec2& x = mesh.node(i);
    os << i << ',' << x.x();
    if (mesh.dimension() == 2) os << ',' << x.y();
    os << ',' << u[i] << '\n';
  }
}

}  // namespace plap
