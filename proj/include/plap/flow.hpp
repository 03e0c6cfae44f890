#pragma once

// Analytic deformation fields W with hand-coded Jacobians, their flows
// d/dt phi_t = W(phi_t), and transport of data f_t = f o phi_t^{-1}.

#include "plap/mesh.hpp"
#include "plap/problem.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace plap {

/// Compactly supported polynomial bump (1 - s^2)^4 on |s| < 1, C^3.
struct Bump {
  static double value(double s) {
    const double a = 1.0 - s * s;
    return a > 0.0 ? a * a * a * a : 0.0;
  }
  static double d1(double s) {
    const double a = 1.0 - s * s;
    return a > 0.0 ? -8.0 * s * a * a * a : 0.0;
  }
  static double d2(double s) {
    const double a = 1.0 - s * s;
    return a > 0.0 ? -8.0 * a * a * a + 48.0 * s * s * a * a : 0.0;
  }
};

/// Quintic smoothstep cut-off: 1 for r <= r0, 0 for r >= r1, C^2.
struct Cutoff {
  double r0;
  double r1;

  double value(double r) const {
    if (r <= r0) return 1.0;
    if (r >= r1) return 0.0;
    const double t = (r - r0) / (r1 - r0);
    return 1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
  }
  double derivative(double r) const {
    if (r <= r0 || r >= r1) return 0.0;
    const double t = (r - r0) / (r1 - r0);
    return -30.0 * t * t * (1.0 - t) * (1.0 - t) / (r1 - r0);
  }
};

/// A finite sum of library fields. Each term is compactly supported and
/// carries its analytic Jacobian; divergence-free terms report an
/// identically zero divergence.
class DeformationField {
 public:
  enum class Kind { stream_bump, rotation, translation_bump, radial_bump };

  struct Term {
    Kind kind;
    Vec2 center = Vec2::Zero();
    Vec2 radii = Vec2::Ones();  // bump half-widths; rotation: (inner, outer)
    Vec2 vector = Vec2::Zero();  // translation velocity
    double amplitude = 1.0;
  };

  DeformationField() = default;
  explicit DeformationField(int dimension) : dim_(dimension) {}

  /// W = 0.
  static DeformationField zero(int dimension) { return DeformationField(dimension); }

  /// W = (d psi/dy, -d psi/dx) with psi = amplitude * b((x-cx)/rx) b((y-cy)/ry).
  static DeformationField stream_bump(Vec2 center, Vec2 radii, double amplitude) {
    DeformationField f(2);
    f.terms_.push_back({Kind::stream_bump, center, radii, Vec2::Zero(), amplitude});
    f.name_ = "stream_bump";
    return f;
  }

  /// W = rate * chi(|x-c|) (y - cy, -(x - cx)): rigid clockwise rotation for
  /// |x-c| <= inner, cut off smoothly to 0 at outer.
  static DeformationField rotation(Vec2 center, double inner, double outer, double rate = 1.0) {
    if (!(outer > inner && inner >= 0.0))
      throw std::invalid_argument("rotation field needs 0 <= inner < outer");
    DeformationField f(2);
    f.terms_.push_back({Kind::rotation, center, Vec2(inner, outer), Vec2::Zero(), rate});
    f.name_ = "rotation";
    return f;
  }

  /// W = velocity * B(x), B a product of per-axis cut-offs equal to 1 on the
  /// half-size box (the plateau) and 0 outside the radii. Not divergence-free.
  static DeformationField translation_bump(int dimension, Vec2 center, Vec2 radii, Vec2 velocity) {
    DeformationField f(dimension);
    if (dimension == 1) velocity.y() = 0.0, center.y() = 0.0;
    f.terms_.push_back({Kind::translation_bump, center, radii, velocity, 1.0});
    f.name_ = "translation_bump";
    return f;
  }

  /// W = amplitude * b(|x-c|/R) (x - c). Not divergence-free.
  static DeformationField radial_bump(int dimension, Vec2 center, double radius, double amplitude) {
    DeformationField f(dimension);
    if (dimension == 1) center.y() = 0.0;
    f.terms_.push_back({Kind::radial_bump, center, Vec2(radius, radius), Vec2::Zero(), amplitude});
    f.name_ = "radial_bump";
    return f;
  }

  int dimension() const { return dim_; }
  const std::string& name() const { return name_; }
  const std::vector<Term>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }

  bool divergence_free() const {
    for (const auto& t : terms_)
      if (t.kind != Kind::stream_bump && t.kind != Kind::rotation) return false;
    return true;
  }

  bool has_stream_function() const {
    for (const auto& t : terms_)
      if (t.kind != Kind::stream_bump) return false;
    return true;
  }

  Vec2 operator()(const Vec2& x) const {
    Vec2 w = Vec2::Zero();
    for (const auto& t : terms_) w += term_value(t, x);
    return w;
  }

  /// W'(x), entry (i, j) = d W_i / d x_j.
  Mat2 jacobian(const Vec2& x) const {
    Mat2 j = Mat2::Zero();
    for (const auto& t : terms_) j += term_jacobian(t, x);
    return j;
  }

  double divergence(const Vec2& x) const {
    double d = 0.0;
    for (const auto& t : terms_) {
      if (t.kind == Kind::stream_bump || t.kind == Kind::rotation) continue;
      const Mat2 j = term_jacobian(t, x);
      d += dim_ == 1 ? j(0, 0) : j(0, 0) + j(1, 1);
    }
    return d;
  }

  std::optional<double> stream_function(const Vec2& x) const {
    if (!has_stream_function()) return std::nullopt;
    double s = 0.0;
    for (const auto& t : terms_) {
      const double X = (x.x() - t.center.x()) / t.radii.x();
      const double Y = (x.y() - t.center.y()) / t.radii.y();
      s += t.amplitude * Bump::value(X) * Bump::value(Y);
    }
    return s;
  }

  /// Axis-aligned box containing the support (empty box for W = 0).
  std::pair<Vec2, Vec2> support_box() const {
    Vec2 lo = Vec2::Constant(std::numeric_limits<double>::infinity());
    Vec2 hi = -lo;
    for (const auto& t : terms_) {
      const Vec2 r = t.kind == Kind::rotation ? Vec2::Constant(t.radii.y()) : t.radii;
      lo = lo.cwiseMin(t.center - r);
      hi = hi.cwiseMax(t.center + r);
    }
    if (dim_ == 1) {
      lo.y() = 0.0;
      hi.y() = 0.0;
    }
    return {lo, hi};
  }

  /// Throws unless W vanishes within one cell diameter of the boundary.
  void require_support_inside(const Mesh& mesh) const {
    if (mesh.dimension() != dim_)
      throw std::invalid_argument("deformation field dimension does not match the mesh");
    if (is_zero()) return;
    const auto [lo, hi] = support_box();
    const double h = mesh.cell_diameter();
    for (int d = 0; d < dim_; ++d)
      if (lo[d] < mesh.lower()[d] + h || hi[d] > mesh.upper()[d] - h)
        throw std::invalid_argument("deformation field support reaches the boundary layer");
  }

  DeformationField operator-() const {
    DeformationField f = *this;
    for (auto& t : f.terms_) {
      if (t.kind == Kind::translation_bump) t.vector = -t.vector;
      else t.amplitude = -t.amplitude;
    }
    f.name_ = "-" + name_;
    return f;
  }

  DeformationField operator+(const DeformationField& other) const {
    if (other.dim_ != dim_) throw std::invalid_argument("cannot add fields of different dimension");
    DeformationField f = *this;
    f.terms_.insert(f.terms_.end(), other.terms_.begin(), other.terms_.end());
    f.name_ = name_.empty() ? other.name_ : (other.name_.empty() ? name_ : name_ + "+" + other.name_);
    return f;
  }

  DeformationField scaled(double s) const {
    DeformationField f = *this;
    for (auto& t : f.terms_) {
      if (t.kind == Kind::translation_bump) t.vector *= s;
      else t.amplitude *= s;
    }
    return f;
  }

 private:
  Vec2 term_value(const Term& t, const Vec2& x) const {
    const Vec2 d = x - t.center;
    switch (t.kind) {
      case Kind::stream_bump: {
        const double X = d.x() / t.radii.x(), Y = d.y() / t.radii.y();
        const double psi_x = t.amplitude * Bump::d1(X) / t.radii.x() * Bump::value(Y);
        const double psi_y = t.amplitude * Bump::value(X) * Bump::d1(Y) / t.radii.y();
        return {psi_y, -psi_x};
      }
      case Kind::rotation: {
        const double chi = Cutoff{t.radii.x(), t.radii.y()}.value(d.norm());
        return t.amplitude * chi * Vec2(d.y(), -d.x());
      }
      case Kind::translation_bump:
        return t.vector * product_bump(t, d);
      case Kind::radial_bump: {
        const double rho2 = d.squaredNorm() / (t.radii.x() * t.radii.x());
        const double a = 1.0 - rho2;
        return a > 0.0 ? Vec2(t.amplitude * a * a * a * a * d) : Vec2::Zero();
      }
    }
    return Vec2::Zero();
  }

  /// Plateau profile of a translation term: 1 on |d_k| <= r_k / 2, 0 beyond r_k.
  static Cutoff plateau(const Term& t, int axis) { return Cutoff{0.5 * t.radii[axis], t.radii[axis]}; }

  double product_bump(const Term& t, const Vec2& d) const {
    const double bx = plateau(t, 0).value(std::abs(d.x()));
    return dim_ == 1 ? bx : bx * plateau(t, 1).value(std::abs(d.y()));
  }

  /// d/ds of the plateau profile at signed offset s.
  static double plateau_slope(const Cutoff& c, double s) { return (s < 0.0 ? -1.0 : 1.0) * c.derivative(std::abs(s)); }

  Mat2 term_jacobian(const Term& t, const Vec2& x) const {
    const Vec2 d = x - t.center;
    Mat2 j = Mat2::Zero();
    switch (t.kind) {
      case Kind::stream_bump: {
        const double rx = t.radii.x(), ry = t.radii.y();
        const double X = d.x() / rx, Y = d.y() / ry;
        const double psi_xy = t.amplitude * Bump::d1(X) * Bump::d1(Y) / (rx * ry);
        const double psi_xx = t.amplitude * Bump::d2(X) * Bump::value(Y) / (rx * rx);
        const double psi_yy = t.amplitude * Bump::value(X) * Bump::d2(Y) / (ry * ry);
        j << psi_xy, psi_yy, -psi_xx, -psi_xy;
        return j;
      }
      case Kind::rotation: {
        const Cutoff cut{t.radii.x(), t.radii.y()};
        const double r = d.norm();
        const double chi = cut.value(r);
        Mat2 rot;
        rot << 0.0, 1.0, -1.0, 0.0;
        j = chi * rot;
        if (r > 0.0) {
          const Vec2 grad_chi = cut.derivative(r) / r * d;
          j += Vec2(d.y(), -d.x()) * grad_chi.transpose();
        }
        return t.amplitude * j;
      }
      case Kind::translation_bump: {
        const Cutoff cx = plateau(t, 0), cy = plateau(t, 1);
        Vec2 grad = Vec2::Zero();
        if (dim_ == 1) {
          grad.x() = plateau_slope(cx, d.x());
        } else {
          grad.x() = plateau_slope(cx, d.x()) * cy.value(std::abs(d.y()));
          grad.y() = cx.value(std::abs(d.x())) * plateau_slope(cy, d.y());
        }
        return t.vector * grad.transpose();
      }
      case Kind::radial_bump: {
        const double R2 = t.radii.x() * t.radii.x();
        const double a = 1.0 - d.squaredNorm() / R2;
        if (a <= 0.0) return j;
        const double b = a * a * a * a;
        const Vec2 grad_b = -8.0 * a * a * a / R2 * d;
        j = b * Mat2::Identity() + d * grad_b.transpose();
        if (dim_ == 1) j(1, 1) = 0.0, j(0, 1) = 0.0, j(1, 0) = 0.0;
        return t.amplitude * j;
      }
    }
    return j;
  }

  int dim_ = 2;
  std::string name_ = "zero";
  std::vector<Term> terms_;
};

/// Sampled Lipschitz estimate max ||W'(x)||_2 over random points of the mesh domain.
inline double lipschitz_estimate(const DeformationField& field, const Mesh& mesh, int samples = 1000,
                                 std::uint64_t seed = 7) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(mesh.lower().x(), mesh.upper().x());
  std::uniform_real_distribution<double> uy(mesh.lower().y(), mesh.upper().y());
  double best = 0.0;
  for (int k = 0; k < samples; ++k) {
    const Vec2 x(ux(rng), mesh.dimension() == 1 ? 0.0 : uy(rng));
    Mat2 j = field.jacobian(x);
    if (mesh.dimension() == 1) j = Mat2::Zero(), j(0, 0) = field.jacobian(x)(0, 0);
    best = std::max(best, j.operatorNorm());
  }
  return best;
}

struct FlowConfig {
  /// RK4 substeps per flow evaluation.
  int steps = 64;
  /// Optional domain box; trajectories leaving it (beyond slack) are errors.
  std::optional<std::pair<Vec2, Vec2>> domain;
  double slack = 1e-9;

  void validate() const {
    if (steps < 16) throw std::invalid_argument("flow integrator needs at least 16 steps");
  }
  static FlowConfig for_mesh(const Mesh& mesh, int steps = 64) {
    FlowConfig c;
    c.steps = steps;
    c.domain = std::make_pair(mesh.lower(), mesh.upper());
    return c;
  }
};

class FlowError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// phi_t(x) by classical RK4 on [0, t]; negative t follows the reversed field.
inline Vec2 flow_map(const DeformationField& field, double t, const Vec2& x, const FlowConfig& config = {}) {
  config.validate();
  if (t == 0.0 || field.is_zero()) return x;
  const double h = t / config.steps;
  Vec2 y = x;
  for (int k = 0; k < config.steps; ++k) {
    const Vec2 k1 = field(y);
    const Vec2 k2 = field(y + 0.5 * h * k1);
    const Vec2 k3 = field(y + 0.5 * h * k2);
    const Vec2 k4 = field(y + h * k3);
    y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  if (field.dimension() == 1) y.y() = x.y();
  if (config.domain) {
    const auto& [lo, hi] = *config.domain;
    for (int d = 0; d < field.dimension(); ++d)
      if (y[d] < lo[d] - config.slack || y[d] > hi[d] + config.slack)
        throw FlowError("flow trajectory left the domain");
  }
  return y;
}

/// phi_t^{-1}(x), i.e. the flow for time -t.
inline Vec2 inverse_flow_map(const DeformationField& field, double t, const Vec2& x,
                             const FlowConfig& config = {}) {
  return flow_map(field, -t, x, config);
}

/// f o phi_t^{-1} for a cell field: each cell takes the value of the cell
/// containing the preimage of its centroid.
inline CellField transport_field(const CellField& f, const DeformationField& field, double t,
                                 const Mesh& mesh, FlowConfig config = {}) {
  require_cell_field(mesh, f);
  if (!config.domain) config.domain = std::make_pair(mesh.lower(), mesh.upper());
  CellField out = f;
  if (t == 0.0 || field.is_zero()) return out;
  for (std::size_t c = 0; c < mesh.cell_count(); ++c) {
    const Vec2& x = mesh.centroid(c);
    const Vec2 y = inverse_flow_map(field, t, x, config);
    if (y == x) continue;
    const auto cell = mesh.locate(y);
    if (!cell) throw FlowError("point location failed for a transported centroid");
    out[c] = f[*cell];
  }
  return out;
}

/// f o phi_t^{-1} for an analytic function, sampled at cell centroids.
inline CellField transport_function(const ScalarFunction& f, const DeformationField& field, double t,
                                    const Mesh& mesh, FlowConfig config = {}) {
  if (!config.domain) config.domain = std::make_pair(mesh.lower(), mesh.upper());
  CellField out(mesh.cell_count(), 0.0);
  for (std::size_t c = 0; c < mesh.cell_count(); ++c)
    out[c] = f(inverse_flow_map(field, t, mesh.centroid(c), config));
  return out;
}

/// max |det D phi_t - 1| over random points of the field's support, with
/// D phi_t from central differences of the flow map.
inline double jacobian_defect(const DeformationField& field, double t, const FlowConfig& config = {},
                              int samples = 200, std::uint64_t seed = 11) {
  if (!field.divergence_free())
    throw std::invalid_argument("jacobian_defect requires a divergence-free field");
  if (field.is_zero() || t == 0.0) return 0.0;
  FlowConfig cfg = config;
  cfg.domain.reset();
  const auto [lo, hi] = field.support_box();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(lo.x(), hi.x()), uy(lo.y(), hi.y());
  const double delta = 1e-5 * std::max((hi - lo).maxCoeff(), 1e-3);
  double worst = 0.0;
  for (int k = 0; k < samples; ++k) {
    const Vec2 x(ux(rng), uy(rng));
    Mat2 D;
    for (int d = 0; d < 2; ++d) {
      Vec2 e = Vec2::Zero();
      e[d] = delta;
      D.col(d) = (flow_map(field, t, x + e, cfg) - flow_map(field, t, x - e, cfg)) / (2.0 * delta);
    }
    worst = std::max(worst, std::abs(D.determinant() - 1.0));
  }
  return worst;
}

}  // namespace plap
