#pragma once

// Principal eigenpair of the Dirichlet p-Laplacian with weight and potential,
//
//   -div(|grad u|^{p-2} grad u) + V |u|^{p-2} u = lambda g |u|^{p-2} u,
//
// computed as the constrained minimum of the (epsilon-regularized) energy
//
//   E_eps(u) = int (|grad u|^2 + eps^2)^{(p-2)/2} |grad u|^2 + V |u|^p
//
// over P1 functions with int g |u|^p = 1. Nonlinear integrands of u are
// cell averages of vertex values, which makes the potential and weight terms
// lumped node sums. The minimizer is found by preconditioned projected
// gradient descent with Armijo backtracking, renormalization and u <- |u|,
// continued along a decreasing eps schedule.

#include "plap/mesh.hpp"
#include "plap/problem.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace plap {

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SolverConfig {
  /// Initial regularization; a negative value means 0.1 * domain diameter.
  double epsilon0 = -1.0;
  double epsilon_decay = 10.0;
  double epsilon_min = 1e-8;
  /// Stop when the preconditioned gradient norm is below this times (1 + |lambda|) ...
  double gradient_tolerance = 1e-8;
  /// ... and lambda varied by at most this times (1 + |lambda|) over the window.
  double lambda_tolerance = 1e-10;
  int lambda_window = 5;
  /// Gradient tolerance used on the intermediate eps levels.
  double intermediate_tolerance = 1e-5;
  double normalization_tolerance = 1e-10;
  double residual_tolerance = 1e-6;
  int max_iterations = 3000;
  int max_level_iterations = 400;
  double armijo = 1e-4;
  double backtrack = 0.5;
  int max_backtracks = 50;
  /// Random positive start on the weight support instead of the plain tent.
  bool random_start = false;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(epsilon_min >= 0.0)) throw std::invalid_argument("epsilon_min must be >= 0");
    if (epsilon0 >= 0.0 && epsilon0 < epsilon_min)
      throw std::invalid_argument("epsilon0 must be >= epsilon_min");
    if (!(epsilon_decay > 1.0)) throw std::invalid_argument("epsilon_decay must be > 1");
    if (!(gradient_tolerance > 0.0) || !(lambda_tolerance > 0.0) ||
        !(intermediate_tolerance > 0.0) || !(normalization_tolerance > 0.0) ||
        !(residual_tolerance > 0.0))
      throw std::invalid_argument("solver tolerances must be positive");
    if (max_iterations < 1 || max_level_iterations < 1 || lambda_window < 1)
      throw std::invalid_argument("solver iteration limits must be positive");
  }
};

struct EigenResult {
  double lambda = 0.0;
  NodeField u;
  double residual = 0.0;
  double normalization_defect = 0.0;
  int iterations = 0;
  double epsilon_final = 0.0;
  bool converged = false;
  double gradient_norm = 0.0;
  std::vector<double> trace;
};

namespace detail {

/// The regularized density F(xi) = (|xi|^2 + eps^2)^{(p-2)/2} |xi|^2.
struct GradientDensity {
  double p;
  double eps;

  double value(double xi2) const {
    if (p == 2.0) return xi2;
    const double s = xi2 + eps * eps;
    return s > 0.0 ? std::pow(s, 0.5 * (p - 2.0)) * xi2 : 0.0;
  }
  /// dF/dxi = slope * xi.
  double slope(double xi2) const {
    if (p == 2.0) return 2.0;
    const double s = xi2 + eps * eps;
    return s > 0.0 ? std::pow(s, 0.5 * (p - 4.0)) * (p * xi2 + 2.0 * eps * eps) : 0.0;
  }
  /// d(slope)/d(|xi|^2); the Hessian of F is slope * I + 2 * curvature * xi xi^T.
  double curvature(double xi2) const {
    if (p == 2.0) return 0.0;
    const double s = xi2 + eps * eps;
    if (!(s > 0.0)) return 0.0;
    return std::pow(s, 0.5 * (p - 6.0)) * (0.5 * (p - 4.0) * (p * xi2 + 2.0 * eps * eps) + p * s);
  }
};

/// Constraint C(u) = (sum_i w_i |u_i|^r)^{p/r}, p-homogeneous. For r = p the
/// weights may change sign.
struct PowerConstraint {
  std::vector<double> weights;
  double p = 2.0;
  double r = 2.0;

  double sum(const NodeField& u) const {
    double s = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i)
      if (weights[i] != 0.0 && u[i] != 0.0) s += weights[i] * std::pow(std::abs(u[i]), r);
    return s;
  }
  double value(const NodeField& u) const {
    const double s = sum(u);
    if (r == p) return s;
    return s > 0.0 ? std::pow(s, p / r) : 0.0;
  }
  /// Gradient entry at node i given the precomputed sum.
  double gradient(const NodeField& u, std::size_t i, double s) const {
    const double a = std::abs(u[i]);
    if (a == 0.0 || weights[i] == 0.0) return 0.0;
    const double sign = u[i] > 0.0 ? 1.0 : -1.0;
    const double local = weights[i] * std::pow(a, r - 1.0) * sign;
    if (r == p) return p * local;
    return p * std::pow(s, p / r - 1.0) * local;
  }
};

/// Energy sum_c |c| F(grad u_c) + sum_i a_i |u_i|^p and the machinery for
/// minimizing it under a PowerConstraint.
class QuotientMinimizer {
 public:
  QuotientMinimizer(const Mesh& mesh, double p, std::vector<double> potential,
                    PowerConstraint constraint, const SolverConfig& config)
      : mesh_(mesh), p_(p), potential_(std::move(potential)),
        constraint_(std::move(constraint)), config_(config) {
    if (potential_.empty()) potential_.assign(mesh.node_count(), 0.0);
    build_pattern();
  }

  double energy(const NodeField& u, double eps) const {
    const GradientDensity F{p_, eps};
    double e = 0.0;
    for (std::size_t c = 0; c < mesh_.cell_count(); ++c)
      e += mesh_.cell_measure(c) * F.value(cell_gradient(u, c).squaredNorm());
    for (std::size_t i = 0; i < potential_.size(); ++i)
      if (potential_[i] != 0.0 && u[i] != 0.0) e += potential_[i] * std::pow(std::abs(u[i]), p_);
    return e;
  }

  struct Outcome {
    NodeField u;
    double value = 0.0;
    double gradient_norm = 0.0;
    int iterations = 0;
    double epsilon = 0.0;
    bool converged = false;
    std::vector<double> trace;
  };

  /// Runs the eps continuation from the given start (need not be normalized).
  Outcome minimize(NodeField u) {
    config_.validate();
    Outcome out;
    if (!normalize(u))
      throw SolverError("initial function has nonpositive constraint value");

    std::vector<double> levels;
    if (p_ == 2.0) {
      levels.push_back(config_.epsilon_min);
    } else {
      double eps = config_.epsilon0 < 0.0 ? 0.1 * mesh_.diameter() : config_.epsilon0;
      eps = std::max(eps, config_.epsilon_min);
      while (eps > config_.epsilon_min) {
        levels.push_back(eps);
        eps /= config_.epsilon_decay;
      }
      levels.push_back(config_.epsilon_min);
    }

    int total = 0;
    for (std::size_t level = 0; level < levels.size(); ++level) {
      const bool last = level + 1 == levels.size();
      const double eps = levels[level];
      out.epsilon = eps;
      const double gtol = last ? config_.gradient_tolerance : config_.intermediate_tolerance;
      const int cap = last ? config_.max_iterations - total
                           : std::min(config_.max_level_iterations, config_.max_iterations - total);
      std::deque<double> window;
      double value = energy(u, eps);
      bool done = false;
      bool factored = false;
      for (int it = 0; it < cap; ++it) {
        ++total;
        const Step step = descent_step(u, value, eps, factored);
        factored = p_ == 2.0;
        out.gradient_norm = step.gradient_norm;
        const double scale = 1.0 + std::abs(step.value);
        window.push_back(step.value);
        if (static_cast<int>(window.size()) > config_.lambda_window) window.pop_front();
        const auto [wlo, whi] = std::minmax_element(window.begin(), window.end());
        const bool flat = static_cast<int>(window.size()) == config_.lambda_window &&
                          (*whi - *wlo) <= config_.lambda_tolerance * scale;
        const bool small = step.gradient_norm <= gtol * scale;
        value = step.value;
        out.trace.push_back(value);
        if (small && (flat || !last)) {
          done = true;
          break;
        }
        if (step.stalled) {
          // No decrease possible at machine precision.
          done = small || step.gradient_norm <= std::sqrt(gtol) * scale;
          break;
        }
      }
      if (last) out.converged = done;
      if (total >= config_.max_iterations) {
        out.converged = false;
        break;
      }
    }
    out.iterations = total;
    out.value = energy(u, out.epsilon);
    out.u = std::move(u);
    return out;
  }

  /// Scales u so that the constraint equals 1 after taking |u|. False if the
  /// constraint value is not positive.
  bool normalize(NodeField& u) const {
    for (auto& v : u.values) v = std::abs(v);
    for (std::size_t i = 0; i < u.size(); ++i)
      if (mesh_.is_boundary(i)) u[i] = 0.0;
    const double c = constraint_.value(u);
    if (!(c > 0.0) || !std::isfinite(c)) return false;
    const double s = std::pow(c, -1.0 / p_);
    for (auto& v : u.values) v *= s;
    return true;
  }

  const PowerConstraint& constraint() const { return constraint_; }

 private:
  struct Step {
    double value;
    double gradient_norm;
    bool stalled;
  };

  Vec2 cell_gradient(const NodeField& u, std::size_t c) const {
    Vec2 g = Vec2::Zero();
    const auto nodes = mesh_.cell_nodes(c);
    const auto basis = mesh_.basis_gradients(c);
    for (std::size_t k = 0; k < nodes.size(); ++k) g += u[nodes[k]] * basis[k];
    return g;
  }

  void build_pattern() {
    const auto dofs = mesh_.interior_nodes();
    const int n = static_cast<int>(dofs.size());
    const int nv = mesh_.cell_vertex_count();
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(mesh_.cell_count() * nv * nv + n);
    for (int i = 0; i < n; ++i) trip.emplace_back(i, i, 1.0);
    for (std::size_t c = 0; c < mesh_.cell_count(); ++c) {
      const auto nodes = mesh_.cell_nodes(c);
      for (int a = 0; a < nv; ++a)
        for (int b = 0; b < nv; ++b) {
          const int i = mesh_.dof_of(nodes[a]), j = mesh_.dof_of(nodes[b]);
          if (i >= 0 && j >= 0) trip.emplace_back(i, j, 1.0);
        }
    }
    matrix_.resize(n, n);
    matrix_.setFromTriplets(trip.begin(), trip.end());
    matrix_.makeCompressed();
    auto find = [&](int i, int j) {
      const int* outer = matrix_.outerIndexPtr();
      const int* inner = matrix_.innerIndexPtr();
      const int* begin = inner + outer[j];
      const int* end = inner + outer[j + 1];
      const int* it = std::lower_bound(begin, end, i);
      return static_cast<int>(it - inner);
    };
    slots_.assign(mesh_.cell_count() * nv * nv, -1);
    for (std::size_t c = 0; c < mesh_.cell_count(); ++c) {
      const auto nodes = mesh_.cell_nodes(c);
      for (int a = 0; a < nv; ++a)
        for (int b = 0; b < nv; ++b) {
          const int i = mesh_.dof_of(nodes[a]), j = mesh_.dof_of(nodes[b]);
          if (i >= 0 && j >= 0) slots_[(c * nv + a) * nv + b] = find(i, j);
        }
    }
    diagonal_slots_.resize(n);
    for (int i = 0; i < n; ++i) diagonal_slots_[i] = find(i, i);
    solver_.analyzePattern(matrix_);
  }

  // Hessian of the energy with the principal curvatures of each cell clamped
  // to [1e-3, 1e3] times their mean, so degenerate cells (grad u ~ 0) keep
  // the matrix definite and bounded.
  void assemble_preconditioner(const NodeField& u, const std::vector<Vec2>& grad, double eps) {
    const GradientDensity F{p_, eps};
    const int nv = mesh_.cell_vertex_count();
    const std::size_t nc = mesh_.cell_count();
    std::vector<double> along(nc), across(nc);
    double mean = 0.0;
    std::size_t finite = 0;
    for (std::size_t c = 0; c < nc; ++c) {
      const double xi2 = grad[c].squaredNorm();
      across[c] = F.slope(xi2);
      along[c] = across[c] + 2.0 * F.curvature(xi2) * xi2;
      if (xi2 == 0.0 && p_ != 2.0) along[c] = across[c] = std::numeric_limits<double>::infinity();
      const double top = std::max(along[c], across[c]);
      if (std::isfinite(top)) {
        mean += top;
        ++finite;
      }
    }
    mean = finite > 0 ? mean / static_cast<double>(finite) : 1.0;
    if (p_ != 2.0) {
      const double lo = 1e-3 * mean, hi = 1e3 * mean;
      for (std::size_t c = 0; c < nc; ++c) {
        along[c] = std::clamp(std::isfinite(along[c]) ? along[c] : hi, lo, hi);
        across[c] = std::clamp(std::isfinite(across[c]) ? across[c] : hi, lo, hi);
      }
    }
    double* values = matrix_.valuePtr();
    std::fill(values, values + matrix_.nonZeros(), 0.0);
    for (std::size_t c = 0; c < nc; ++c) {
      const auto basis = mesh_.basis_gradients(c);
      const double m = mesh_.cell_measure(c);
      const double n = grad[c].norm();
      const Vec2 dir = n > 0.0 ? Vec2(grad[c] / n) : Vec2::Zero();
      const double extra = along[c] - across[c];
      for (int a = 0; a < nv; ++a)
        for (int b = 0; b < nv; ++b) {
          const int s = slots_[(c * nv + a) * nv + b];
          if (s < 0) continue;
          values[s] += m * (across[c] * basis[a].dot(basis[b]) +
                            extra * basis[a].dot(dir) * basis[b].dot(dir));
        }
    }
    double umax = 0.0;
    for (double v : u.values) umax = std::max(umax, std::abs(v));
    const auto dofs = mesh_.interior_nodes();
    for (std::size_t d = 0; d < dofs.size(); ++d) {
      const double a = potential_[dofs[d]];
      if (a > 0.0) {
        const double ui = std::max(std::abs(u[dofs[d]]), 1e-3 * umax);
        values[diagonal_slots_[d]] +=
            p_ * (p_ - 1.0) * a * (p_ == 2.0 ? 1.0 : std::pow(ui, p_ - 2.0));
      }
    }
    solver_.factorize(matrix_);
    if (solver_.info() != Eigen::Success) throw SolverError("preconditioner factorization failed");
  }

  Step descent_step(NodeField& u, double value, double eps, bool reuse_factor) {
    const GradientDensity F{p_, eps};
    const auto dofs = mesh_.interior_nodes();
    const std::size_t n = dofs.size();
    const std::size_t nc = mesh_.cell_count();
    std::vector<Vec2> grad(nc);
    Eigen::VectorXd ge = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    for (std::size_t c = 0; c < nc; ++c) {
      const Vec2 g = cell_gradient(u, c);
      grad[c] = g;
      const double w = mesh_.cell_measure(c) * F.slope(g.squaredNorm());
      const auto nodes = mesh_.cell_nodes(c);
      const auto basis = mesh_.basis_gradients(c);
      for (std::size_t a = 0; a < nodes.size(); ++a) {
        const int i = mesh_.dof_of(nodes[a]);
        if (i >= 0) ge[i] += w * g.dot(basis[a]);
      }
    }
    Eigen::VectorXd gc(static_cast<Eigen::Index>(n));
    const double csum = constraint_.sum(u);
    double ue = 0.0, uc = 0.0;
    for (std::size_t d = 0; d < n; ++d) {
      const int node = dofs[d];
      const double ui = u[node];
      if (potential_[node] != 0.0 && ui != 0.0)
        ge[d] += p_ * potential_[node] * std::pow(std::abs(ui), p_ - 1.0) * (ui > 0 ? 1.0 : -1.0);
      gc[d] = constraint_.gradient(u, node, csum);
      ue += ui * ge[d];
      uc += ui * gc[d];
    }
    const double mu = ue / uc;
    const Eigen::VectorXd r = ge - mu * gc;

    if (!reuse_factor) assemble_preconditioner(u, grad, eps);
    Eigen::VectorXd dir = -solver_.solve(r);
    double slope = r.dot(dir);
    if (!(slope < 0.0)) {
      dir = -r;
      slope = -r.squaredNorm();
    }
    const double gnorm = std::sqrt(-slope);

    NodeField trial = u;
    double alpha = 1.0;
    for (int bt = 0; bt < config_.max_backtracks; ++bt, alpha *= config_.backtrack) {
      for (std::size_t d = 0; d < n; ++d) trial[dofs[d]] = u[dofs[d]] + alpha * dir[d];
      if (!normalize(trial)) continue;
      const double e = energy(trial, eps);
      if (e <= value + config_.armijo * alpha * slope) {
        u = trial;
        // A decrease lost in rounding counts as no progress.
        const bool flat = value - e <= 16.0 * std::numeric_limits<double>::epsilon() * std::abs(value);
        return {e, gnorm, flat};
      }
    }
    return {value, gnorm, true};
  }

  const Mesh& mesh_;
  double p_;
  std::vector<double> potential_;
  PowerConstraint constraint_;
  SolverConfig config_;
  Eigen::SparseMatrix<double> matrix_;
  std::vector<int> slots_;
  std::vector<int> diagonal_slots_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver_;
};

inline std::vector<double> lumped_mass(const Mesh& mesh) {
  return lumped_weights(mesh, CellField(mesh.cell_count(), 1.0));
}

}  // namespace detail

/// (int |grad u|^p + V |u|^p) / int g |u|^p with cellwise quadrature.
inline double rayleigh_quotient(const Mesh& mesh, const ProblemData& problem, const NodeField& u) {
  require_node_field(mesh, u);
  require_cell_field(mesh, problem.g);
  require_cell_field(mesh, problem.V);
  const auto grad = p1_gradient(mesh, u);
  const CellField w = cell_power_average(mesh, u, problem.p);
  double num = 0.0, den = 0.0;
  for (std::size_t c = 0; c < mesh.cell_count(); ++c) {
    const double m = mesh.cell_measure(c);
    num += m * (std::pow(grad[c].norm(), problem.p) + problem.V[c] * w[c]);
    den += m * problem.g[c] * w[c];
  }
  if (!(den > 0.0))
    throw std::invalid_argument("inadmissible test function: int g |u|^p must be positive");
  return num / den;
}

/// Euclidean norm over interior nodes of the weak residual
///   int |grad u|^{p-2} grad u . grad phi_i + (V - lambda g) |u|^{p-2} u phi_i
/// with the lumped treatment of the zero-order terms.
inline double pde_residual(const Mesh& mesh, const ProblemData& problem, double lambda,
                           const NodeField& u) {
  require_node_field(mesh, u);
  require_cell_field(mesh, problem.g);
  require_cell_field(mesh, problem.V);
  const double p = problem.p;
  const auto grad = p1_gradient(mesh, u);
  std::vector<double> res(mesh.node_count(), 0.0);
  for (std::size_t c = 0; c < mesh.cell_count(); ++c) {
    const double n = grad[c].norm();
    if (n == 0.0) continue;
    const double w = mesh.cell_measure(c) * std::pow(n, p - 2.0);
    const auto nodes = mesh.cell_nodes(c);
    const auto basis = mesh.basis_gradients(c);
    for (std::size_t a = 0; a < nodes.size(); ++a) res[nodes[a]] += w * grad[c].dot(basis[a]);
  }
  const auto a = lumped_weights(mesh, problem.V);
  const auto b = lumped_weights(mesh, problem.g);
  double s = 0.0;
  for (int i : mesh.interior_nodes()) {
    const double ui = u[i];
    if (ui != 0.0)
      res[i] += (a[i] - lambda * b[i]) * std::pow(std::abs(ui), p - 1.0) * (ui > 0 ? 1.0 : -1.0);
    s += res[i] * res[i];
  }
  return std::sqrt(s);
}

/// Start for the descent: 1 at interior nodes touching a cell with g > 0
/// (random positive values there when config.random_start).
inline NodeField initial_guess(const Mesh& mesh, const CellField& g, const SolverConfig& config) {
  NodeField u = zero_node_field(mesh);
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> dist(0.05, 1.0);
  for (std::size_t c = 0; c < mesh.cell_count(); ++c) {
    if (!(g[c] > 0.0)) continue;
    for (int v : mesh.cell_nodes(c))
      if (!mesh.is_boundary(v)) u[v] = 1.0;
  }
  if (config.random_start)
    for (auto& v : u.values)
      if (v > 0.0) v = dist(rng);
  return u;
}

/// Principal eigenpair. When `start` is given it replaces the default initial
/// guess (warm start). Non-convergence is reported through `converged`.
inline EigenResult solve_principal(const Mesh& mesh, const ProblemData& problem,
                                   const SolverConfig& config,
                                   const std::optional<NodeField>& start = std::nullopt) {
  validate_problem(mesh, problem);
  config.validate();
  if (problem.p < 2.0 && config.epsilon_min == 0.0)
    throw std::invalid_argument("eps = 0 is only allowed for p >= 2");
  const double p = problem.p;
  detail::PowerConstraint constraint{lumped_weights(mesh, problem.g), p, p};
  detail::QuotientMinimizer minimizer(mesh, p, lumped_weights(mesh, problem.V), constraint, config);

  NodeField u0 = start ? *start : initial_guess(mesh, problem.g, config);
  require_node_field(mesh, u0);
  if (!minimizer.normalize(u0)) {
    // Fall back to the nodes with positive lumped weight.
    u0 = zero_node_field(mesh);
    for (int i : mesh.interior_nodes())
      if (constraint.weights[i] > 0.0) u0[i] = 1.0;
    if (!minimizer.normalize(u0))
      throw SolverError("no initial function with int g u^p > 0 exists on this mesh");
  }

  auto out = minimizer.minimize(std::move(u0));
  EigenResult result;
  result.lambda = out.value;
  result.u = std::move(out.u);
  result.iterations = out.iterations;
  result.epsilon_final = out.epsilon;
  result.gradient_norm = out.gradient_norm;
  result.trace = std::move(out.trace);
  result.normalization_defect = std::abs(constraint.value(result.u) - 1.0);
  result.residual = pde_residual(mesh, problem, result.lambda, result.u);
  result.converged = out.converged &&
                     result.normalization_defect <= config.normalization_tolerance;
  return result;
}

/// Estimate of S_r = inf { int |grad u|^p : ||u||_{L^r} = 1 } over P1
/// functions with zero boundary values (a discrete upper bound). Pass
/// r = infinity (only when p > N) for the sup-norm constant, computed as the
/// smallest capacity min { int |grad u|^p : u(x_k) = 1 } over nodes x_k.
inline double estimate_sobolev_constant(const Mesh& mesh, double p, double r,
                                        const SolverConfig& config = {}) {
  const int n = mesh.dimension();
  if (!(p > 1.0)) throw std::invalid_argument("Sobolev constant needs p > 1");
  if (std::isinf(r)) {
    if (!(p > n)) throw std::invalid_argument("r = infinity is only admissible when p > N");
  } else {
    if (!(r >= 1.0)) throw std::invalid_argument("Sobolev exponent r must be >= 1");
    if (p < n && !(r < n * p / (n - p)))
      throw std::invalid_argument("Sobolev exponent r must be below the critical exponent Np/(N-p)");
  }
  const std::size_t dofs = mesh.interior_nodes().size();
  if (dofs == 0) throw std::invalid_argument("mesh has no interior nodes");

  NodeField start = zero_node_field(mesh);
  for (int i : mesh.interior_nodes()) start[i] = 1.0;

  if (!std::isinf(r)) {
    detail::PowerConstraint constraint{detail::lumped_mass(mesh), p, r};
    detail::QuotientMinimizer minimizer(mesh, p, {}, constraint, config);
    return minimizer.minimize(start).value;
  }

  // Sup-norm constant: the capacity of a node is a quotient against the
  // constraint |u_k|^p; descend over nodes from the one nearest the center.
  auto capacity = [&](int node) {
    detail::PowerConstraint constraint{std::vector<double>(mesh.node_count(), 0.0), p, p};
    constraint.weights[node] = 1.0;
    detail::QuotientMinimizer minimizer(mesh, p, {}, constraint, config);
    return minimizer.minimize(start).value;
  };
  const auto res = mesh.resolution();
  const Vec2 center = 0.5 * (mesh.lower() + mesh.upper());
  int best = mesh.interior_nodes().front();
  for (int i : mesh.interior_nodes())
    if ((mesh.node(i) - center).norm() < (mesh.node(best) - center).norm()) best = i;
  std::vector<double> seen(mesh.node_count(), std::numeric_limits<double>::quiet_NaN());
  auto value = [&](int node) {
    if (std::isnan(seen[node])) seen[node] = capacity(node);
    return seen[node];
  };
  const int stride = res[0] + 1;
  for (;;) {
    int next = best;
    const int bi = n == 1 ? best : best % stride;
    const int bj = n == 1 ? 0 : best / stride;
    for (int dj = (n == 1 ? 0 : -1); dj <= (n == 1 ? 0 : 1); ++dj)
      for (int di = -1; di <= 1; ++di) {
        const int i = bi + di, j = bj + dj;
        if (i < 0 || i > res[0] || j < 0 || (n == 2 && j > res[1])) continue;
        const int node = n == 1 ? i : j * stride + i;
        if (mesh.is_boundary(node)) continue;
        if (value(node) < value(next)) next = node;
      }
    if (next == best) break;
    best = next;
  }
  return value(best);
}

enum class H2Branch { norm_bound, lower_bound, fail };

inline const char* to_string(H2Branch b) {
  switch (b) {
    case H2Branch::norm_bound: return "norm-bound";
    case H2Branch::lower_bound: return "lower-bound";
    case H2Branch::fail: return "fail";
  }
  return "fail";
}

struct HypothesisReport {
  bool h1_ok = false;
  bool g_positive = false;
  H2Branch h2_branch = H2Branch::fail;
  double sobolev_p = std::numeric_limits<double>::quiet_NaN();
  double sobolev_pq = std::numeric_limits<double>::quiet_NaN();
  double pq_exponent = std::numeric_limits<double>::quiet_NaN();
  double v_minus_norm = 0.0;
  double v_min = 0.0;
  /// Coercivity margin: positive iff the H2 branch holds.
  double delta0 = 0.0;
  std::string message;

  bool passed() const { return h1_ok && h2_branch != H2Branch::fail; }
};

/// ||V^-||_{L^q}, summed in sorted order so that it is invariant under
/// permutations of the cells.
inline double negative_part_norm(const Mesh& mesh, const CellField& V, double q) {
  std::vector<double> neg;
  neg.reserve(V.size());
  for (double v : V.values) neg.push_back(v < 0.0 ? -v : 0.0);
  std::sort(neg.begin(), neg.end());
  const double m = mesh.cell_measure(0);
  double s = 0.0;
  for (double v : neg) s += v == 0.0 ? 0.0 : std::pow(v, q);
  return std::pow(s * m, 1.0 / q);
}

/// Evaluates H1 and both branches of H2 and the coercivity margin delta0:
/// 1 - ||V^-||_q / S_{pq'} for the norm bound, (min V + S_p) / S_p for the
/// lower bound.
inline HypothesisReport check_hypotheses(const Mesh& mesh, const ProblemData& problem,
                                         const SolverConfig& config = {}) {
  HypothesisReport rep;
  const int n = mesh.dimension();
  rep.h1_ok = satisfies_h1(problem.p, problem.q, n);
  if (problem.g.size() != mesh.cell_count() || problem.V.size() != mesh.cell_count()) {
    rep.message = "field sizes do not match the mesh";
    return rep;
  }
  rep.g_positive = has_positive_cell(problem.g);
  if (problem.q >= 1.0) rep.v_minus_norm = negative_part_norm(mesh, problem.V, problem.q);
  rep.v_min = *std::min_element(problem.V.values.begin(), problem.V.values.end());
  if (!rep.h1_ok) {
    rep.message = "H1 violated";
    return rep;
  }
  rep.pq_exponent = problem.p * conjugate_exponent(problem.q);
  rep.sobolev_p = estimate_sobolev_constant(mesh, problem.p, problem.p, config);
  rep.sobolev_pq = estimate_sobolev_constant(mesh, problem.p, rep.pq_exponent, config);
  const double norm_margin = 1.0 - rep.v_minus_norm / rep.sobolev_pq;
  const double lower_margin = (rep.v_min + rep.sobolev_p) / rep.sobolev_p;
  if (!rep.g_positive) {
    rep.h2_branch = H2Branch::fail;
    rep.delta0 = 0.0;
    rep.message = "H2 violated: g has no positive part";
  } else if (norm_margin > 0.0) {
    rep.h2_branch = H2Branch::norm_bound;
    rep.delta0 = norm_margin;
  } else if (lower_margin > 0.0) {
    rep.h2_branch = H2Branch::lower_bound;
    rep.delta0 = lower_margin;
  } else {
    rep.h2_branch = H2Branch::fail;
    rep.delta0 = std::max(norm_margin, lower_margin);
    rep.message = "H2 violated: potential too negative for both bounds";
  }
  return rep;
}

}  // namespace plap
