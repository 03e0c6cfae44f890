#pragma once

// Derivative of lambda(t) = lambda(g o phi_t^{-1}, V o phi_t^{-1}) at t = 0:
//
//   general:   int (|grad u|^p + V |u|^p) div W - p int |grad u|^{p-2} grad u . W' grad u
//              - lambda int g |u|^p div W
//   div-free:  -p int |grad u|^{p-2} grad u . W' grad u
//   Hadamard:  p int (V - lambda g) |u|^{p-2} u grad u . W           (div W = 0)
//
// and a central finite-difference oracle built on fresh eigen-solves.

#include "plap/eigensolver.hpp"
#include "plap/flow.hpp"
#include "plap/mesh.hpp"
#include "plap/problem.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>
#include <variant>
#include <vector>

namespace plap {

namespace detail {

inline void require_converged(const EigenResult& eig) {
  if (!eig.converged) throw std::invalid_argument("eigen result is not converged");
}

/// |grad u|^{p-2} grad u . W'(x_c) grad u on one cell.
inline double shear_term(const Vec2& grad, double p, const Mat2& jac) {
  const double n2 = grad.squaredNorm();
  if (n2 == 0.0) return 0.0;
  const double q = grad.dot(jac * grad);
  return p == 2.0 ? q : std::pow(n2, 0.5 * (p - 2.0)) * q;
}

}  // namespace detail

inline double derivative_general(const Mesh& mesh, const ProblemData& problem, const EigenResult& eig,
                                 const DeformationField& field) {
  detail::require_converged(eig);
  field.require_support_inside(mesh);
  const double p = problem.p;
  const auto grad = p1_gradient(mesh, eig.u);
  const CellField w = cell_power_average(mesh, eig.u, p);
  double total = 0.0;
  for (std::size_t c = 0; c < mesh.cell_count(); ++c) {
    const Vec2& x = mesh.centroid(c);
    const double div = field.divergence(x);
    const double energy = std::pow(grad[c].norm(), p) + problem.V[c] * w[c];
    const double term = energy * div - p * detail::shear_term(grad[c], p, field.jacobian(x)) -
                        eig.lambda * problem.g[c] * w[c] * div;
    total += mesh.cell_measure(c) * term;
  }
  return total;
}

inline double derivative_divfree(const Mesh& mesh, const ProblemData& problem, const EigenResult& eig,
                                 const DeformationField& field) {
  detail::require_converged(eig);
  if (!field.divergence_free()) throw std::invalid_argument("field is not divergence-free");
  field.require_support_inside(mesh);
  const double p = problem.p;
  const auto grad = p1_gradient(mesh, eig.u);
  double total = 0.0;
  for (std::size_t c = 0; c < mesh.cell_count(); ++c) {
    const double term = -p * detail::shear_term(grad[c], p, field.jacobian(mesh.centroid(c)));
    total += mesh.cell_measure(c) * term;
  }
  return total;
}

inline double derivative_hadamard(const Mesh& mesh, const ProblemData& problem, const EigenResult& eig,
                                  const DeformationField& field) {
  detail::require_converged(eig);
  if (!field.divergence_free()) throw std::invalid_argument("field is not divergence-free");
  field.require_support_inside(mesh);
  const double p = problem.p;
  const auto grad = p1_gradient(mesh, eig.u);
  const CellField s = cell_signed_power_average(mesh, eig.u, p);
  double total = 0.0;
  for (std::size_t c = 0; c < mesh.cell_count(); ++c) {
    const double coeff = problem.V[c] - eig.lambda * problem.g[c];
    total += mesh.cell_measure(c) * coeff * s[c] * grad[c].dot(field(mesh.centroid(c)));
  }
  return p * total;
}

/// Scale of the Hadamard integrand, p int |V - lambda g| |u|^{p-1} |grad u| |W|;
/// |derivative_hadamard| / hadamard_scale lies in [0, 1].
inline double hadamard_scale(const Mesh& mesh, const ProblemData& problem, const EigenResult& eig,
                             const DeformationField& field) {
  const double p = problem.p;
  const auto grad = p1_gradient(mesh, eig.u);
  const CellField s = cell_signed_power_average(mesh, eig.u, p);
  double total = 0.0;
  for (std::size_t c = 0; c < mesh.cell_count(); ++c) {
    const double coeff = std::abs(problem.V[c] - eig.lambda * problem.g[c]);
    total += mesh.cell_measure(c) * coeff * std::abs(s[c]) * grad[c].norm() *
             field(mesh.centroid(c)).norm();
  }
  return p * total;
}

/// Data for the perturbed problems: either analytic functions (re-sampled at
/// the preimages of centroids) or cell fields (transported by point location).
using TransportableProblem = std::variant<AnalyticProblem, ProblemData>;

inline ProblemData transported_problem(const Mesh& mesh, const TransportableProblem& problem,
                                       const DeformationField& field, double t, const FlowConfig& flow) {
  if (const auto* a = std::get_if<AnalyticProblem>(&problem))
    return ProblemData{a->p, a->q, transport_function(a->g, field, t, mesh, flow),
                       transport_function(a->V, field, t, mesh, flow)};
  const auto& d = std::get<ProblemData>(problem);
  return ProblemData{d.p, d.q, transport_field(d.g, field, t, mesh, flow),
                     transport_field(d.V, field, t, mesh, flow)};
}

inline ProblemData base_problem(const Mesh& mesh, const TransportableProblem& problem) {
  if (const auto* a = std::get_if<AnalyticProblem>(&problem)) return a->sample(mesh);
  return std::get<ProblemData>(problem);
}

struct FiniteDifference {
  double central = 0.0;
  double forward = std::numeric_limits<double>::quiet_NaN();
  double backward = std::numeric_limits<double>::quiet_NaN();
  double lambda_plus = 0.0;
  double lambda_minus = 0.0;
  bool converged = true;
};

/// Central difference (lambda(t) - lambda(-t)) / 2t from two fresh solves,
/// warm-started from `start` when given. With `lambda0` the one-sided
/// quotients are filled in as well.
inline FiniteDifference fd_derivative(const Mesh& mesh, const TransportableProblem& problem,
                                      const DeformationField& field, double t, const SolverConfig& config,
                                      const FlowConfig& flow = {},
                                      const std::optional<NodeField>& start = std::nullopt,
                                      std::optional<double> lambda0 = std::nullopt) {
  if (!(t > 0.0)) throw std::invalid_argument("finite-difference step must be positive");
  field.require_support_inside(mesh);
  SolverConfig cfg = config;
  if (start) cfg.epsilon0 = cfg.epsilon_min;
  FiniteDifference fd;
  if (field.is_zero()) {
    // The flow is the identity, so every perturbed problem is the base one.
    double base = 0.0;
    if (lambda0) {
      base = *lambda0;
    } else {
      const EigenResult eig = solve_principal(mesh, base_problem(mesh, problem), cfg, start);
      base = eig.lambda;
      fd.converged = eig.converged;
    }
    fd.lambda_plus = fd.lambda_minus = base;
    fd.central = 0.0;
    if (lambda0) fd.forward = fd.backward = 0.0;
    return fd;
  }
  const EigenResult plus = solve_principal(mesh, transported_problem(mesh, problem, field, t, flow), cfg, start);
  const EigenResult minus = solve_principal(mesh, transported_problem(mesh, problem, field, -t, flow), cfg, start);
  fd.converged = plus.converged && minus.converged;
  fd.lambda_plus = plus.lambda;
  fd.lambda_minus = minus.lambda;
  fd.central = (plus.lambda - minus.lambda) / (2.0 * t);
  if (lambda0) {
    fd.forward = (plus.lambda - *lambda0) / t;
    fd.backward = (*lambda0 - minus.lambda) / t;
  }
  return fd;
}

inline double fd_derivative_oracle(const Mesh& mesh, const TransportableProblem& problem,
                                   const DeformationField& field, double t, const SolverConfig& config,
                                   const FlowConfig& flow = {}) {
  const FiniteDifference fd = fd_derivative(mesh, problem, field, t, config, flow);
  if (!fd.converged) throw SolverError("perturbed eigenproblem did not converge");
  return fd.central;
}

struct DerivativeReport {
  double value_general = 0.0;
  double value_divfree = std::numeric_limits<double>::quiet_NaN();
  double value_hadamard = std::numeric_limits<double>::quiet_NaN();
  double fd_value = 0.0;
  /// Richardson combination (4 D(t/2) - D(t)) / 3 when requested.
  double fd_richardson = std::numeric_limits<double>::quiet_NaN();
  double fd_forward = 0.0;
  double fd_backward = 0.0;
  /// One-sided quotients disagree by more than the tolerance.
  bool one_sided_mismatch = false;
  double t_used = 0.0;
  double lambda0 = 0.0;
  /// |general - fd|, |general - divfree|, |divfree - hadamard| (NaN when undefined).
  double defect_general_fd = 0.0;
  double defect_general_divfree = std::numeric_limits<double>::quiet_NaN();
  double defect_divfree_hadamard = std::numeric_limits<double>::quiet_NaN();
  bool converged = true;
  /// (t, lambda(t)) for every solve, ordered by t.
  std::vector<std::pair<double, double>> samples;
};

struct DerivativeOptions {
  double t = 1e-3;
  bool richardson = false;
  /// Relative tolerance (of the central value, floored at one) for the
  /// one-sided comparison. With richardson the one-sided quotients are
  /// extrapolated first, which removes their O(t) disagreement.
  double one_sided_tolerance = 0.05;
};

/// Solves the base problem, evaluates every applicable formula and the
/// finite-difference oracle.
inline DerivativeReport derivative_report(const Mesh& mesh, const TransportableProblem& problem,
                                          const DeformationField& field, const SolverConfig& config,
                                          const FlowConfig& flow = {}, const DerivativeOptions& opts = {}) {
  const ProblemData base = base_problem(mesh, problem);
  const EigenResult eig = solve_principal(mesh, base, config);
  DerivativeReport rep;
  rep.converged = eig.converged;
  rep.lambda0 = eig.lambda;
  rep.t_used = opts.t;
  if (!eig.converged) return rep;
  rep.value_general = derivative_general(mesh, base, eig, field);
  if (field.divergence_free()) {
    rep.value_divfree = derivative_divfree(mesh, base, eig, field);
    rep.value_hadamard = derivative_hadamard(mesh, base, eig, field);
    rep.defect_general_divfree = std::abs(rep.value_general - rep.value_divfree);
    rep.defect_divfree_hadamard = std::abs(rep.value_divfree - rep.value_hadamard);
  }
  const FiniteDifference fd = fd_derivative(mesh, problem, field, opts.t, config, flow, eig.u, eig.lambda);
  rep.converged = rep.converged && fd.converged;
  rep.fd_value = fd.central;
  rep.fd_forward = fd.forward;
  rep.fd_backward = fd.backward;
  rep.samples = {{-opts.t, fd.lambda_minus}, {0.0, eig.lambda}, {opts.t, fd.lambda_plus}};
  double forward = fd.forward, backward = fd.backward;
  if (opts.richardson) {
    const FiniteDifference half =
        fd_derivative(mesh, problem, field, 0.5 * opts.t, config, flow, eig.u, eig.lambda);
    rep.converged = rep.converged && half.converged;
    rep.fd_richardson = (4.0 * half.central - fd.central) / 3.0;
    forward = 2.0 * half.forward - fd.forward;
    backward = 2.0 * half.backward - fd.backward;
    rep.samples.insert(rep.samples.begin() + 1, {-0.5 * opts.t, half.lambda_minus});
    rep.samples.insert(rep.samples.begin() + 3, {0.5 * opts.t, half.lambda_plus});
  }
  rep.one_sided_mismatch =
      std::abs(forward - backward) > opts.one_sided_tolerance * std::max(1.0, std::abs(fd.central));
  rep.defect_general_fd = std::abs(rep.value_general - rep.fd_value);
  return rep;
}

}  // namespace plap
