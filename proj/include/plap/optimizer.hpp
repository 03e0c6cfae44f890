#pragma once

// Minimization of lambda(g, V) over a pair of rearrangement classes by
// alternating an eigen-solve with the two extremal rearrangements against
// the cell averages of u^p: g is sorted comonotone (maximizing int g u^p),
// V anti-comonotone (minimizing int V u^p). Each step weakly decreases the
// Rayleigh quotient of the current eigenfunction, so lambda_k is monotone.

#include "plap/derivative.hpp"
#include "plap/eigensolver.hpp"
#include "plap/flow.hpp"
#include "plap/rearrangement.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

namespace plap {

struct OptConfig {
  double p = 2.0;
  /// Negative: default_q(p, N).
  double q = -1.0;
  int max_iterations = 200;
  /// Starting assignment; defaults to the class values in cell order.
  std::optional<CellField> initial_g;
  std::optional<CellField> initial_V;
  /// Start each solve from the previous eigenfunction.
  bool warm_start = true;
  /// Run check_hypotheses on the starting assignment.
  bool check_start = false;
  /// Random divergence-free probes for the stationarity residual (2D only).
  int probe_count = 0;
  std::uint64_t probe_seed = 1;
};

struct OptState {
  int iteration = 0;
  CellField g;
  CellField V;
  double lambda = 0.0;
  NodeField u;
  std::vector<double> history;
  /// Cells changed by the rearrangement after each solve (g and V together).
  std::vector<std::size_t> swaps;
};

struct OptResult {
  OptState state;
  bool converged = false;
  double defect_g = 0.0;
  double defect_V = 0.0;
  /// max |derivative_hadamard| over the probes (NaN when none were used).
  double stationarity_residual = std::numeric_limits<double>::quiet_NaN();
  /// The same maximum normalized by hadamard_scale.
  double stationarity_relative = std::numeric_limits<double>::quiet_NaN();
  EigenResult eigen;
  double p = 2.0;
  double q = 1.0;

  ProblemData problem() const { return ProblemData{p, q, state.g, state.V}; }
};

struct OptimalityReport {
  double defect_g = 0.0;
  double defect_V = 0.0;
  double max_hadamard = 0.0;
  double max_relative = 0.0;
  std::vector<double> hadamard;
  bool passed = false;
};

/// Random stream-function bumps whose support stays one cell away from the
/// boundary.
inline std::vector<DeformationField> random_stream_probes(const Mesh& mesh, int count, std::uint64_t seed) {
  if (mesh.dimension() != 2) throw std::invalid_argument("divergence-free probes need a 2D mesh");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Vec2 lo = mesh.lower(), hi = mesh.upper();
  const Vec2 size = hi - lo;
  const double margin = 2.0 * mesh.cell_diameter();
  std::vector<DeformationField> out;
  for (int k = 0; k < count; ++k) {
    Vec2 radii, center;
    for (int d = 0; d < 2; ++d) {
      const double room = 0.5 * size[d] - margin;
      radii[d] = room * (0.3 + 0.6 * unit(rng));
      const double a = lo[d] + margin + radii[d], b = hi[d] - margin - radii[d];
      center[d] = a + (b - a) * unit(rng);
    }
    const double amplitude = (unit(rng) < 0.5 ? -1.0 : 1.0) * (0.5 + unit(rng));
    out.push_back(DeformationField::stream_bump(center, radii, amplitude));
  }
  return out;
}

inline OptimalityReport evaluate_optimality(const Mesh& mesh, const ProblemData& problem,
                                            const EigenResult& eig, const CellField& weight_sort_key,
                                            const std::vector<DeformationField>& probes,
                                            double tolerance) {
  OptimalityReport rep;
  rep.defect_g = comonotonicity_defect(problem.g, weight_sort_key, +1);
  rep.defect_V = comonotonicity_defect(problem.V, weight_sort_key, -1);
  for (const auto& field : probes) {
    if (!field.divergence_free()) throw std::invalid_argument("optimality probes must be divergence-free");
    const double h = derivative_hadamard(mesh, problem, eig, field);
    const double scale = hadamard_scale(mesh, problem, eig, field);
    rep.hadamard.push_back(h);
    rep.max_hadamard = std::max(rep.max_hadamard, std::abs(h));
    if (scale > 0.0) rep.max_relative = std::max(rep.max_relative, std::abs(h) / scale);
  }
  rep.passed = rep.defect_g == 0.0 && rep.defect_V == 0.0 && rep.max_relative <= tolerance;
  return rep;
}

/// Certificates for a converged optimization: both comonotonicity defects
/// must vanish and the relative Hadamard derivative stay below `tolerance`
/// for every probe.
inline OptimalityReport verify_optimality(const Mesh& mesh, const OptResult& result,
                                          const std::vector<DeformationField>& probes, double tolerance) {
  if (!result.converged) throw std::invalid_argument("verify_optimality needs a converged result");
  const ProblemData problem = result.problem();
  return evaluate_optimality(mesh, problem, result.eigen,
                             cell_power_average(mesh, result.eigen.u, problem.p), probes, tolerance);
}

inline OptResult alternate_minimize(const Mesh& mesh, const RearrangementClass& g_class,
                                    const RearrangementClass& V_class, const SolverConfig& solver,
                                    const OptConfig& config) {
  if (g_class.cell_count() != mesh.cell_count() || V_class.cell_count() != mesh.cell_count())
    throw std::invalid_argument("rearrangement classes do not match the mesh");
  if (!has_equal_cells(mesh)) throw std::invalid_argument("optimization needs an equal-measure mesh");
  if (config.max_iterations < 1) throw std::invalid_argument("max_iterations must be positive");

  OptResult result;
  result.p = config.p;
  result.q = config.q < 0.0 ? default_q(config.p, mesh.dimension()) : config.q;
  OptState& st = result.state;
  st.g = config.initial_g ? *config.initial_g : CellField(g_class.values);
  st.V = config.initial_V ? *config.initial_V : CellField(V_class.values);
  if (!is_rearrangement_of(st.g, g_class) || !is_rearrangement_of(st.V, V_class))
    throw std::invalid_argument("initial assignment is not in the rearrangement classes");
  if (config.check_start) {
    const auto rep = check_hypotheses(mesh, ProblemData{result.p, result.q, st.g, st.V}, solver);
    if (!rep.passed()) throw std::invalid_argument("initial assignment fails the hypotheses: " + rep.message);
  }

  std::optional<NodeField> warm;
  for (int k = 0; k < config.max_iterations; ++k) {
    const ProblemData problem{result.p, result.q, st.g, st.V};
    if (!has_positive_cell(problem.g))
      throw std::logic_error("rearranged weight lost its positive part");
    EigenResult eig = solve_principal(mesh, problem, solver, warm);
    if (!eig.converged) throw SolverError("eigen-solve did not converge at iteration " + std::to_string(k));
    st.iteration = k;
    st.lambda = eig.lambda;
    st.history.push_back(eig.lambda);

    const CellField w = cell_power_average(mesh, eig.u, result.p);
    CellField g_next = extremal_rearrangement(g_class, w, Sense::max);
    CellField V_next = extremal_rearrangement(V_class, w, Sense::min);
    const std::size_t changed = count_changes(g_next, st.g) + count_changes(V_next, st.V);
    st.swaps.push_back(changed);
    st.u = eig.u;
    if (config.warm_start) warm = eig.u;
    result.eigen = std::move(eig);
    if (changed == 0) {
      result.converged = true;
      break;
    }
    st.g = std::move(g_next);
    st.V = std::move(V_next);
  }

  const CellField w = cell_power_average(mesh, st.u, result.p);
  result.defect_g = comonotonicity_defect(st.g, w, +1);
  result.defect_V = comonotonicity_defect(st.V, w, -1);
  if (config.probe_count > 0 && mesh.dimension() == 2 && result.converged) {
    const auto probes = random_stream_probes(mesh, config.probe_count, config.probe_seed);
    const auto rep = evaluate_optimality(mesh, result.problem(), result.eigen, w, probes,
                                         std::numeric_limits<double>::infinity());
    result.stationarity_residual = rep.max_hadamard;
    result.stationarity_relative = rep.max_relative;
  }
  return result;
}

}  // namespace plap
