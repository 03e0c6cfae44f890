#pragma once

#include "plap/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace plap {

using ScalarFunction = std::function<double(const Vec2&)>;

/// One eigenproblem instance: exponent p, integrability exponent q of the
/// data, weight g and potential V as cell fields.
struct ProblemData {
  double p = 2.0;
  double q = 1.0;
  CellField g;
  CellField V;
};

/// Weight and potential given as functions of position; sampled at cell
/// centroids to obtain ProblemData. Needed wherever the data is transported
/// by a flow and re-sampled.
struct AnalyticProblem {
  double p = 2.0;
  double q = 1.0;
  ScalarFunction g;
  ScalarFunction V;

  ProblemData sample(const Mesh& mesh) const {
    return ProblemData{p, q, sample_cells(mesh, g), sample_cells(mesh, V)};
  }
};

/// Hypothesis H1 requires q > N/p when p <= N and q = 1 when p > N.
inline bool satisfies_h1(double p, double q, int dimension) {
  if (!(p > 1.0)) return false;
  if (p > dimension) return q == 1.0;
  return q > dimension / p;
}

/// A q satisfying H1: 1 when p > N, otherwise 2N/p.
inline double default_q(double p, int dimension) {
  return p > dimension ? 1.0 : 2.0 * dimension / p;
}

/// Conjugate exponent q' (infinite for q = 1).
inline double conjugate_exponent(double q) {
  return q == 1.0 ? std::numeric_limits<double>::infinity() : q / (q - 1.0);
}

inline bool has_positive_cell(const CellField& g) {
  return std::any_of(g.values.begin(), g.values.end(), [](double v) { return v > 0.0; });
}

/// Throws std::invalid_argument naming the violated condition.
inline void validate_problem(const Mesh& mesh, const ProblemData& problem) {
  const int n = mesh.dimension();
  if (!(problem.p > 1.0)) {
    std::ostringstream os;
    os << "hypothesis H1 violated: p = " << problem.p << " must be > 1";
    throw std::invalid_argument(os.str());
  }
  if (!satisfies_h1(problem.p, problem.q, n)) {
    std::ostringstream os;
    os << "hypothesis H1 violated: with p = " << problem.p << " and N = " << n << " need "
       << (problem.p > n ? "q = 1" : "q > N/p") << ", got q = " << problem.q;
    throw std::invalid_argument(os.str());
  }
  require_cell_field(mesh, problem.g);
  require_cell_field(mesh, problem.V);
  for (double v : problem.g.values)
    if (!std::isfinite(v)) throw std::invalid_argument("weight g has non-finite values");
  for (double v : problem.V.values)
    if (!std::isfinite(v)) throw std::invalid_argument("potential V has non-finite values");
  if (!has_positive_cell(problem.g))
    throw std::invalid_argument("hypothesis H2 violated: weight g has no positive cell");
}

}  // namespace plap
