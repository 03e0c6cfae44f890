#pragma once

// JSON records and CSV tables for results.

#include "plap/derivative.hpp"
#include "plap/eigensolver.hpp"
#include "plap/optimizer.hpp"

#include <json.hpp>

#include <cmath>
#include <ostream>

namespace plap {

using json = nlohmann::json;

namespace detail {
inline json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
}  // namespace detail

inline json to_json(const EigenResult& r) {
  return json{{"lambda", detail::number(r.lambda)},
              {"residual", detail::number(r.residual)},
              {"iterations", r.iterations},
              {"epsilon_final", detail::number(r.epsilon_final)},
              {"normalization_defect", detail::number(r.normalization_defect)},
              {"gradient_norm", detail::number(r.gradient_norm)},
              {"converged", r.converged}};
}

inline json to_json(const HypothesisReport& r) {
  return json{{"h1_ok", r.h1_ok},
              {"g_positive", r.g_positive},
              {"h2_branch", to_string(r.h2_branch)},
              {"sobolev_p", detail::number(r.sobolev_p)},
              {"sobolev_pq", detail::number(r.sobolev_pq)},
              {"pq_exponent", std::isinf(r.pq_exponent) ? json("inf") : detail::number(r.pq_exponent)},
              {"v_minus_norm", detail::number(r.v_minus_norm)},
              {"v_min", detail::number(r.v_min)},
              {"delta0", detail::number(r.delta0)},
              {"passed", r.passed()},
              {"message", r.message}};
}

inline json to_json(const DerivativeReport& r) {
  return json{{"value_general", detail::number(r.value_general)},
              {"value_divfree", detail::number(r.value_divfree)},
              {"value_hadamard", detail::number(r.value_hadamard)},
              {"fd_value", detail::number(r.fd_value)},
              {"fd_richardson", detail::number(r.fd_richardson)},
              {"fd_forward", detail::number(r.fd_forward)},
              {"fd_backward", detail::number(r.fd_backward)},
              {"one_sided_mismatch", r.one_sided_mismatch},
              {"t_used", detail::number(r.t_used)},
              {"lambda0", detail::number(r.lambda0)},
              {"cross_defects",
               {{"general_fd", detail::number(r.defect_general_fd)},
                {"general_divfree", detail::number(r.defect_general_divfree)},
                {"divfree_hadamard", detail::number(r.defect_divfree_hadamard)}}},
              {"converged", r.converged}};
}

inline json to_json(const OptResult& r) {
  return json{{"lambda", detail::number(r.state.lambda)},
              {"iterations", r.state.iteration + 1},
              {"converged", r.converged},
              {"defect_g", detail::number(r.defect_g)},
              {"defect_V", detail::number(r.defect_V)},
              {"stationarity_residual", detail::number(r.stationarity_residual)},
              {"stationarity_relative", detail::number(r.stationarity_relative)},
              {"history", r.state.history},
              {"eigen", to_json(r.eigen)}};
}

inline void write_history_csv(std::ostream& os, const OptState& st) {
  os.precision(17);
  os << "k,lambda,swaps\n";
  for (std::size_t k = 0; k < st.history.size(); ++k)
    os << k << ',' << st.history[k] << ',' << (k < st.swaps.size() ? st.swaps[k] : 0) << '\n';
}

}  // namespace plap
