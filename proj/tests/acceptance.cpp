// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include "plap/derivative.hpp"
#include "plap/eigensolver.hpp"
#include "plap/flow.hpp"
#include "plap/optimizer.hpp"
#include "plap/rearrangement.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace plap;
using std::numbers::pi;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

int failures = 0;

void criterion(int id, const char* title, const std::function<void(Outcome&)>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome out;
  out.detail.precision(4);
  try {
    body(out);
  } catch (const std::exception& e) {
    out.pass = false;
    out.detail << " [exception: " << e.what() << "]";
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!out.pass) ++failures;
  std::printf("criterion %2d %s: %s (%.1f s)%s\n", id, title, out.pass ? "PASS" : "FAIL", secs,
              out.detail.str().c_str());
  std::fflush(stdout);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ProblemData uniform(const Mesh& m, double p, double g = 1.0, double V = 0.0) {
  return ProblemData{p, default_q(p, m.dimension()), CellField(m.cell_count(), g), CellField(m.cell_count(), V)};
}

AnalyticProblem bumpy(int dim, double p) {
  if (dim == 2)
    return AnalyticProblem{p, default_q(p, 2),
                           [](const Vec2& x) { return 1.0 + 0.5 * std::exp(-(x - Vec2(0.35, 0.6)).squaredNorm() / 0.05); },
                           [](const Vec2& x) { return 3.0 + 2.0 * std::sin(2 * pi * x.x()) * x.y(); }};
  return AnalyticProblem{p, default_q(p, 1),
                         [](const Vec2& x) { return 1.0 + 0.5 * std::exp(-std::pow(x.x() - 0.35, 2) / 0.02); },
                         [](const Vec2& x) { return 5.0 * x.x() * x.x(); }};
}

std::vector<DeformationField> divfree_library() {
  return {DeformationField::stream_bump({0.45, 0.55}, {0.3, 0.35}, 0.25),
          DeformationField::rotation({0.5, 0.5}, 0.15, 0.4),
          DeformationField::stream_bump({0.5, 0.4}, {0.2, 0.3}, -0.1) +
              DeformationField::stream_bump({0.6, 0.6}, {0.25, 0.2}, 0.05)};
}

// The six fields of the derivative study: two divergence-free and two general
// fields in 2D, two general fields in 1D.
std::vector<DeformationField> derivative_library() {
  return {DeformationField::stream_bump({0.45, 0.55}, {0.3, 0.35}, 0.25),
          DeformationField::rotation({0.5, 0.5}, 0.15, 0.4),
          DeformationField::translation_bump(2, {0.5, 0.5}, {0.35, 0.35}, {1.0, 0.5}),
          DeformationField::radial_bump(2, {0.45, 0.5}, 0.35, 1.0),
          DeformationField::translation_bump(1, {0.5, 0.0}, {0.35, 0.35}, {1.0, 0.0}),
          DeformationField::radial_bump(1, {0.45, 0.0}, 0.35, 1.0)};
}

std::string label(const DeformationField& f, double p) {
  std::ostringstream s;
  s << f.name() << "/" << f.dimension() << "D/p=" << p;
  return s.str();
}

double closed_form(double p) { return (p - 1.0) * std::pow(2.0 * pi / (p * std::sin(pi / p)), p); }

bool monotone(const std::vector<double>& h, double tol) {
  for (std::size_t k = 1; k < h.size(); ++k)
    if (h[k] > h[k - 1] + tol) return false;
  return true;
}

void check_opt_run(Outcome& o, const OptResult& r, const std::string& name) {
  o.require(r.converged, name + " converged");
  o.require(static_cast<int>(r.state.history.size()) <= 200, name + " iterations <= 200");
  o.require(!r.state.swaps.empty() && r.state.swaps.back() == 0, name + " zero-swap fixed point");
  o.require(monotone(r.state.history, 1e-10), name + " monotone history");
  o.require(r.defect_g == 0.0 && r.defect_V == 0.0, name + " comonotonicity defects zero");
}

}  // namespace

int main() {
  criterion(1, "analytic Dirichlet eigenvalues", [](Outcome& o) {
    auto t0 = std::chrono::steady_clock::now();
    const Mesh m1 = unit_interval(256);
    const EigenResult r1 = solve_principal(m1, uniform(m1, 2.0), {});
    const double s1 = seconds_since(t0);
    t0 = std::chrono::steady_clock::now();
    const Mesh m2 = unit_square(64);
    const EigenResult r2 = solve_principal(m2, uniform(m2, 2.0), {});
    const double s2 = seconds_since(t0);
    const double e1 = std::abs(r1.lambda / (pi * pi) - 1.0), e2 = std::abs(r2.lambda / (2 * pi * pi) - 1.0);
    o.detail << " 1D rel " << e1 << " in " << s1 << " s; 2D rel " << e2 << " in " << s2 << " s";
    o.require(r1.converged && r2.converged, "converged");
    o.require(e1 <= 0.01 && s1 < 5.0, "1D within 1% in < 5 s");
    o.require(e2 <= 0.02 && s2 < 60.0, "2D within 2% in < 60 s");
  });

  criterion(2, "p-Laplacian closed form in 1D", [](Outcome& o) {
    for (double p : {1.5, 3.0}) {
      const double exact = closed_form(p);
      const Mesh m = unit_interval(256), dense = unit_interval(1024);
      const EigenResult r = solve_principal(m, uniform(m, p), {});
      const EigenResult d = solve_principal(dense, uniform(dense, p), {});
      const double e = std::abs(r.lambda / exact - 1.0), ed = std::abs(d.lambda / exact - 1.0);
      o.detail << " p=" << p << " rel " << e << " (dense " << ed << ")";
      o.require(r.converged && d.converged, "converged");
      o.require(e <= 0.01, "within 1% of the closed form");
      o.require(ed <= 0.01 && ed < e, "dense solve closer to the closed form");
    }
  });

  criterion(3, "weight scaling and potential shift", [](Outcome& o) {
    double worst_scale = 0.0, worst_shift = 0.0;
    for (int dim : {1, 2}) {
      const Mesh m = dim == 1 ? unit_interval(128) : unit_square(32);
      for (double p : {1.5, 2.0, 3.0}) {
        const ProblemData base = bumpy(dim, p).sample(m);
        const EigenResult r = solve_principal(m, base, {});
        o.require(r.converged, "base converged");
        for (double c : {0.5, 2.0}) {
          ProblemData scaled = base;
          for (double& v : scaled.g.values) v *= c;
          const EigenResult s = solve_principal(m, scaled, {});
          worst_scale = std::max(worst_scale, std::abs(s.lambda * c / r.lambda - 1.0));
        }
        ProblemData unit_weight = base;
        unit_weight.g = CellField(m.cell_count(), 1.0);
        const double l0 = solve_principal(m, unit_weight, {}).lambda;
        for (double c : {0.75, 4.0}) {
          ProblemData shifted = unit_weight;
          for (double& v : shifted.V.values) v += c;
          const double l1 = solve_principal(m, shifted, {}).lambda;
          worst_shift = std::max(worst_shift, std::abs(l1 - l0 - c) / (1.0 + l0));
        }
      }
    }
    o.detail << " scaling rel " << worst_scale << ", shift rel " << worst_shift;
    o.require(worst_scale <= 1e-8, "lambda(cg,V) = lambda(g,V)/c to 1e-8");
    // Solver tolerance: gradient tolerance 1e-8 (1 + lambda) enters lambda quadratically,
    // the lambda window to 1e-10 (1 + lambda).
    o.require(worst_shift <= 1e-8, "lambda(1,V+c) = lambda(1,V) + c");
  });

  criterion(4, "sorting matches exhaustive permutation search", [](Outcome& o) {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(2024);
    int mismatches = 0;
    for (int inst = 0; inst < 50; ++inst) {
      const int n = 1 + static_cast<int>(rng() % 8);
      std::uniform_int_distribution<int> small(0, 4);
      std::vector<double> vals(n), ref(n), meas(n, 1.0 / n);
      for (auto& v : vals) v = small(rng);
      for (auto& v : ref) v = small(rng);
      const RearrangementClass cls = class_of(CellField(vals), meas);
      for (Sense sense : {Sense::max, Sense::min}) {
        const CellField sorted = extremal_rearrangement(cls, CellField(ref), sense);
        double got = 0.0;
        for (int i = 0; i < n; ++i) got += sorted[i] * ref[i];
        std::vector<double> perm = cls.values;
        double best = sense == Sense::max ? -1e300 : 1e300;
        do {
          double s = 0.0;
          for (int i = 0; i < n; ++i) s += perm[i] * ref[i];
          best = sense == Sense::max ? std::max(best, s) : std::min(best, s);
        } while (std::next_permutation(perm.begin(), perm.end()));
        if (got != best || !is_rearrangement_of(sorted, cls)) ++mismatches;
      }
    }
    const double secs = seconds_since(t0);
    o.detail << " 100 searches, " << mismatches << " mismatches, " << secs << " s";
    o.require(mismatches == 0, "exact match");
    o.require(secs < 1.0, "runtime < 1 s");
  });

  criterion(5, "derivative formula vs central finite differences", [](Outcome& o) {
    double worst_rel = 0.0, worst_ratio = std::numeric_limits<double>::infinity();
    std::string worst_case;
    for (double p : {1.5, 2.0, 3.0})
      for (const auto& f : derivative_library()) {
        const Mesh m = f.dimension() == 2 ? unit_square(128) : unit_interval(128);
        const AnalyticProblem a = bumpy(f.dimension(), p);
        const ProblemData d = a.sample(m);
        const EigenResult eig = solve_principal(m, d, {});
        o.require(eig.converged, label(f, p) + " base converged");
        const double formula = derivative_general(m, d, eig, f);
        const FiniteDifference fd = fd_derivative(m, a, f, 1e-3, {}, {}, eig.u);
        o.require(fd.converged, label(f, p) + " perturbed converged");
        const double rel = std::abs(formula - fd.central) / std::abs(formula);
        if (rel > worst_rel) {
          worst_rel = rel;
          worst_case = label(f, p);
        }
        o.require(rel <= 0.05, label(f, p) + " within 5%");
        // Self-convergence of the central quotient: |D(t) - D(t/2)| must
        // drop by 3x per halving of t until it reaches the noise floor.
        double prev = std::numeric_limits<double>::quiet_NaN(), prev_defect = prev;
        for (double t : {0.04, 0.02, 0.01, 0.005}) {
          const FiniteDifference q = fd_derivative(m, a, f, t, {}, {}, eig.u);
          o.require(q.converged, label(f, p) + " halving solves converged");
          if (!std::isnan(prev)) {
            const double defect = std::abs(q.central - prev);
            if (!std::isnan(prev_defect) && prev_defect > 1e-7) {
              const double ratio = prev_defect / std::max(defect, 1e-300);
              worst_ratio = std::min(worst_ratio, ratio);
              o.require(ratio >= 3.0 || defect <= 1e-7, label(f, p) + " defect drops 3x");
            }
            prev_defect = defect;
          }
          prev = q.central;
        }
      }
    o.detail << " worst rel " << worst_rel << " (" << worst_case << "), worst halving ratio " << worst_ratio;
  });

  criterion(6, "formula consistency and refinement-calibrated Hadamard gap", [](Outcome& o) {
    double worst_ratio = 0.0;
    for (double p : {1.5, 2.0, 3.0})
      for (const auto& f : divfree_library()) {
        std::vector<double> gaps, values;
        for (int n : {32, 64, 128}) {
          const Mesh m = unit_square(n);
          const ProblemData d = bumpy(2, p).sample(m);
          const EigenResult eig = solve_principal(m, d, {});
          o.require(eig.converged, label(f, p) + " converged");
          const double dv = derivative_divfree(m, d, eig, f);
          o.require(derivative_general(m, d, eig, f) == dv, label(f, p) + " general == divfree");
          gaps.push_back(std::abs(derivative_hadamard(m, d, eig, f) - dv));
          values.push_back(dv);
        }
        // C h calibrated on the two coarse meshes, applied on the finest.
        const double C = std::max(gaps[0] * 32.0, gaps[1] * 64.0);
        const double tol = std::max(1e-3 * std::abs(values[2]), C / 128.0);
        worst_ratio = std::max(worst_ratio, gaps[2] / tol);
        o.require(gaps[1] < gaps[0] && gaps[2] < gaps[1], label(f, p) + " gap shrinks under refinement");
        o.require(gaps[2] <= tol, label(f, p) + " gap within calibrated tolerance");
      }
    o.detail << " worst gap/tolerance at h=1/128: " << worst_ratio;
  });

  criterion(7, "alternating optimization", [](Outcome& o) {
    // 4 cells, g in {1,1,2,2}, V in {0,0,1,1}, p = 2: exhaustive over 6 x 6.
    const Mesh m = unit_interval(4);
    const std::vector<double> g0{1, 1, 2, 2}, V0{0, 0, 1, 1};
    const auto gc = class_of(CellField(g0), m), Vc = class_of(CellField(V0), m);
    auto all = [](std::vector<double> v) {
      std::vector<CellField> out;
      std::sort(v.begin(), v.end());
      do out.emplace_back(v);
      while (std::next_permutation(v.begin(), v.end()));
      return out;
    };
    double best = std::numeric_limits<double>::infinity();
    double lo = best, hi = -best;
    for (const auto& g : all(g0))
      for (const auto& V : all(V0)) {
        best = std::min(best, solve_principal(m, {2.0, 1.0, g, V}, {}).lambda);
        OptConfig cfg;
        cfg.initial_g = g;
        cfg.initial_V = V;
        const OptResult r = alternate_minimize(m, gc, Vc, {}, cfg);
        check_opt_run(o, r, "4-cell");
        lo = std::min(lo, r.state.lambda);
        hi = std::max(hi, r.state.lambda);
      }
    const OptResult def = alternate_minimize(m, gc, Vc, {}, OptConfig{});
    check_opt_run(o, def, "4-cell default start");
    o.detail << " brute force " << best << ", optimizer " << def.state.lambda << " (spread over 36 starts "
             << hi - lo << ")";
    o.require(std::abs(def.state.lambda - best) <= 1e-8 * best, "default start matches enumeration");
    o.require(std::abs(lo - best) <= 1e-8 * best, "best start matches enumeration");
    o.require(hi - lo <= 1e-6 * best, "all starts reach the same lambda");

    const Mesh line = unit_interval(64);
    const CellField g1 = sample_cells(line, [](const Vec2& x) { return x.x() < 0.25 ? 4.0 : 1.0; });
    const CellField V1 = sample_cells(line, [](const Vec2& x) { return x.x() < 0.5 ? 3.0 : 0.0; });
    for (double p : {1.5, 2.0, 3.0}) {
      OptConfig cfg;
      cfg.p = p;
      cfg.initial_g = g1;
      cfg.initial_V = V1;
      check_opt_run(o, alternate_minimize(line, class_of(g1, line), class_of(V1, line), {}, cfg), "1D 64 cells");
    }
    for (int n : {16, 32}) {
      const Mesh sq = unit_square(n);
      const CellField g2 = sample_cells(sq, [](const Vec2& x) { return x.x() < 0.3 ? 3.0 : 1.0; });
      const CellField V2 = sample_cells(sq, [](const Vec2& x) { return x.y() > 0.7 ? 5.0 : 0.0; });
      for (double p : {1.5, 2.0, 3.0}) {
        OptConfig cfg;
        cfg.p = p;
        cfg.initial_g = g2;
        cfg.initial_V = V2;
        check_opt_run(o, alternate_minimize(sq, class_of(g2, sq), class_of(V2, sq), {}, cfg),
                      "2D " + std::to_string(n));
      }
    }
  });

  criterion(8, "stationarity of the optimized pair", [](Outcome& o) {
    // Threshold model tau(h) = C h, C fixed by the coarsest run of the study.
    std::vector<double> rel;
    double start_rel = 0.0;
    for (int n : {16, 32, 64}) {
      const Mesh m = unit_square(n);
      const CellField g0 = sample_cells(m, [](const Vec2& x) { return x.x() < 0.3 ? 3.0 : 1.0; });
      const CellField V0 = sample_cells(m, [](const Vec2& x) { return x.y() > 0.7 ? 5.0 : 0.0; });
      OptConfig cfg;
      cfg.p = 2.0;
      cfg.initial_g = g0;
      cfg.initial_V = V0;
      cfg.probe_count = 10;
      cfg.probe_seed = 7;
      const OptResult r = alternate_minimize(m, class_of(g0, m), class_of(V0, m), {}, cfg);
      o.require(r.converged, "optimization converged");
      const auto probes = random_stream_probes(m, 10, 7);
      const auto rep = verify_optimality(m, r, probes, std::numeric_limits<double>::infinity());
      rel.push_back(rep.max_relative);
      if (n == 32) {
        const ProblemData d{2.0, default_q(2.0, 2), g0, V0};
        const EigenResult e = solve_principal(m, d, {});
        start_rel = evaluate_optimality(m, d, e, cell_power_average(m, e.u, 2.0), probes, 1.0).max_relative;
        o.detail << " 32x32 max |hadamard| " << rep.max_hadamard;
        o.require(rep.defect_g == 0.0 && rep.defect_V == 0.0, "defects zero");
      }
    }
    const double tau32 = rel[0] * 16.0 / 32.0;
    o.detail << "; relative residual 16/32/64: " << rel[0] << " " << rel[1] << " " << rel[2]
             << "; threshold at 32: " << tau32 << "; at the start pair: " << start_rel;
    o.require(rel[1] <= tau32, "32x32 residual within calibrated threshold");
    o.require(rel[1] < rel[0] && rel[2] < rel[1], "residual decreases under refinement");
  });

  criterion(9, "regularization convergence in epsilon", [](Outcome& o) {
    for (int dim : {1, 2}) {
      const Mesh m = dim == 1 ? unit_interval(256) : unit_square(32);
      for (double p : {1.5, 3.0}) {
        const ProblemData d = bumpy(dim, p).sample(m);
        const EigenResult ref = solve_principal(m, d, {});
        o.require(ref.converged, "reference converged");
        double prev = std::numeric_limits<double>::infinity();
        o.detail << " " << dim << "D p=" << p << ":";
        for (double eps : {1e-2, 1e-3, 1e-4}) {
          SolverConfig cfg;
          cfg.epsilon0 = cfg.epsilon_min = eps;
          const EigenResult r = solve_principal(m, d, cfg);
          o.require(r.converged, "fixed-epsilon solve converged");
          const double gap = std::abs(r.lambda - ref.lambda);
          o.detail << " " << gap;
          o.require(gap <= prev + 1e-8, "gap nonincreasing");
          prev = gap;
        }
      }
    }
  });

  criterion(10, "continuity in the data", [](Outcome& o) {
    // V' = V - delta w with w >= 0: lambda is concave and decreasing in
    // delta, so the gap is convex with gap(0) = 0.
    const Mesh m = unit_square(32);
    const CellField w = sample_cells(m, [](const Vec2& x) { return std::exp(-(x - Vec2(0.6, 0.4)).squaredNorm() / 0.03); });
    for (double p : {1.5, 2.0, 3.0}) {
      const ProblemData d = bumpy(2, p).sample(m);
      const double l0 = solve_principal(m, d, {}).lambda;
      o.detail << " p=" << p << ":";
      double prev = -1.0;
      for (double delta : {1.0, 0.5, 0.25, 0.125, 0.0625}) {
        ProblemData q = d;
        for (std::size_t c = 0; c < m.cell_count(); ++c) q.V.values[c] -= delta * w[c];
        const EigenResult r = solve_principal(m, q, {});
        o.require(r.converged, "perturbed solve converged");
        const double gap = std::abs(r.lambda - l0);
        o.detail << " " << gap;
        if (prev >= 0.0) o.require(gap <= 0.5 * prev + 1e-8, "gap at least halves");
        prev = gap;
      }
    }
  });

  criterion(11, "flow integrity", [](Outcome& o) {
    const Vec2 c(0.5, 0.5);
    const auto rot = DeformationField::rotation(c, 0.15, 0.4);
    FlowConfig cfg;
    cfg.steps = 64;
    double rot_err = 0.0, round_trip = 0.0, jac = 0.0;
    for (int k = 0; k < 200; ++k) {
      const double r = 0.149 * k / 199.0, a = 0.37 * k;
      const Vec2 x = c + r * Vec2(std::cos(a), std::sin(a));
      const Vec2 exact = c + Vec2(std::cos(-0.1) * (x - c).x() - std::sin(-0.1) * (x - c).y(),
                                  std::sin(-0.1) * (x - c).x() + std::cos(-0.1) * (x - c).y());
      rot_err = std::max(rot_err, (flow_map(rot, 0.1, x, cfg) - exact).norm());
    }
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 200; ++k) {
      const Vec2 x(u(rng), u(rng));
      round_trip = std::max(round_trip, (flow_map(rot, 0.1, inverse_flow_map(rot, 0.1, x, cfg), cfg) - x).norm());
    }
    for (const auto& f : divfree_library()) jac = std::max(jac, jacobian_defect(f, 0.1, cfg));
    o.detail << " rotation error " << rot_err << ", round trip " << round_trip << ", jacobian defect " << jac;
    o.require(rot_err <= 1e-8, "rotation flow error <= 1e-8");
    o.require(jac <= 1e-6, "jacobian defect <= 1e-6");
    o.require(round_trip <= 1e-8, "round trip <= 1e-8");
  });

  std::printf("%d of 11 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
