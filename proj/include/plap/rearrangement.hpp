#pragma once

// Rearrangement classes on equal-measure cells. Two cell fields are
// rearrangements of each other iff their value multisets coincide, so the
// extremal rearrangements against a reference field are obtained by sorting.

#include "plap/mesh.hpp"

#include <algorithm>
#include <array>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace plap {

enum class Sense { max, min };

struct RearrangementClass {
  std::vector<double> values;  // ascending
  double cell_measure = 0.0;

  std::size_t cell_count() const { return values.size(); }
  double domain_measure() const { return cell_measure * static_cast<double>(values.size()); }
  bool is_singleton() const { return values.empty() || values.front() == values.back(); }
};

inline bool has_equal_cells(std::span<const double> measures) {
  if (measures.empty()) return false;
  const auto [lo, hi] = std::minmax_element(measures.begin(), measures.end());
  return *lo > 0.0 && *lo == *hi;
}

inline bool has_equal_cells(const Mesh& mesh) { return has_equal_cells(mesh.cell_measures()); }

/// Class of f0 on cells with the given measures (which must all be equal).
inline RearrangementClass class_of(const CellField& f0, std::span<const double> measures) {
  if (f0.size() != measures.size()) throw std::invalid_argument("class_of: size mismatch");
  if (!has_equal_cells(measures))
    throw std::invalid_argument("rearrangement classes need an equal-measure mesh");
  RearrangementClass cls;
  cls.values = f0.values;
  std::sort(cls.values.begin(), cls.values.end());
  cls.cell_measure = measures.front();
  return cls;
}

inline RearrangementClass class_of(const CellField& f0, const Mesh& mesh) {
  require_cell_field(mesh, f0);
  return class_of(f0, mesh.cell_measures());
}

inline bool is_rearrangement_of(const CellField& f, const RearrangementClass& cls) {
  if (f.size() != cls.cell_count())
    throw std::invalid_argument("is_rearrangement_of: size mismatch");
  std::vector<double> sorted = f.values;
  std::sort(sorted.begin(), sorted.end());
  return sorted == cls.values;
}

/// Cell indices ordered by ascending reference value, ties by ascending index.
inline std::vector<std::size_t> rank_cells(const CellField& reference) {
  std::vector<std::size_t> order(reference.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return reference[a] < reference[b];
  });
  return order;
}

/// The member of the class maximizing (Sense::max) or minimizing
/// (Sense::min) sum f * reference * measure. The maximizer is comonotone
/// with the reference, the minimizer anti-comonotone.
inline CellField extremal_rearrangement(const RearrangementClass& cls, const CellField& reference,
                                        Sense sense) {
  if (reference.size() != cls.cell_count())
    throw std::invalid_argument("extremal_rearrangement: size mismatch");
  const auto order = rank_cells(reference);
  const std::size_t n = order.size();
  CellField out(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const double v = sense == Sense::max ? cls.values[k] : cls.values[n - 1 - k];
    out[order[k]] = v;
  }
  return out;
}

/// Mean over cell pairs of max(0, -sign (u_i - u_j)(f_i - f_j)). Zero iff f
/// is comonotone (sign = +1) or anti-comonotone (sign = -1) with u.
inline double comonotonicity_defect(const CellField& f, const CellField& u, int sign) {
  if (f.size() != u.size()) throw std::invalid_argument("comonotonicity_defect: size mismatch");
  if (sign != 1 && sign != -1) throw std::invalid_argument("comonotonicity_defect: sign must be +1 or -1");
  const std::size_t n = f.size();
  if (n < 2) return 0.0;

  // Violating pairs are u_i < u_j with s f_i > s f_j (s = sign). Sweep cells
  // in ascending u, keeping Fenwick sums of (1, u, s f, u s f) indexed by
  // descending rank of s f so that "strictly larger s f" is a prefix query.
  std::vector<double> sf(n);
  for (std::size_t i = 0; i < n; ++i) sf[i] = sign * f[i];
  std::vector<double> distinct = sf;
  std::sort(distinct.begin(), distinct.end(), std::greater<>());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  auto slot = [&](double v) {  // 1-based, larger values first
    return static_cast<std::size_t>(std::lower_bound(distinct.begin(), distinct.end(), v,
                                                     std::greater<>()) - distinct.begin()) + 1;
  };
  const std::size_t m = distinct.size();
  std::vector<std::array<double, 4>> tree(m + 1, {0.0, 0.0, 0.0, 0.0});
  auto add = [&](std::size_t k, const std::array<double, 4>& v) {
    for (; k <= m; k += k & (~k + 1))
      for (int c = 0; c < 4; ++c) tree[k][c] += v[c];
  };
  auto prefix = [&](std::size_t k) {
    std::array<double, 4> s{0.0, 0.0, 0.0, 0.0};
    for (; k > 0; k -= k & (~k + 1))
      for (int c = 0; c < 4; ++c) s[c] += tree[k][c];
    return s;
  };

  const auto order = rank_cells(u);
  double total = 0.0;
  std::size_t a = 0;
  while (a < n) {
    std::size_t b = a;
    while (b < n && u[order[b]] == u[order[a]]) ++b;
    for (std::size_t k = a; k < b; ++k) {
      const std::size_t j = order[k];
      const auto s = prefix(slot(sf[j]) - 1);  // entries with s f strictly larger
      if (s[0] == 0.0) continue;
      // sum_i (u_j - u_i)(sf_i - sf_j)
      total += u[j] * s[2] - u[j] * sf[j] * s[0] - s[3] + sf[j] * s[1];
    }
    for (std::size_t k = a; k < b; ++k) {
      const std::size_t i = order[k];
      add(slot(sf[i]), {1.0, u[i], sf[i], u[i] * sf[i]});
    }
    a = b;
  }
  const double pairs = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
  return std::max(total, 0.0) / pairs;
}

/// Number of cells whose value differs between a and b.
inline std::size_t count_changes(const CellField& a, const CellField& b) {
  if (a.size() != b.size()) throw std::invalid_argument("count_changes: size mismatch");
  std::size_t k = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) ++k;
  return k;
}

}  // namespace plap
