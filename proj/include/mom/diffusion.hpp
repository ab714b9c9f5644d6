#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mom/error.hpp"
#include "mom/graph.hpp"

namespace mom {

struct DiffusionConfig {
  double alpha = 0.99;
  double tolerance = 1e-6;  // relative residual ||b - Mx|| / ||b||
  int max_iterations = 100;

  void validate() const {
    if (!(alpha >= 0.0 && alpha < 1.0)) throw error(errc::bad_config, "diffusion alpha must lie in [0, 1)");
    if (!(tolerance > 0.0)) throw error(errc::bad_config, "diffusion tolerance must be positive");
    if (max_iterations < 1) throw error(errc::bad_config, "diffusion max_iterations must be positive");
  }
};

/// f* for one anchor: the solution of (I - alpha A_hat) f = (1 - alpha) e_anchor.
/// values[j] is the manifold similarity s_m(anchor, j).
struct SimilarityColumn {
  std::size_t anchor = 0;
  std::vector<double> values;
  double residual_norm = 0.0;
  int iterations_used = 0;
  bool converged = false;
  /// Relative residual of the best iterate after each iteration (index 0 is the start).
  std::vector<double> residual_history;
};

/// Conjugate gradient from the zero vector on I - alpha * A_hat.
///
/// The returned iterate is the one with the smallest residual seen so far, which
/// is also what residual_history records; plain CG residuals may oscillate.
inline SimilarityColumn solve_column(const NormalizedOperator& op, std::size_t anchor, const DiffusionConfig& config) {
  if (op.kind != OperatorKind::symmetric) throw error(errc::bad_config, "solve_column needs the symmetric operator");
  if (anchor >= op.n) throw error(errc::dim_mismatch, "anchor " + std::to_string(anchor) + " outside [0, n)");
  config.validate();

  const std::size_t n = op.n;
  const double alpha = config.alpha;
  const double b_norm = 1.0 - alpha;

  SimilarityColumn col;
  col.anchor = anchor;
  col.values.assign(n, 0.0);
  col.residual_history.push_back(1.0);

  if (op.rowptr[anchor] == op.rowptr[anchor + 1]) {
    // Isolated node: its row and column of A_hat vanish.
    col.values[anchor] = b_norm;
    col.residual_norm = 0.0;
    col.converged = true;
    return col;
  }

  auto apply = [&](std::span<const double> x, std::span<double> y) {
    op.multiply(x, y);
    for (std::size_t i = 0; i < n; ++i) y[i] = x[i] - alpha * y[i];
  };
  auto dot_product = [](std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
  };

  std::vector<double> x(n, 0.0), r(n, 0.0), p(n, 0.0), q(n, 0.0);
  r[anchor] = b_norm;
  p = r;
  double rr = b_norm * b_norm;
  double best = 1.0;

  for (int it = 1; it <= config.max_iterations; ++it) {
    apply(p, q);
    const double pq = dot_product(p, q);
    if (!(pq > 0.0)) break;
    const double step = rr / pq;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += step * p[i];
      r[i] -= step * q[i];
    }
    const double rr_new = dot_product(r, r);
    const double rel = std::sqrt(rr_new) / b_norm;
    col.iterations_used = it;
    if (rel < best) {
      best = rel;
      col.values = x;
    }
    col.residual_history.push_back(best);
    if (rel <= config.tolerance) break;
    const double beta = rr_new / rr;
    rr = rr_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
  }
  col.residual_norm = best;
  col.converged = best <= config.tolerance;
  return col;
}

/// Indices of the k largest column values, descending, ties by ascending index.
inline std::vector<Neighbor> manifold_knn(std::span<const double> values, std::size_t anchor, std::size_t k,
                                          bool exclude_self = true) {
  const std::size_t available = values.size() - (exclude_self ? 1 : 0);
  if (k > available)
    throw error(errc::k_too_large, "k=" + std::to_string(k) + " exceeds the " + std::to_string(available) + " candidates");
  std::vector<Neighbor> all;
  all.reserve(values.size());
  for (std::size_t j = 0; j < values.size(); ++j) {
    if (exclude_self && j == anchor) continue;
    all.push_back({static_cast<std::uint32_t>(j), values[j]});
  }
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(), ranks_before);
  all.resize(k);
  return all;
}

inline std::vector<Neighbor> manifold_knn(const SimilarityColumn& column, std::size_t k, bool exclude_self = true) {
  return manifold_knn(column.values, column.anchor, k, exclude_self);
}

}  // namespace mom
