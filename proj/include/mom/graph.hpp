#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "mom/error.hpp"
#include "mom/features.hpp"
#include "mom/parallel.hpp"

namespace mom {

/// s_e(a, b) = max(a.b, 0)^3 for unit vectors.
inline double euclidean_similarity(std::span<const float> a, std::span<const float> b) {
  const double c = std::max(dot(a, b), 0.0);
  return c * c * c;
}

struct Neighbor {
  std::uint32_t id;
  double similarity;
};

/// Descending similarity, ascending id on ties.
inline bool ranks_before(const Neighbor& a, const Neighbor& b) {
  if (a.similarity != b.similarity) return a.similarity > b.similarity;
  return a.id < b.id;
}

/// Exact k most similar items to `query` under s_e, query excluded.
inline std::vector<Neighbor> euclidean_neighbors(const FeatureSet& features, std::size_t query, std::size_t k) {
  if (k >= features.n)
    throw error(errc::k_too_large, "k=" + std::to_string(k) + " must be below n=" + std::to_string(features.n));
  std::vector<Neighbor> all;
  all.reserve(features.n - 1);
  const auto q = features.row(query);
  for (std::size_t j = 0; j < features.n; ++j) {
    if (j == query) continue;
    all.push_back({static_cast<std::uint32_t>(j), euclidean_similarity(q, features.row(j))});
  }
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(), ranks_before);
  all.resize(k);
  return all;
}

/// Ranked neighbor lists for every node, k per row.
struct KnnLists {
  std::size_t n = 0;
  std::size_t k = 0;
  std::vector<Neighbor> entries;  // n * k

  std::span<const Neighbor> row(std::size_t i) const { return {entries.data() + i * k, k}; }
};

inline KnnLists knn_search(const FeatureSet& features, std::size_t k, unsigned threads = 1) {
  if (k < 1 || k >= features.n)
    throw error(errc::k_too_large, "k=" + std::to_string(k) + " must lie in [1, n) with n=" + std::to_string(features.n));
  KnnLists out;
  out.n = features.n;
  out.k = k;
  out.entries.resize(features.n * k);
  parallel_for(features.n, threads, [&](std::size_t i) {
    const auto nn = euclidean_neighbors(features, i, k);
    std::copy(nn.begin(), nn.end(), out.entries.begin() + static_cast<std::ptrdiff_t>(i * k));
  });
  return out;
}

/// Symmetric sparse adjacency in CSR form with zero diagonal.
struct NeighborGraph {
  std::size_t n = 0;
  std::size_t k = 0;
  std::vector<std::size_t> rowptr;  // n + 1
  std::vector<std::uint32_t> cols;  // sorted ascending within a row
  std::vector<double> vals;
  std::vector<double> degrees;

  std::size_t edge_count() const { return cols.size() / 2; }
  std::size_t degree_count(std::size_t i) const { return rowptr[i + 1] - rowptr[i]; }
  std::span<const std::uint32_t> neighbors(std::size_t i) const {
    return {cols.data() + rowptr[i], rowptr[i + 1] - rowptr[i]};
  }
  std::span<const double> weights(std::size_t i) const {
    return {vals.data() + rowptr[i], rowptr[i + 1] - rowptr[i]};
  }
};

struct Edge {
  std::uint32_t i;
  std::uint32_t j;
  double w;
};

/// Builds a graph from undirected edges given once each (either orientation).
/// Self-loops and non-positive weights are dropped.
inline NeighborGraph graph_from_edges(std::size_t n, std::size_t k, std::vector<Edge> edges) {
  std::vector<Edge> directed;
  directed.reserve(2 * edges.size());
  for (const auto& e : edges) {
    if (e.i == e.j || !(e.w > 0.0)) continue;
    if (e.i >= n || e.j >= n) throw error(errc::dim_mismatch, "edge endpoint outside [0, n)");
    directed.push_back(e);
    directed.push_back({e.j, e.i, e.w});
  }
  std::sort(directed.begin(), directed.end(), [](const Edge& a, const Edge& b) {
    return a.i != b.i ? a.i < b.i : a.j < b.j;
  });
  directed.erase(std::unique(directed.begin(), directed.end(),
                             [](const Edge& a, const Edge& b) { return a.i == b.i && a.j == b.j; }),
                 directed.end());
  NeighborGraph g;
  g.n = n;
  g.k = k;
  g.rowptr.assign(n + 1, 0);
  g.degrees.assign(n, 0.0);
  for (const auto& e : directed) ++g.rowptr[e.i + 1];
  std::partial_sum(g.rowptr.begin(), g.rowptr.end(), g.rowptr.begin());
  g.cols.reserve(directed.size());
  g.vals.reserve(directed.size());
  for (const auto& e : directed) {
    g.cols.push_back(e.j);
    g.vals.push_back(e.w);
    g.degrees[e.i] += e.w;
  }
  return g;
}

/// a_ij = s_e(y_i, y_j) iff i and j are each among the other's k nearest neighbors.
inline NeighborGraph build_reciprocal_graph(const KnnLists& knn, const FeatureSet& features) {
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < knn.n; ++i) {
    for (const auto& nb : knn.row(i)) {
      if (nb.id <= i) continue;
      const auto back = knn.row(nb.id);
      const bool mutual = std::any_of(back.begin(), back.end(), [&](const Neighbor& b) { return b.id == i; });
      if (mutual) edges.push_back({static_cast<std::uint32_t>(i), nb.id, euclidean_similarity(features.row(i), features.row(nb.id))});
    }
  }
  return graph_from_edges(knn.n, knn.k, std::move(edges));
}

inline NeighborGraph build_reciprocal_graph(const FeatureSet& features, std::size_t k, unsigned threads = 1) {
  return build_reciprocal_graph(knn_search(features, k, threads), features);
}

enum class OperatorKind { symmetric, stochastic };

/// Either D^{-1/2} A D^{-1/2} or D^{-1} A over the graph's sparsity pattern.
struct NormalizedOperator {
  OperatorKind kind = OperatorKind::symmetric;
  std::size_t n = 0;
  std::vector<std::size_t> rowptr;
  std::vector<std::uint32_t> cols;
  std::vector<double> vals;
  std::size_t isolated = 0;

  /// y = M x
  void multiply(std::span<const double> x, std::span<double> y) const {
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t p = rowptr[i]; p < rowptr[i + 1]; ++p) s += vals[p] * x[cols[p]];
      y[i] = s;
    }
  }

  /// y = x^T M, accumulated row by row in index order.
  void left_multiply(std::span<const double> x, std::span<double> y) const {
    std::fill(y.begin(), y.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double xi = x[i];
      if (xi == 0.0) continue;
      for (std::size_t p = rowptr[i]; p < rowptr[i + 1]; ++p) y[cols[p]] += xi * vals[p];
    }
  }

  double at(std::size_t i, std::size_t j) const {
    const auto b = cols.begin() + static_cast<std::ptrdiff_t>(rowptr[i]);
    const auto e = cols.begin() + static_cast<std::ptrdiff_t>(rowptr[i + 1]);
    const auto it = std::lower_bound(b, e, static_cast<std::uint32_t>(j));
    return (it != e && *it == j) ? vals[static_cast<std::size_t>(it - cols.begin())] : 0.0;
  }
};

inline NormalizedOperator normalize(const NeighborGraph& graph, OperatorKind kind) {
  NormalizedOperator op;
  op.kind = kind;
  op.n = graph.n;
  op.rowptr = graph.rowptr;
  op.cols = graph.cols;
  op.vals.resize(graph.vals.size());
  std::vector<double> inv_sqrt(graph.n, 0.0);
  for (std::size_t i = 0; i < graph.n; ++i) {
    if (graph.degrees[i] > 0.0)
      inv_sqrt[i] = 1.0 / std::sqrt(graph.degrees[i]);
    else
      ++op.isolated;
  }
  for (std::size_t i = 0; i < graph.n; ++i) {
    for (std::size_t p = graph.rowptr[i]; p < graph.rowptr[i + 1]; ++p) {
      const std::size_t j = graph.cols[p];
      // inv_sqrt[i] * inv_sqrt[j] is formed first so (i,j) and (j,i) round identically.
      op.vals[p] = kind == OperatorKind::symmetric ? graph.vals[p] * (inv_sqrt[i] * inv_sqrt[j])
                                                   : graph.vals[p] / graph.degrees[i];
    }
  }
  return op;
}

}  // namespace mom
