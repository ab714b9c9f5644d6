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

struct StationaryConfig {
  double tolerance = 1e-10;  // L1 change between successive iterates
  int max_iterations = 10000;
  /// pi <- damping * pi P + (1 - damping) u. 1 disables damping; values below 1
  /// move the result away from the degree-proportional distribution.
  double damping = 1.0;
};

struct StationaryDistribution {
  std::vector<double> pi;
  int iterations_used = 0;
  bool converged = false;
  double l1_delta = 0.0;
};

/// Power iteration pi <- pi P from the uniform distribution, renormalized to
/// unit mass each step. Non-convergence (e.g. bipartite oscillation) is
/// reported through `converged`.
inline StationaryDistribution power_iteration(const NormalizedOperator& op, const StationaryConfig& config = {}) {
  if (op.kind != OperatorKind::stochastic) throw error(errc::bad_config, "power_iteration needs the stochastic operator");
  if (op.cols.empty()) throw error(errc::bad_config, "power_iteration needs a graph with at least one edge");
  if (!(config.damping > 0.0 && config.damping <= 1.0)) throw error(errc::bad_config, "damping must lie in (0, 1]");
  const std::size_t n = op.n;
  StationaryDistribution out;
  std::vector<double> pi(n, 1.0 / static_cast<double>(n)), next(n, 0.0);
  for (int it = 1; it <= config.max_iterations; ++it) {
    op.left_multiply(pi, next);
    if (config.damping < 1.0)
      for (auto& v : next) v = config.damping * v + (1.0 - config.damping) / static_cast<double>(n);
    double mass = 0.0;
    for (double v : next) mass += v;
    double delta = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      next[i] /= mass;
      delta += std::abs(next[i] - pi[i]);
    }
    pi.swap(next);
    out.iterations_used = it;
    out.l1_delta = delta;
    if (delta <= config.tolerance) {
      out.converged = true;
      break;
    }
  }
  out.pi = std::move(pi);
  return out;
}

/// Nodes with positive degree whose pi is not exceeded by any neighbor. A set
/// of connected nodes with exactly equal pi (a plateau) contributes only its
/// smallest index, and only if no member of the plateau is dominated.
inline std::vector<std::uint32_t> local_maxima(const NeighborGraph& graph, std::span<const double> pi) {
  if (pi.size() != graph.n) throw error(errc::length_mismatch, "pi length differs from graph size");
  const std::size_t n = graph.n;
  auto dominated = [&](std::size_t i) {
    for (auto j : graph.neighbors(i))
      if (pi[j] > pi[i]) return true;
    return false;
  };
  std::vector<char> visited(n, 0);
  std::vector<std::uint32_t> out;
  std::vector<std::uint32_t> stack;
  for (std::size_t i = 0; i < n; ++i) {
    if (visited[i] || graph.degree_count(i) == 0) continue;
    // Walk the equal-pi plateau containing i; i is its smallest unvisited index.
    bool peak = true;
    stack.assign(1, static_cast<std::uint32_t>(i));
    visited[i] = 1;
    while (!stack.empty()) {
      const auto u = stack.back();
      stack.pop_back();
      if (dominated(u)) peak = false;
      for (auto v : graph.neighbors(u)) {
        if (!visited[v] && pi[v] == pi[u]) {
          visited[v] = 1;
          stack.push_back(v);
        }
      }
    }
    if (peak) out.push_back(static_cast<std::uint32_t>(i));
  }
  return out;
}

struct AnchorSet {
  std::vector<std::uint32_t> anchor_ids;
  std::vector<double> pi_values;
  std::size_t maxima_found = 0;

  std::size_t size() const { return anchor_ids.size(); }
};

/// The `count` local maxima with the largest pi, descending, ties by index.
inline AnchorSet select_anchors(const NeighborGraph& graph, std::span<const double> pi, std::size_t count) {
  if (count < 1) throw error(errc::bad_config, "anchor count must be at least 1");
  auto maxima = local_maxima(graph, pi);
  std::sort(maxima.begin(), maxima.end(), [&](std::uint32_t a, std::uint32_t b) {
    return pi[a] != pi[b] ? pi[a] > pi[b] : a < b;
  });
  AnchorSet out;
  out.maxima_found = maxima.size();
  maxima.resize(std::min(count, maxima.size()));
  out.anchor_ids = maxima;
  for (auto id : maxima) out.pi_values.push_back(pi[id]);
  return out;
}

}  // namespace mom
