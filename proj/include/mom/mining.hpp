#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "mom/anchors.hpp"
#include "mom/diffusion.hpp"
#include "mom/error.hpp"
#include "mom/features.hpp"
#include "mom/graph.hpp"
#include "mom/parallel.hpp"

namespace mom {

struct MiningConfig {
  std::size_t k_pos = 50;
  std::size_t k_neg = 100;
  std::optional<std::size_t> max_pos;
  std::size_t max_neg = 50;
  std::size_t hard_subset_size = 10;

  void validate() const {
    if (k_pos < 1 || k_neg < 1) throw error(errc::bad_config, "mining k_pos and k_neg must be at least 1");
    if (max_neg < 1) throw error(errc::bad_config, "mining max_neg must be at least 1");
    if (hard_subset_size < 1 || hard_subset_size > max_neg)
      throw error(errc::bad_config, "mining hard_subset_size must lie in [1, max_neg]");
    if (max_pos && *max_pos < 1) throw error(errc::bad_config, "mining max_pos must be at least 1");
  }
};

struct PoolEntry {
  std::uint32_t id;
  double weight;

  friend bool operator==(const PoolEntry&, const PoolEntry&) = default;
};

/// Positives carry s_m weights (descending), negatives s_e weights (descending).
struct AnchorPools {
  std::uint32_t anchor = 0;
  std::vector<PoolEntry> positives;
  std::vector<PoolEntry> negatives;
  /// Set when the anchor's diffusion solve hit its iteration cap.
  bool not_converged = false;

  bool usable() const { return !positives.empty() && !negatives.empty(); }
};

namespace detail {

inline std::vector<PoolEntry> difference(std::span<const Neighbor> keep, std::span<const Neighbor> drop) {
  std::unordered_set<std::uint32_t> excluded;
  for (const auto& nb : drop) excluded.insert(nb.id);
  std::vector<PoolEntry> out;
  for (const auto& nb : keep)
    if (!excluded.count(nb.id)) out.push_back({nb.id, nb.similarity});
  return out;
}

inline std::size_t clamp_k(std::size_t k, std::size_t n) { return std::min(k, n - 1); }

}  // namespace detail

/// NN^m_k \ NN^e_k in descending s_m order, truncated to max_pos.
/// `manifold` is the anchor's similarity column; k is clamped to n - 1.
inline std::vector<PoolEntry> positive_pool(std::size_t anchor, const FeatureSet& features,
                                            std::span<const double> manifold, const MiningConfig& config) {
  const std::size_t k = detail::clamp_k(config.k_pos, features.n);
  const auto nn_m = manifold_knn(manifold, anchor, k, true);
  const auto nn_e = euclidean_neighbors(features, anchor, k);
  auto pool = detail::difference(nn_m, nn_e);
  if (config.max_pos && pool.size() > *config.max_pos) pool.resize(*config.max_pos);
  return pool;
}

/// NN^e_k \ NN^m_k in descending s_e order, truncated to max_neg (hardest kept).
inline std::vector<PoolEntry> negative_pool(std::size_t anchor, const FeatureSet& features,
                                            std::span<const double> manifold, const MiningConfig& config) {
  const std::size_t k = detail::clamp_k(config.k_neg, features.n);
  const auto nn_e = euclidean_neighbors(features, anchor, k);
  const auto nn_m = manifold_knn(manifold, anchor, k, true);
  auto pool = detail::difference(nn_e, nn_m);
  if (pool.size() > config.max_neg) pool.resize(config.max_neg);
  return pool;
}

/// Both pools from an already computed similarity column.
inline AnchorPools pools_from_column(std::size_t anchor, const FeatureSet& features, std::span<const double> manifold,
                                     const MiningConfig& config) {
  AnchorPools out;
  out.anchor = static_cast<std::uint32_t>(anchor);
  out.positives = positive_pool(anchor, features, manifold, config);
  out.negatives = negative_pool(anchor, features, manifold, config);
  return out;
}

inline AnchorPools mine_anchor(std::size_t anchor, const FeatureSet& features, const NormalizedOperator& op,
                               const DiffusionConfig& diffusion, const MiningConfig& config) {
  const auto column = solve_column(op, anchor, diffusion);
  auto pools = pools_from_column(anchor, features, column.values, config);
  pools.not_converged = !column.converged;
  return pools;
}

namespace detail {

/// Seeded uniform draw of up to `count` items outside `taken`, sorted by descending s_e to the anchor.
inline std::vector<PoolEntry> random_negatives(std::size_t anchor, const FeatureSet& features,
                                               const std::vector<char>& taken, std::size_t count, std::uint64_t seed) {
  std::vector<std::uint32_t> rest;
  for (std::size_t j = 0; j < features.n; ++j)
    if (!taken[j]) rest.push_back(static_cast<std::uint32_t>(j));
  std::mt19937_64 rng(seed ^ (0x9e3779b97f4a7c15ull * (anchor + 1)));
  const std::size_t draw = std::min(count, rest.size());
  // Partial Fisher-Yates: the first `draw` slots become the sample.
  for (std::size_t i = 0; i < draw; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, rest.size() - 1);
    std::swap(rest[i], rest[pick(rng)]);
  }
  const auto q = features.row(anchor);
  std::vector<PoolEntry> out;
  for (std::size_t i = 0; i < draw; ++i) out.push_back({rest[i], euclidean_similarity(q, features.row(rest[i]))});
  std::sort(out.begin(), out.end(), [](const PoolEntry& a, const PoolEntry& b) {
    return ranks_before({a.id, a.weight}, {b.id, b.weight});
  });
  return out;
}

}  // namespace detail

/// Unsupervised baseline: the k_base Euclidean neighbors as positives (s_e
/// weights) and a seeded uniform draw of max_neg items from the rest as
/// negatives, sorted by descending s_e.
inline AnchorPools baseline_pools(std::size_t anchor, const FeatureSet& features, std::size_t k_base,
                                  std::size_t max_neg, std::uint64_t seed) {
  if (k_base < 1) throw error(errc::bad_config, "baseline k must be at least 1");
  AnchorPools out;
  out.anchor = static_cast<std::uint32_t>(anchor);
  const auto nn = euclidean_neighbors(features, anchor, detail::clamp_k(k_base, features.n));
  std::vector<char> taken(features.n, 0);
  taken[anchor] = 1;
  for (const auto& nb : nn) {
    out.positives.push_back({nb.id, nb.similarity});
    taken[nb.id] = 1;
  }
  out.negatives = detail::random_negatives(anchor, features, taken, max_neg, seed);
  return out;
}

/// Keeps the positives of `base` and replaces its negatives with a seeded
/// uniform draw of max_neg items that are neither the anchor nor a positive.
inline AnchorPools random_negative_pools(const AnchorPools& base, const FeatureSet& features, std::size_t max_neg,
                                         std::uint64_t seed) {
  std::vector<char> taken(features.n, 0);
  taken[base.anchor] = 1;
  for (const auto& e : base.positives) taken[e.id] = 1;
  AnchorPools out = base;
  out.negatives = detail::random_negatives(base.anchor, features, taken, max_neg, seed);
  return out;
}

enum class OracleMode { positive, negative };

/// Replaces one pool with its label-based ground truth. Positives become every
/// same-label item (weight 1, descending s_e order, max_pos applies); negatives
/// become the max_neg hardest different-label items by s_e. Entries already in
/// the untouched pool are removed from the replacement to keep pools disjoint.
inline AnchorPools oracle_pools(const AnchorPools& base, const FeatureSet& features, std::span<const int> labels,
                                OracleMode mode, const MiningConfig& config) {
  if (labels.size() != features.n) throw error(errc::labels_missing, "oracle pools need one label per item");
  const std::size_t anchor = base.anchor;
  const auto q = features.row(anchor);
  std::vector<Neighbor> ranked;
  for (std::size_t j = 0; j < features.n; ++j) {
    if (j == anchor) continue;
    const bool same = labels[j] == labels[anchor];
    if (same == (mode == OracleMode::positive))
      ranked.push_back({static_cast<std::uint32_t>(j), euclidean_similarity(q, features.row(j))});
  }
  std::sort(ranked.begin(), ranked.end(), ranks_before);

  AnchorPools out = base;
  const auto& other = mode == OracleMode::positive ? base.negatives : base.positives;
  std::unordered_set<std::uint32_t> blocked;
  for (const auto& e : other) blocked.insert(e.id);
  std::vector<PoolEntry> pool;
  for (const auto& nb : ranked) {
    if (blocked.count(nb.id)) continue;
    pool.push_back({nb.id, mode == OracleMode::positive ? 1.0 : nb.similarity});
  }
  if (mode == OracleMode::positive) {
    if (config.max_pos && pool.size() > *config.max_pos) pool.resize(*config.max_pos);
    out.positives = std::move(pool);
  } else {
    if (pool.size() > config.max_neg) pool.resize(config.max_neg);
    out.negatives = std::move(pool);
  }
  return out;
}

/// Pools for every surviving anchor plus the sorted item union of anchors and pools.
struct TrainingPool {
  std::vector<AnchorPools> pools;
  std::vector<std::uint32_t> items;
  std::size_t dropped = 0;
  std::size_t not_converged = 0;
};

inline TrainingPool assemble_training_pool(std::vector<AnchorPools> per_anchor) {
  TrainingPool out;
  std::vector<char> member;
  for (auto& p : per_anchor) {
    if (p.not_converged) ++out.not_converged;
    if (p.positives.empty() && p.negatives.empty()) {
      ++out.dropped;
      continue;
    }
    out.pools.push_back(std::move(p));
  }
  if (out.pools.empty()) throw error(errc::all_pools_empty, "no anchor produced a non-empty pool");
  std::unordered_set<std::uint32_t> seen;
  for (const auto& p : out.pools) {
    seen.insert(p.anchor);
    for (const auto& e : p.positives) seen.insert(e.id);
    for (const auto& e : p.negatives) seen.insert(e.id);
  }
  out.items.assign(seen.begin(), seen.end());
  std::sort(out.items.begin(), out.items.end());
  return out;
}

/// Mines every anchor (one private diffusion solve each) and assembles the pool.
inline TrainingPool build_training_pool(std::span<const std::uint32_t> anchors, const FeatureSet& features,
                                        const NormalizedOperator& op, const DiffusionConfig& diffusion,
                                        const MiningConfig& config, unsigned threads = 1) {
  if (anchors.empty()) throw error(errc::all_pools_empty, "anchor set is empty");
  config.validate();
  std::vector<AnchorPools> per_anchor(anchors.size());
  parallel_for(anchors.size(), threads, [&](std::size_t a) {
    per_anchor[a] = mine_anchor(anchors[a], features, op, diffusion, config);
  });
  return assemble_training_pool(std::move(per_anchor));
}

struct TrainingTuple {
  std::uint32_t anchor;
  std::uint32_t positive;
  std::uint32_t negative;
  double weight;  // s_m(anchor, positive)

  friend bool operator==(const TrainingTuple&, const TrainingTuple&) = default;
};

struct EpochTuples {
  std::vector<TrainingTuple> tuples;
  std::size_t skipped = 0;
};

/// Row-major embedding table indexed by item id.
struct EmbeddingTable {
  std::size_t dim = 0;
  std::vector<double> values;

  std::span<const double> row(std::size_t i) const { return {values.data() + i * dim, dim}; }
  std::span<double> row(std::size_t i) { return {values.data() + i * dim, dim}; }
};

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double t = a[i] - b[i];
    s += t * t;
  }
  return s;
}

/// Members of `negatives` closest to the anchor in the current embedding,
/// at most `window` of them, ascending distance with ties by pool position.
inline std::vector<std::size_t> hard_window(const AnchorPools& pools, const EmbeddingTable& embeddings,
                                            std::size_t window) {
  const auto zr = embeddings.row(pools.anchor);
  std::vector<std::pair<double, std::size_t>> dist;
  dist.reserve(pools.negatives.size());
  for (std::size_t i = 0; i < pools.negatives.size(); ++i)
    dist.emplace_back(squared_distance(zr, embeddings.row(pools.negatives[i].id)), i);
  const std::size_t w = std::min(window, dist.size());
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(w), dist.end());
  std::vector<std::size_t> out(w);
  for (std::size_t i = 0; i < w; ++i) out[i] = dist[i].second;
  return out;
}

/// One tuple per anchor with both pools non-empty: a uniform positive and a
/// uniform negative from the hard window in the current embedding space.
inline EpochTuples sample_epoch_tuples(std::span<const AnchorPools> pools, const EmbeddingTable& embeddings,
                                       const MiningConfig& config, std::uint64_t seed) {
  EpochTuples out;
  std::mt19937_64 rng(seed);
  for (const auto& p : pools) {
    if (!p.usable()) {
      ++out.skipped;
      continue;
    }
    std::uniform_int_distribution<std::size_t> pick_pos(0, p.positives.size() - 1);
    const auto& pos = p.positives[pick_pos(rng)];
    const auto window = hard_window(p, embeddings, config.hard_subset_size);
    std::uniform_int_distribution<std::size_t> pick_neg(0, window.size() - 1);
    const auto& neg = p.negatives[window[pick_neg(rng)]];
    out.tuples.push_back({p.anchor, pos.id, neg.id, pos.weight});
  }
  return out;
}

}  // namespace mom
