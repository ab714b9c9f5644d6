#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mom/error.hpp"
#include "mom/features.hpp"

namespace mom {

namespace detail {

inline void require_labels(const FeatureSet& emb, std::span<const int> labels) {
  if (labels.size() != emb.n) throw error(errc::length_mismatch, "labels and embeddings differ in length");
  if (std::all_of(labels.begin(), labels.end(), [&](int l) { return l == labels[0]; }))
    throw error(errc::degenerate_labels, "all items share one label");
}

inline double squared_distance(std::span<const float> a, std::span<const float> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double t = static_cast<double>(a[i]) - b[i];
    s += t * t;
  }
  return s;
}

/// Every other item ranked by ascending distance to `query`, ties by index.
inline std::vector<std::uint32_t> ranking(const FeatureSet& emb, std::size_t query) {
  std::vector<std::pair<double, std::uint32_t>> d;
  d.reserve(emb.n - 1);
  for (std::size_t j = 0; j < emb.n; ++j)
    if (j != query) d.emplace_back(squared_distance(emb.row(query), emb.row(j)), static_cast<std::uint32_t>(j));
  std::sort(d.begin(), d.end());
  std::vector<std::uint32_t> out(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) out[i] = d[i].second;
  return out;
}

}  // namespace detail

/// Fraction of queries with a same-label item among their k nearest (self excluded).
inline std::vector<double> recall_at_k(const FeatureSet& emb, std::span<const int> labels, std::span<const std::size_t> ks) {
  detail::require_labels(emb, labels);
  std::vector<double> hits(ks.size(), 0.0);
  for (std::size_t q = 0; q < emb.n; ++q) {
    const auto order = detail::ranking(emb, q);
    auto first = std::numeric_limits<std::size_t>::max();
    for (std::size_t r = 0; r < order.size(); ++r)
      if (labels[order[r]] == labels[q]) {
        first = r;
        break;
      }
    for (std::size_t i = 0; i < ks.size(); ++i)
      if (first < ks[i]) hits[i] += 1.0;
  }
  for (auto& h : hits) h /= static_cast<double>(emb.n);
  return hits;
}

struct KMeansResult {
  std::vector<int> assignment;
  double inertia = 0.0;
  int iterations = 0;
};

/// Lloyd's algorithm from a seeded farthest-point initialization.
inline KMeansResult kmeans(const FeatureSet& emb, std::size_t clusters, std::uint64_t seed, int max_iter = 100) {
  if (clusters < 1 || clusters > emb.n) throw error(errc::bad_config, "kmeans needs 1 <= c <= n");
  const std::size_t n = emb.n, d = emb.d;
  std::vector<double> centers(clusters * d);
  auto set_center = [&](std::size_t c, std::size_t item) {
    for (std::size_t j = 0; j < d; ++j) centers[c * d + j] = emb.row(item)[j];
  };
  auto dist_to = [&](std::size_t item, std::size_t c) {
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double t = emb.row(item)[j] - centers[c * d + j];
      s += t * t;
    }
    return s;
  };

  std::mt19937_64 rng(seed);
  set_center(0, std::uniform_int_distribution<std::size_t>(0, n - 1)(rng));
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  for (std::size_t c = 1; c < clusters; ++c) {
    std::size_t far = 0;
    double best = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], dist_to(i, c - 1));
      if (nearest[i] > best) {
        best = nearest[i];
        far = i;
      }
    }
    set_center(c, far);
  }

  KMeansResult out;
  out.assignment.assign(n, -1);
  for (int it = 1; it <= max_iter; ++it) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      int arg = 0;
      double best = dist_to(i, 0);
      for (std::size_t c = 1; c < clusters; ++c) {
        const double v = dist_to(i, c);
        if (v < best) {
          best = v;
          arg = static_cast<int>(c);
        }
      }
      if (out.assignment[i] != arg) {
        out.assignment[i] = arg;
        changed = true;
      }
    }
    out.iterations = it;
    if (!changed) break;
    std::vector<double> sum(clusters * d, 0.0);
    std::vector<std::size_t> count(clusters, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = static_cast<std::size_t>(out.assignment[i]);
      ++count[c];
      for (std::size_t j = 0; j < d; ++j) sum[c * d + j] += emb.row(i)[j];
    }
    // Empty clusters keep their previous center.
    for (std::size_t c = 0; c < clusters; ++c)
      if (count[c] > 0)
        for (std::size_t j = 0; j < d; ++j) centers[c * d + j] = sum[c * d + j] / static_cast<double>(count[c]);
  }
  for (std::size_t i = 0; i < n; ++i) out.inertia += dist_to(i, static_cast<std::size_t>(out.assignment[i]));
  return out;
}

enum class NmiNormalizer { arithmetic, geometric };

/// Mutual information over a normalizer of the two entropies; 0/0 is 0.
inline double nmi(std::span<const int> a, std::span<const int> b, NmiNormalizer norm = NmiNormalizer::arithmetic) {
  if (a.size() != b.size()) throw error(errc::length_mismatch, "nmi inputs differ in length");
  if (a.empty()) throw error(errc::length_mismatch, "nmi needs at least one item");
  const double n = static_cast<double>(a.size());
  std::map<int, double> ca, cb;
  std::map<std::pair<int, int>, double> joint;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ca[a[i]] += 1;
    cb[b[i]] += 1;
    joint[{a[i], b[i]}] += 1;
  }
  auto entropy = [&](const std::map<int, double>& c) {
    double h = 0.0;
    for (const auto& [_, v] : c) h -= (v / n) * std::log(v / n);
    return h;
  };
  double mi = 0.0;
  for (const auto& [key, v] : joint) mi += (v / n) * std::log(n * v / (ca[key.first] * cb[key.second]));
  const double ha = entropy(ca), hb = entropy(cb);
  const double denom = norm == NmiNormalizer::arithmetic ? 0.5 * (ha + hb) : std::sqrt(ha * hb);
  if (denom <= 0.0) return 0.0;
  return std::clamp(mi / denom, 0.0, 1.0);
}

/// Non-interpolated AP per query over same-label items, averaged over queries with a relevant item.
inline double mean_average_precision(const FeatureSet& emb, std::span<const int> labels) {
  detail::require_labels(emb, labels);
  double total = 0.0;
  std::size_t scored = 0;
  for (std::size_t q = 0; q < emb.n; ++q) {
    const auto order = detail::ranking(emb, q);
    double hits = 0.0, ap = 0.0;
    for (std::size_t r = 0; r < order.size(); ++r) {
      if (labels[order[r]] != labels[q]) continue;
      hits += 1.0;
      ap += hits / static_cast<double>(r + 1);
    }
    if (hits == 0.0) continue;
    total += ap / hits;
    ++scored;
  }
  return scored ? total / static_cast<double>(scored) : 0.0;
}

struct EvalReport {
  std::map<std::size_t, double> recall_at;
  double nmi = 0.0;
  std::optional<double> map_score;
  std::size_t n_queries = 0;
  std::uint64_t seed = 0;

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    nlohmann::ordered_json r = nlohmann::ordered_json::object();
    for (const auto& [k, v] : recall_at) r[std::to_string(k)] = v;
    j["recall_at"] = r;
    j["nmi"] = nmi;
    j["map_score"] = map_score ? nlohmann::ordered_json(*map_score) : nlohmann::ordered_json(nullptr);
    j["n_queries"] = n_queries;
    j["seed"] = seed;
    return j;
  }
};

/// Recall@k, NMI of k-means with one cluster per label, and optionally mAP.
inline EvalReport evaluate(const FeatureSet& emb, std::span<const int> labels, std::span<const std::size_t> ks,
                           std::uint64_t seed, bool with_map = true) {
  EvalReport report;
  const auto recalls = recall_at_k(emb, labels, ks);
  for (std::size_t i = 0; i < ks.size(); ++i) report.recall_at[ks[i]] = recalls[i];
  std::vector<int> distinct(labels.begin(), labels.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  const auto clusters = kmeans(emb, distinct.size(), seed);
  report.nmi = nmi(labels, clusters.assignment);
  if (with_map) report.map_score = mean_average_precision(emb, labels);
  report.n_queries = emb.n;
  report.seed = seed;
  return report;
}

}  // namespace mom
