#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mom/error.hpp"

namespace mom {

/// n x d row-major feature matrix. Item ids are the row indices 0..n-1.
/// Labels are evaluation-only; graph, mining and training code never reads them.
struct FeatureSet {
  std::size_t n = 0;
  std::size_t d = 0;
  std::vector<float> data;
  std::optional<std::vector<int>> labels;
  bool normalized = false;

  FeatureSet() = default;
  FeatureSet(std::size_t rows, std::size_t cols)
      : n(rows), d(cols), data(rows * cols, 0.0f) {}

  std::span<const float> row(std::size_t i) const { return {data.data() + i * d, d}; }
  std::span<float> row(std::size_t i) { return {data.data() + i * d, d}; }

  bool has_labels() const { return labels.has_value(); }

  /// Throws DimMismatch if the label vector does not match n.
  void check() const {
    if (data.size() != n * d)
      throw error(errc::dim_mismatch, "feature payload has " + std::to_string(data.size()) +
                                          " values, expected " + std::to_string(n * d));
    if (labels && labels->size() != n)
      throw error(errc::dim_mismatch, "labels have length " + std::to_string(labels->size()) +
                                          ", expected " + std::to_string(n));
  }
};

inline double dot(std::span<const float> a, std::span<const float> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * b[i];
  return s;
}

inline double squared_norm(std::span<const float> a) { return dot(a, a); }

/// Divides every row by its Euclidean norm. Rows that are already unit length
/// to single precision are left bit-identical, so the operation is idempotent.
inline FeatureSet l2_normalize(const FeatureSet& features) {
  FeatureSet out = features;
  constexpr double unit_slack = 4.0 * std::numeric_limits<float>::epsilon();
  for (std::size_t i = 0; i < out.n; ++i) {
    auto r = out.row(i);
    const double norm = std::sqrt(squared_norm(r));
    if (norm < 1e-12) throw error(errc::zero_vector, "row " + std::to_string(i) + " has zero norm");
    if (std::abs(norm - 1.0) <= unit_slack) continue;
    for (auto& v : r) v = static_cast<float>(v / norm);
  }
  out.normalized = true;
  return out;
}

/// Rows `ids` of `features`, in the given order, labels carried along.
inline FeatureSet select_rows(const FeatureSet& features, std::span<const std::uint32_t> ids) {
  FeatureSet out(ids.size(), features.d);
  out.normalized = features.normalized;
  if (features.labels) out.labels.emplace();
  for (std::size_t r = 0; r < ids.size(); ++r) {
    const auto src = features.row(ids[r]);
    std::copy(src.begin(), src.end(), out.row(r).begin());
    if (features.labels) out.labels->push_back((*features.labels)[ids[r]]);
  }
  return out;
}

}  // namespace mom
