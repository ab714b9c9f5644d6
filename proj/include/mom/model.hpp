#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "mom/error.hpp"
#include "mom/feature_io.hpp"
#include "mom/features.hpp"

namespace mom {

enum class ModelKind : std::uint32_t { linear = 0, mlp = 1 };

/// f(x; theta): affine map (linear) or affine-ReLU-affine (mlp), followed by
/// l2 normalization. Parameters are laid out layer by layer, each layer as a
/// row-major weight matrix followed by its bias.
struct EmbeddingModel {
  ModelKind kind = ModelKind::linear;
  std::size_t d_in = 0;
  std::size_t d_out = 0;
  std::size_t hidden = 0;  // mlp only
  std::vector<double> params;

  static std::size_t parameter_count(ModelKind kind, std::size_t d_in, std::size_t d_out, std::size_t hidden) {
    if (kind == ModelKind::linear) return d_out * d_in + d_out;
    return hidden * d_in + hidden + d_out * hidden + d_out;
  }
  std::size_t parameter_count() const { return parameter_count(kind, d_in, d_out, hidden); }

  /// Identity on the first min(d_in, d_out) coordinates, zero bias.
  static EmbeddingModel linear_identity(std::size_t d_in, std::size_t d_out) {
    EmbeddingModel m{ModelKind::linear, d_in, d_out, 0, {}};
    m.params.assign(m.parameter_count(), 0.0);
    for (std::size_t i = 0; i < std::min(d_in, d_out); ++i) m.params[i * d_in + i] = 1.0;
    return m;
  }

  /// Gaussian weights with std 1/sqrt(fan_in), zero biases.
  static EmbeddingModel random(ModelKind kind, std::size_t d_in, std::size_t d_out, std::size_t hidden,
                               std::uint64_t seed) {
    EmbeddingModel m{kind, d_in, d_out, kind == ModelKind::mlp ? hidden : 0, {}};
    if (kind == ModelKind::mlp && hidden == 0) throw error(errc::bad_config, "mlp needs hidden > 0");
    m.params.assign(m.parameter_count(), 0.0);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto fill = [&](std::size_t offset, std::size_t rows, std::size_t cols) {
      const double scale = 1.0 / std::sqrt(static_cast<double>(cols));
      for (std::size_t i = 0; i < rows * cols; ++i) m.params[offset + i] = scale * gauss(rng);
    };
    if (kind == ModelKind::linear) {
      fill(0, d_out, d_in);
    } else {
      fill(0, m.hidden, d_in);
      fill(m.hidden * d_in + m.hidden, d_out, m.hidden);
    }
    return m;
  }
};

/// Intermediate values of one forward pass, kept for backpropagation.
struct ForwardCache {
  std::vector<double> input;
  std::vector<double> hidden_pre;  // mlp only
  std::vector<double> hidden;      // mlp only
  std::vector<double> output_pre;  // u before normalization
  std::vector<double> z;
  double norm = 0.0;
};

namespace detail {

inline void affine(std::span<const double> w, std::span<const double> b, std::span<const double> x,
                   std::span<double> y) {
  const std::size_t cols = x.size();
  for (std::size_t i = 0; i < y.size(); ++i) {
    double s = b[i];
    for (std::size_t j = 0; j < cols; ++j) s += w[i * cols + j] * x[j];
    y[i] = s;
  }
}

}  // namespace detail

inline void forward(const EmbeddingModel& model, std::span<const double> x, ForwardCache& cache) {
  if (x.size() != model.d_in)
    throw error(errc::dim_mismatch, "model expects d_in=" + std::to_string(model.d_in) + ", got " + std::to_string(x.size()));
  const std::span<const double> p(model.params);
  cache.input.assign(x.begin(), x.end());
  cache.output_pre.assign(model.d_out, 0.0);
  if (model.kind == ModelKind::linear) {
    detail::affine(p.subspan(0, model.d_out * model.d_in), p.subspan(model.d_out * model.d_in, model.d_out), x,
                   cache.output_pre);
  } else {
    const std::size_t h = model.hidden;
    cache.hidden_pre.assign(h, 0.0);
    detail::affine(p.subspan(0, h * model.d_in), p.subspan(h * model.d_in, h), x, cache.hidden_pre);
    cache.hidden.resize(h);
    for (std::size_t i = 0; i < h; ++i) cache.hidden[i] = cache.hidden_pre[i] > 0.0 ? cache.hidden_pre[i] : 0.0;
    const std::size_t off = h * model.d_in + h;
    detail::affine(p.subspan(off, model.d_out * h), p.subspan(off + model.d_out * h, model.d_out), cache.hidden,
                   cache.output_pre);
  }
  double sq = 0.0;
  for (double v : cache.output_pre) sq += v * v;
  cache.norm = std::sqrt(sq);
  if (!std::isfinite(cache.norm)) throw error(errc::diverged, "embedding became non-finite");
  if (!(cache.norm >= 1e-12)) throw error(errc::degenerate_output, "embedding norm below 1e-12 before normalization");
  cache.z.resize(model.d_out);
  for (std::size_t i = 0; i < model.d_out; ++i) cache.z[i] = cache.output_pre[i] / cache.norm;
}

inline std::vector<double> forward(const EmbeddingModel& model, std::span<const double> x) {
  ForwardCache cache;
  forward(model, x, cache);
  return std::move(cache.z);
}

inline std::vector<double> forward(const EmbeddingModel& model, std::span<const float> x) {
  std::vector<double> xd(x.begin(), x.end());
  return forward(model, std::span<const double>(xd));
}

/// Gradient of z = u / |u| pulled back to u: (I - z z^T) dz / |u|.
inline std::vector<double> normalization_backward(std::span<const double> z, double norm, std::span<const double> dz) {
  double proj = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) proj += z[i] * dz[i];
  std::vector<double> du(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) du[i] = (dz[i] - proj * z[i]) / norm;
  return du;
}

/// Accumulates dL/dtheta into `grad` given dL/dz for the pass recorded in `cache`.
inline void backward(const EmbeddingModel& model, const ForwardCache& cache, std::span<const double> dz,
                     std::span<double> grad) {
  const auto du = normalization_backward(cache.z, cache.norm, dz);
  const auto& x = cache.input;
  if (model.kind == ModelKind::linear) {
    const std::size_t bias = model.d_out * model.d_in;
    for (std::size_t i = 0; i < model.d_out; ++i) {
      for (std::size_t j = 0; j < model.d_in; ++j) grad[i * model.d_in + j] += du[i] * x[j];
      grad[bias + i] += du[i];
    }
    return;
  }
  const std::size_t h = model.hidden;
  const std::size_t off = h * model.d_in + h;
  const std::size_t bias2 = off + model.d_out * h;
  std::vector<double> dh(h, 0.0);
  for (std::size_t i = 0; i < model.d_out; ++i) {
    for (std::size_t j = 0; j < h; ++j) {
      grad[off + i * h + j] += du[i] * cache.hidden[j];
      dh[j] += model.params[off + i * h + j] * du[i];
    }
    grad[bias2 + i] += du[i];
  }
  for (std::size_t j = 0; j < h; ++j) {
    if (cache.hidden_pre[j] <= 0.0) continue;
    for (std::size_t k = 0; k < model.d_in; ++k) grad[j * model.d_in + k] += dh[j] * x[k];
    grad[h * model.d_in + j] += dh[j];
  }
}

/// Normalized embeddings of every row of `features`.
inline FeatureSet embed(const EmbeddingModel& model, const FeatureSet& features) {
  FeatureSet out(features.n, model.d_out);
  out.labels = features.labels;
  for (std::size_t i = 0; i < features.n; ++i) {
    const auto z = forward(model, features.row(i));
    for (std::size_t j = 0; j < model.d_out; ++j) out.row(i)[j] = static_cast<float>(z[j]);
  }
  return l2_normalize(out);
}

/// "MOMM", u32 kind, d_in, d_out, hidden, then parameters as float32, all little-endian.
inline std::string encode_model(const EmbeddingModel& model) {
  std::string buf = "MOMM";
  detail::put_u32(buf, static_cast<std::uint32_t>(model.kind));
  detail::put_u32(buf, static_cast<std::uint32_t>(model.d_in));
  detail::put_u32(buf, static_cast<std::uint32_t>(model.d_out));
  detail::put_u32(buf, static_cast<std::uint32_t>(model.hidden));
  for (double v : model.params) detail::put_f32(buf, static_cast<float>(v));
  return buf;
}

inline EmbeddingModel decode_model(const std::string& bytes, const std::string& source = "<memory>") {
  if (bytes.size() < 4 || bytes.compare(0, 4, "MOMM") != 0)
    throw error(errc::bad_magic, source + ": expected magic MOMM at byte 0");
  if (bytes.size() < 20) throw error(errc::truncated_file, source + ": header ends at byte " + std::to_string(bytes.size()));
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  EmbeddingModel m;
  const auto kind = detail::get_u32(p + 4);
  if (kind > 1) throw error(errc::parse_error, source + ": unknown model kind " + std::to_string(kind) + " at byte 4");
  m.kind = static_cast<ModelKind>(kind);
  m.d_in = detail::get_u32(p + 8);
  m.d_out = detail::get_u32(p + 12);
  m.hidden = detail::get_u32(p + 16);
  const std::size_t count = m.parameter_count();
  if (bytes.size() != 20 + 4 * count)
    throw error(errc::truncated_file, source + ": " + std::to_string(bytes.size()) + " bytes, architecture needs " +
                                          std::to_string(20 + 4 * count));
  m.params.resize(count);
  for (std::size_t i = 0; i < count; ++i) m.params[i] = detail::get_f32(p + 20 + 4 * i);
  return m;
}

inline void save_model(const EmbeddingModel& model, const std::filesystem::path& path) {
  detail::write_file(path, encode_model(model));
}

inline EmbeddingModel load_model(const std::filesystem::path& path) {
  return decode_model(detail::read_file(path), path.string());
}

}  // namespace mom
