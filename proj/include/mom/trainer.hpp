#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "mom/error.hpp"
#include "mom/loss.hpp"
#include "mom/mining.hpp"
#include "mom/model.hpp"

namespace mom {

enum class LossKind { contrastive, triplet };
enum class WeightNormalization { per_anchor_max, none };

struct TrainConfig {
  LossKind loss = LossKind::triplet;
  TripletForm triplet_form = TripletForm::standard;
  bool weighted = false;
  double margin = 0.5;
  double lr0 = 1e-2;
  double lr_decay = 0.1;
  int lr_step = 10;  // epochs between decays
  double momentum = 0.9;
  std::size_t batch_size = 42;
  int epochs = 30;
  std::uint64_t seed = 0;
  WeightNormalization weight_normalization = WeightNormalization::per_anchor_max;

  static double default_margin(LossKind kind) { return kind == LossKind::triplet ? 0.5 : 0.7; }

  void validate() const {
    if (!(margin > 0.0)) throw error(errc::bad_config, "train margin must be positive");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw error(errc::bad_config, "train momentum must lie in [0, 1)");
    if (!(lr0 > 0.0)) throw error(errc::bad_config, "train lr0 must be positive");
    if (lr_step < 1) throw error(errc::bad_config, "train lr_step must be positive");
    if (batch_size < 1) throw error(errc::bad_config, "train batch_size must be positive");
    if (epochs < 0) throw error(errc::bad_config, "train epochs must be non-negative");
  }

  double learning_rate(int epoch) const { return lr0 * std::pow(lr_decay, epoch / lr_step); }
};

/// v <- momentum v - lr g; theta <- theta + v.
inline void sgd_momentum_step(std::span<double> theta, std::span<const double> grad, std::span<double> velocity,
                              double lr, double momentum) {
  if (theta.size() != grad.size() || theta.size() != velocity.size())
    throw error(errc::dim_mismatch, "sgd step: parameter, gradient and velocity sizes differ");
  for (std::size_t i = 0; i < theta.size(); ++i) {
    velocity[i] = momentum * velocity[i] - lr * grad[i];
    theta[i] += velocity[i];
  }
}

/// Weight applied to a tuple's loss: 1 when unweighted, else s_m optionally
/// divided by the largest positive weight of the same anchor.
inline double tuple_weight(double s_m, double anchor_max, const TrainConfig& config) {
  if (!config.weighted) return 1.0;
  if (config.weight_normalization == WeightNormalization::none) return s_m;
  return anchor_max > 0.0 ? s_m / anchor_max : 1.0;
}

inline LossGrad tuple_loss(std::span<const double> zr, std::span<const double> zp, std::span<const double> zn,
                           const TrainConfig& config) {
  return config.loss == LossKind::contrastive ? contrastive_loss(zr, zp, zn, config.margin)
                                              : triplet_loss(zr, zp, zn, config.margin, config.triplet_form);
}

struct EpochLog {
  int epoch = 0;
  double mean_loss = 0.0;
  double lr = 0.0;
  std::size_t tuples_used = 0;
};

struct TrainResult {
  EmbeddingModel model;
  std::vector<EpochLog> log;
  std::vector<TrainingTuple> last_tuples;
};

/// splitmix64 finalizer, used to derive independent per-epoch streams from one seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline EmbeddingTable embed_items(const EmbeddingModel& model, const FeatureSet& features,
                                  std::span<const std::uint32_t> items) {
  EmbeddingTable table;
  table.dim = model.d_out;
  table.values.assign(features.n * model.d_out, 0.0);
  std::vector<double> x(features.d);
  for (auto id : items) {
    const auto r = features.row(id);
    std::copy(r.begin(), r.end(), x.begin());
    const auto z = forward(model, std::span<const double>(x));
    std::copy(z.begin(), z.end(), table.row(id).begin());
  }
  return table;
}

/// Trains on per-epoch tuples sampled from frozen pools. Single-threaded and
/// fully determined by config.seed.
inline TrainResult train(const FeatureSet& features, const TrainingPool& pool, EmbeddingModel model,
                         const TrainConfig& config, const MiningConfig& mining) {
  config.validate();
  if (model.d_in != features.d)
    throw error(errc::dim_mismatch, "model d_in=" + std::to_string(model.d_in) + " but features have d=" + std::to_string(features.d));
  if (pool.pools.empty()) throw error(errc::all_pools_empty, "training pool is empty");

  std::unordered_map<std::uint32_t, double> anchor_max;
  for (const auto& p : pool.pools) {
    double m = 0.0;
    for (const auto& e : p.positives) m = std::max(m, e.weight);
    anchor_max[p.anchor] = m;
  }

  TrainResult result;
  std::vector<double> velocity(model.params.size(), 0.0);
  std::vector<double> grad(model.params.size(), 0.0);
  std::vector<double> x(features.d);
  ForwardCache cr, cp, cn;
  auto fwd = [&](std::uint32_t id, ForwardCache& cache) {
    const auto r = features.row(id);
    std::copy(r.begin(), r.end(), x.begin());
    forward(model, std::span<const double>(x), cache);
  };

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const double lr = config.learning_rate(epoch);
    const auto table = embed_items(model, features, pool.items);
    auto sampled = sample_epoch_tuples(pool.pools, table, mining, mix_seed(config.seed, 2 * static_cast<std::uint64_t>(epoch)));
    auto& tuples = sampled.tuples;
    std::mt19937_64 shuffle_rng(mix_seed(config.seed, 2 * static_cast<std::uint64_t>(epoch) + 1));
    std::shuffle(tuples.begin(), tuples.end(), shuffle_rng);

    double loss_sum = 0.0;
    for (std::size_t start = 0; start < tuples.size(); start += config.batch_size) {
      const std::size_t end = std::min(tuples.size(), start + config.batch_size);
      std::fill(grad.begin(), grad.end(), 0.0);
      for (std::size_t t = start; t < end; ++t) {
        const auto& tup = tuples[t];
        fwd(tup.anchor, cr);
        fwd(tup.positive, cp);
        fwd(tup.negative, cn);
        const double w = tuple_weight(tup.weight, anchor_max[tup.anchor], config);
        const auto lg = apply_weight(tuple_loss(cr.z, cp.z, cn.z, config), w);
        loss_sum += lg.loss;
        if (lg.loss == 0.0) continue;
        backward(model, cr, lg.grad_r, grad);
        backward(model, cp, lg.grad_p, grad);
        backward(model, cn, lg.grad_n, grad);
      }
      const double scale = 1.0 / static_cast<double>(end - start);
      for (auto& g : grad) g *= scale;
      sgd_momentum_step(model.params, grad, velocity, lr, config.momentum);
    }
    EpochLog entry{epoch + 1, tuples.empty() ? 0.0 : loss_sum / static_cast<double>(tuples.size()), lr, tuples.size()};
    if (!std::isfinite(entry.mean_loss)) throw error(errc::diverged, "mean loss became non-finite at epoch " + std::to_string(epoch + 1));
    result.log.push_back(entry);
    if (epoch + 1 == config.epochs) result.last_tuples = tuples;
  }
  result.model = std::move(model);
  return result;
}

inline std::string encode_train_log(std::span<const EpochLog> log) {
  std::string out = "epoch,mean_loss,lr,tuples_used\n";
  char buf[128];
  for (const auto& e : log) {
    std::snprintf(buf, sizeof buf, "%d,%.9g,%.9g,%zu\n", e.epoch, e.mean_loss, e.lr, e.tuples_used);
    out += buf;
  }
  return out;
}

}  // namespace mom
