#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mom/anchors.hpp"
#include "mom/diffusion.hpp"
#include "mom/graph.hpp"
#include "mom/mining.hpp"
#include "mom/mining_io.hpp"
#include "mom/model.hpp"
#include "mom/trainer.hpp"

namespace mom {

enum class PoolSource { mined, baseline };

/// Everything needed to go from a feature set to a frozen training pool.
struct MiningSetup {
  std::size_t graph_k = 30;
  DiffusionConfig diffusion;
  StationaryConfig stationary;
  std::size_t anchor_count = 100;
  bool all_anchors = false;
  MiningConfig mining;
  PoolSource source = PoolSource::mined;
  std::size_t baseline_k = 5;
  std::optional<OracleMode> oracle;
  /// Replace mined or baseline negatives with a uniform random draw.
  bool random_negatives = false;
};

struct MiningRound {
  NeighborGraph graph;
  StationaryDistribution stationary;
  AnchorSet anchors;
  TrainingPool pool;
};

/// Graph, anchors and pools on `features`, which must be l2-normalized and
/// carry no labels. `labels` is consulted only when setup.oracle is set.
inline MiningRound mine_round(const FeatureSet& features, const MiningSetup& setup, std::uint64_t seed,
                              unsigned threads = 1, std::span<const int> labels = {}) {
  if (features.has_labels()) throw error(errc::bad_config, "mining must not see labels");
  if (setup.oracle && labels.size() != features.n) throw error(errc::labels_missing, "oracle pools need labels");
  setup.mining.validate();

  MiningRound round;
  round.graph = build_reciprocal_graph(features, std::min(setup.graph_k, features.n - 1), threads);
  const auto transition = normalize(round.graph, OperatorKind::stochastic);
  round.stationary = power_iteration(transition, setup.stationary);

  if (setup.all_anchors) {
    for (std::size_t i = 0; i < features.n; ++i) {
      round.anchors.anchor_ids.push_back(static_cast<std::uint32_t>(i));
      round.anchors.pi_values.push_back(round.stationary.pi[i]);
    }
    round.anchors.maxima_found = features.n;
  } else {
    round.anchors = select_anchors(round.graph, round.stationary.pi, setup.anchor_count);
  }

  const auto& ids = round.anchors.anchor_ids;
  std::vector<AnchorPools> per_anchor(ids.size());
  if (setup.source == PoolSource::mined) {
    const auto affinity = normalize(round.graph, OperatorKind::symmetric);
    parallel_for(ids.size(), threads, [&](std::size_t a) {
      per_anchor[a] = mine_anchor(ids[a], features, affinity, setup.diffusion, setup.mining);
    });
  } else {
    parallel_for(ids.size(), threads, [&](std::size_t a) {
      per_anchor[a] = baseline_pools(ids[a], features, setup.baseline_k, setup.mining.max_neg, seed);
    });
  }
  if (setup.random_negatives)
    for (auto& p : per_anchor) p = random_negative_pools(p, features, setup.mining.max_neg, seed);
  if (setup.oracle)
    for (auto& p : per_anchor) p = oracle_pools(p, features, labels, *setup.oracle, setup.mining);
  round.pool = assemble_training_pool(std::move(per_anchor));
  return round;
}

struct RoundSummary {
  int round = 0;
  std::uint64_t pool_hash = 0;
  std::size_t anchors = 0;
  std::size_t items = 0;
  std::size_t dropped = 0;
  bool stationary_converged = false;
};

struct AlternatingResult {
  EmbeddingModel model;
  std::vector<RoundSummary> rounds;
  std::vector<EpochLog> log;
  std::vector<TrainingTuple> last_tuples;
  MiningRound last_round;
  /// Model after each round, for per-round evaluation.
  std::vector<EmbeddingModel> snapshots;
};

/// Round 1 mines on `features`; later rounds mine on the current embedding of
/// the same items and keep training the same model on the original inputs.
inline AlternatingResult alternate_rounds(const FeatureSet& features, int rounds, const MiningSetup& setup,
                                          const TrainConfig& train_config, EmbeddingModel model,
                                          unsigned threads = 1, std::span<const int> labels = {}) {
  if (rounds < 1) throw error(errc::bad_config, "rounds must be at least 1");
  AlternatingResult out;
  for (int r = 1; r <= rounds; ++r) {
    const FeatureSet space = r == 1 ? features : embed(model, features);
    auto mined = mine_round(space, setup, mix_seed(train_config.seed, 1000 + static_cast<std::uint64_t>(r)), threads, labels);
    TrainConfig tc = train_config;
    if (r > 1) tc.seed = mix_seed(train_config.seed, 2000 + static_cast<std::uint64_t>(r));
    auto trained = train(features, mined.pool, std::move(model), tc, setup.mining);
    model = std::move(trained.model);
    out.rounds.push_back({r, pool_hash(mined.pool.pools), mined.pool.pools.size(), mined.pool.items.size(),
                          mined.pool.dropped, mined.stationary.converged});
    out.log.insert(out.log.end(), trained.log.begin(), trained.log.end());
    out.last_tuples = std::move(trained.last_tuples);
    out.last_round = std::move(mined);
    out.snapshots.push_back(model);
  }
  out.model = std::move(model);
  return out;
}

}  // namespace mom
