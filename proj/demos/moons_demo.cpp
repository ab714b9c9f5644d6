// Mines pools on noisy two-moons, trains a linear embedding and compares
// Recall@1 before and after.
#include <cstdio>

#include "mom/pipeline.hpp"

int main() {
  mom::RunConfig config;
  config.data_source = "moons";
  config.data_per_class = 240;
  config.data_noise = 0.5;
  config.anchors_all = true;
  config.diffusion.alpha = 0.8;
  config.train_weighted = true;
  config.data_seed = 7;
  config.split_seed = 99;
  config.train_seed = 3;

  const auto result = mom::run_pipeline(config);
  const auto& pools = result.run.last_round.pool;
  std::size_t positives = 0, negatives = 0;
  for (const auto& p : pools.pools) {
    positives += p.positives.size();
    negatives += p.negatives.size();
  }
  std::printf("anchors %zu, positives %zu, negatives %zu\n", pools.pools.size(), positives, negatives);
  for (const auto& e : result.run.log)
    if (e.epoch % 10 == 0 || e.epoch == 1) std::printf("epoch %2d  loss %.4f  lr %.0e\n", e.epoch, e.mean_loss, e.lr);
  std::printf("Recall@1 %.4f -> %.4f\n", result.initial.recall_at.at(1), result.final.recall_at.at(1));
  std::printf("NMI      %.4f -> %.4f\n", result.initial.nmi, result.final.nmi);
}
