#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "mom/config.hpp"
#include "mom/eval.hpp"
#include "mom/feature_io.hpp"
#include "mom/graph_io.hpp"
#include "mom/mining_io.hpp"
#include "mom/rounds.hpp"
#include "mom/synthetic.hpp"
#include "mom/whitening.hpp"

namespace mom {

/// Train and test splits. The train split carries no labels; its labels are
/// kept aside for oracle pools only.
struct PreparedData {
  FeatureSet train;
  FeatureSet test;
  std::vector<int> train_labels;
  std::vector<int> test_labels;
  std::optional<WhiteningTransform> whitening;
};

inline FeatureSet load_source_features(const RunConfig& config) {
  if (config.data_source != "file") return generate_synthetic(config.synthetic_spec(), config.resolved_data_seed());
  if (config.data_features.empty()) throw error(errc::bad_config, "data.source is file but data.features is empty");
  auto features = load_features(config.data_features);
  if (config.data_labels.empty()) throw error(errc::labels_missing, "evaluation needs data.labels");
  features.labels = load_labels(config.data_labels, features.n);
  return features;
}

/// Loads or generates, l2-normalizes, splits with a seeded shuffle and
/// optionally whitens with a transform fitted on the train split.
inline PreparedData prepare_data(const RunConfig& config) {
  auto all = l2_normalize(load_source_features(config));
  if (!all.labels) throw error(errc::labels_missing, "feature set has no labels");
  std::vector<std::uint32_t> perm(all.n);
  std::iota(perm.begin(), perm.end(), 0u);
  std::mt19937_64 rng(config.resolved_split_seed());
  std::shuffle(perm.begin(), perm.end(), rng);
  const auto n_test = static_cast<std::size_t>(std::llround(config.data_test_fraction * static_cast<double>(all.n)));
  if (n_test < 2 || n_test + 2 > all.n)
    throw error(errc::bad_config, "split leaves " + std::to_string(n_test) + " test items of " + std::to_string(all.n));
  const std::size_t n_train = all.n - n_test;
  const std::vector<std::uint32_t> train_ids(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
  const std::vector<std::uint32_t> test_ids(perm.begin() + static_cast<std::ptrdiff_t>(n_train), perm.end());

  PreparedData out;
  out.train = select_rows(all, train_ids);
  out.test = select_rows(all, test_ids);
  if (config.data_whiten_dims > 0) {
    out.whitening = pca_whiten_fit(out.train, config.data_whiten_dims);
    out.train = l2_normalize(out.whitening->apply(out.train));
    out.test = l2_normalize(out.whitening->apply(out.test));
  }
  out.train_labels = *out.train.labels;
  out.test_labels = *out.test.labels;
  out.train.labels.reset();
  return out;
}

inline EmbeddingModel initial_model(const RunConfig& config, std::size_t d_in) {
  const std::size_t d_out = config.model_d_out ? config.model_d_out : d_in;
  const auto kind = config.model_kind_value();
  if (kind == ModelKind::linear && config.model_init == "identity") return EmbeddingModel::linear_identity(d_in, d_out);
  return EmbeddingModel::random(kind, d_in, d_out, config.model_hidden, mix_seed(config.resolved_train_seed(), 7));
}

/// Copy with every seed and the margin made explicit.
inline RunConfig resolve_config(RunConfig config) {
  config.data_seed = config.resolved_data_seed();
  config.split_seed = config.resolved_split_seed();
  config.train_seed = config.resolved_train_seed();
  config.eval_seed = config.resolved_eval_seed();
  config.train_margin = config.margin();
  return config;
}

struct PipelineResult {
  RunConfig config;
  PreparedData data;
  AlternatingResult run;
  EvalReport initial;
  EvalReport final;
  std::vector<EvalReport> per_round;
};

/// Mines, trains and evaluates on the test split. Deterministic for threads = 1.
inline PipelineResult run_pipeline(const RunConfig& config, unsigned threads = 1) {
  PipelineResult out;
  out.config = resolve_config(config);
  out.config.validate();
  out.data = prepare_data(out.config);
  const auto& c = out.config;
  const auto eval_seed = c.resolved_eval_seed();
  out.initial = evaluate(out.data.test, out.data.test_labels, c.eval_ks, eval_seed, c.eval_map);
  out.run = alternate_rounds(out.data.train, c.rounds, c.mining_setup(), c.train_config(),
                             initial_model(c, out.data.train.d), threads, out.data.train_labels);
  for (const auto& snapshot : out.run.snapshots)
    out.per_round.push_back(evaluate(embed(snapshot, out.data.test), out.data.test_labels, c.eval_ks, eval_seed, c.eval_map));
  out.final = out.per_round.back();
  return out;
}

inline std::string encode_rounds(const PipelineResult& result) {
  std::string out = "round,pool_hash,anchors,items,dropped,stationary_converged,recall_at_1\n";
  char buf[256];
  for (std::size_t r = 0; r < result.run.rounds.size(); ++r) {
    const auto& s = result.run.rounds[r];
    const auto& rec = result.per_round[r].recall_at;
    const double r1 = rec.count(1) ? rec.at(1) : std::nan("");
    std::snprintf(buf, sizeof buf, "%d,%016llx,%zu,%zu,%zu,%d,%.9g\n", s.round, static_cast<unsigned long long>(s.pool_hash),
                  s.anchors, s.items, s.dropped, s.stationary_converged ? 1 : 0, r1);
    out += buf;
  }
  return out;
}

/// Writes every artifact of a run into `dir`, creating it if needed.
inline void write_pipeline_outputs(const PipelineResult& result, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw error(errc::io_error, dir.string() + ": cannot create directory: " + ec.message());
  save_config(result.config, dir / "config.json");
  save_features(result.data.train, dir / "train.mom");
  save_labels(result.data.train_labels, dir / "train_labels.txt");
  save_features(result.data.test, dir / "test.mom");
  save_labels(result.data.test_labels, dir / "test_labels.txt");
  const auto& last = result.run.last_round;
  save_graph(last.graph, dir / "graph.txt");
  detail::write_file(dir / "anchors.txt", encode_anchors(last.anchors));
  save_pools(last.pool.pools, dir / "pools.jsonl");
  detail::write_file(dir / "tuples.jsonl", encode_tuples(result.run.last_tuples));
  save_model(result.run.model, dir / "model.mom");
  detail::write_file(dir / "train_log.csv", encode_train_log(result.run.log));
  detail::write_file(dir / "report_initial.json", result.initial.to_json().dump(2) + "\n");
  detail::write_file(dir / "report.json", result.final.to_json().dump(2) + "\n");
  detail::write_file(dir / "rounds.csv", encode_rounds(result));
}

}  // namespace mom
