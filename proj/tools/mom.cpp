#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mom/config.hpp"
#include "mom/pipeline.hpp"

#ifndef MOM_VERSION
#define MOM_VERSION "unknown"
#endif

namespace {

using namespace mom;

/// Failures that are the caller's fault rather than the data's.
bool is_usage_error(errc code) { return code == errc::bad_config || code == errc::bad_spec; }

void require_file(const std::string& path, const char* what) {
  if (!std::filesystem::exists(path)) throw error(errc::io_error, std::string(what) + " file not found: " + path);
}

FeatureSet load_normalized(const std::string& path) {
  require_file(path, "features");
  return l2_normalize(load_features(path));
}

NeighborGraph load_graph_checked(const std::string& path, std::size_t expected_n) {
  require_file(path, "graph");
  auto graph = load_graph(path);
  if (expected_n && graph.n != expected_n)
    throw error(errc::dim_mismatch, path + ": graph has n=" + std::to_string(graph.n) + " but features have n=" +
                                        std::to_string(expected_n));
  return graph;
}

std::uint64_t pick_seed(const std::optional<std::uint64_t>& flag, std::uint64_t fallback) {
  if (flag) return *flag;
  if (auto env = seed_from_environment()) return *env;
  return fallback;
}

struct GenArgs {
  std::string out, labels, kind = "moons";
  int per_class = 100, classes = 2, dim = 16;
  double noise = 0.1, offset = 2.0;
  std::optional<std::uint64_t> seed;
};

int run_gen(const GenArgs& a) {
  SyntheticSpec spec;
  spec.kind = parse_manifold_kind(a.kind);
  spec.per_class = a.per_class;
  spec.classes = a.classes;
  spec.dim = a.dim;
  spec.noise = a.noise;
  spec.offset = a.offset;
  const auto seed = pick_seed(a.seed, 0);
  auto features = generate_synthetic(spec, seed);
  save_features(features, a.out);
  if (!a.labels.empty()) save_labels(*features.labels, a.labels);
  std::printf("gen: %s n=%zu d=%zu seed=%llu -> %s\n", a.kind.c_str(), features.n, features.d,
              static_cast<unsigned long long>(seed), a.out.c_str());
  return 0;
}

struct GraphArgs {
  std::string features, out;
  std::size_t k = 30;
  unsigned threads = 1;
};

int run_graph(const GraphArgs& a) {
  const auto features = load_normalized(a.features);
  const auto graph = build_reciprocal_graph(features, a.k, a.threads);
  save_graph(graph, a.out);
  std::size_t isolated = 0;
  for (std::size_t i = 0; i < graph.n; ++i) isolated += graph.degree_count(i) == 0;
  std::printf("graph: n=%zu k=%zu edges=%zu isolated=%zu -> %s\n", graph.n, graph.k, graph.edge_count(), isolated,
              a.out.c_str());
  return 0;
}

struct DiffuseArgs {
  std::string graph, out;
  std::size_t anchor = 0;
  DiffusionConfig config;
};

int run_diffuse(const DiffuseArgs& a) {
  const auto graph = load_graph_checked(a.graph, 0);
  const auto column = solve_column(normalize(graph, OperatorKind::symmetric), a.anchor, a.config);
  std::vector<std::size_t> order(column.values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return column.values[x] > column.values[y]; });
  std::string text;
  for (auto j : order) text += std::to_string(j) + " " + detail::fmt_g9(column.values[j]) + "\n";
  detail::write_file(a.out, text);
  std::printf("diffuse: anchor=%zu iterations=%d residual=%.3g converged=%s -> %s\n", a.anchor, column.iterations_used,
              column.residual_norm, column.converged ? "yes" : "no", a.out.c_str());
  return 0;
}

struct AnchorArgs {
  std::string graph, out;
  std::size_t count = 100;
  StationaryConfig config;
};

int run_anchors(const AnchorArgs& a) {
  const auto graph = load_graph_checked(a.graph, 0);
  const auto stationary = power_iteration(normalize(graph, OperatorKind::stochastic), a.config);
  const auto anchors = select_anchors(graph, stationary.pi, a.count);
  detail::write_file(a.out, encode_anchors(anchors));
  std::printf("anchors: %zu of %zu local maxima, power iteration %s after %d steps -> %s\n", anchors.size(),
              anchors.maxima_found, stationary.converged ? "converged" : "did not converge", stationary.iterations_used,
              a.out.c_str());
  return 0;
}

struct MineArgs {
  std::string features, graph, anchors, out;
  DiffusionConfig diffusion;
  MiningConfig mining;
  std::size_t max_pos = 0;
  unsigned threads = 1;
};

int run_mine(MineArgs a) {
  const auto features = load_normalized(a.features);
  const auto graph = load_graph_checked(a.graph, features.n);
  require_file(a.anchors, "anchors");
  const auto anchors = decode_anchors(detail::read_file(a.anchors), a.anchors);
  for (auto id : anchors.anchor_ids)
    if (id >= features.n) throw error(errc::dim_mismatch, a.anchors + ": anchor " + std::to_string(id) + " outside [0, n)");
  if (a.max_pos) a.mining.max_pos = a.max_pos;
  const auto pool = build_training_pool(anchors.anchor_ids, features, normalize(graph, OperatorKind::symmetric),
                                        a.diffusion, a.mining, a.threads);
  save_pools(pool.pools, a.out);
  std::printf("mine: %zu anchors kept, %zu dropped, %zu not converged, %zu items -> %s\n", pool.pools.size(), pool.dropped,
              pool.not_converged, pool.items.size(), a.out.c_str());
  return 0;
}

struct TrainArgs {
  std::string features, pools, out, log, tuples;
  RunConfig config;
  std::optional<std::uint64_t> seed;
};

int run_train(TrainArgs a) {
  const auto features = load_normalized(a.features);
  require_file(a.pools, "pools");
  auto pool = assemble_training_pool(load_pools(a.pools));
  for (auto id : pool.items)
    if (id >= features.n) throw error(errc::dim_mismatch, a.pools + ": item " + std::to_string(id) + " outside [0, n)");
  a.config.train_seed = pick_seed(a.seed, 0);
  const auto tc = a.config.train_config();
  auto result = train(features, pool, initial_model(a.config, features.d), tc, a.config.mining);
  save_model(result.model, a.out);
  if (!a.log.empty()) detail::write_file(a.log, encode_train_log(result.log));
  if (!a.tuples.empty()) detail::write_file(a.tuples, encode_tuples(result.last_tuples));
  const double first = result.log.empty() ? 0.0 : result.log.front().mean_loss;
  const double last = result.log.empty() ? 0.0 : result.log.back().mean_loss;
  std::printf("train: %d epochs, mean loss %.6g -> %.6g -> %s\n", tc.epochs, first, last, a.out.c_str());
  return 0;
}

struct EvalArgs {
  std::string features, labels, model, out;
  std::vector<std::size_t> ks{1, 2, 4, 8};
  bool map = false;
  std::optional<std::uint64_t> seed;
};

int run_eval(const EvalArgs& a) {
  auto features = load_normalized(a.features);
  require_file(a.labels, "labels");
  const auto labels = load_labels(a.labels, features.n);
  if (!a.model.empty()) {
    require_file(a.model, "model");
    features = embed(load_model(a.model), features);
  }
  const auto report = evaluate(features, labels, a.ks, pick_seed(a.seed, 0), a.map);
  const auto text = report.to_json().dump(2) + "\n";
  if (!a.out.empty()) detail::write_file(a.out, text);
  std::printf("eval: n=%zu recall@%zu=%.4f nmi=%.4f\n", report.n_queries, a.ks.front(), report.recall_at.at(a.ks.front()),
              report.nmi);
  return 0;
}

struct PipelineArgs {
  std::string config_path, out = "run";
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<int> rounds;
  std::string baseline, oracle;
  unsigned threads = 1;
};

int run_pipeline_command(const PipelineArgs& a) {
  RunConfig config;
  bool seed_in_file = false;
  if (!a.config_path.empty()) {
    require_file(a.config_path, "config");
    const auto text = detail::read_file(a.config_path);
    const auto j = nlohmann::ordered_json::parse(text, nullptr, false);
    if (j.is_discarded()) throw error(errc::parse_error, a.config_path + ": not valid JSON");
    config = config_from_json(j);
    seed_in_file = j.contains("seed");
  }
  for (const auto& o : a.overrides) apply_override(config, o);
  if (a.seed) {
    config.seed = *a.seed;
  } else if (!seed_in_file) {
    if (auto env = seed_from_environment()) config.seed = *env;
  }
  if (a.rounds) config.rounds = *a.rounds;
  if (!a.baseline.empty()) {
    if (a.baseline != "euclidean") throw error(errc::bad_config, "--baseline accepts only euclidean");
    config.mining_source = "euclidean";
  }
  if (!a.oracle.empty()) config.mining_oracle = a.oracle;
  const auto result = run_pipeline(config, a.threads);
  write_pipeline_outputs(result, a.out);
  const auto r1 = [](const EvalReport& r) { return r.recall_at.empty() ? 0.0 : r.recall_at.begin()->second; };
  std::printf("pipeline: %d round(s), %zu anchors, recall@%zu %.4f -> %.4f, nmi %.4f -> %.4f -> %s\n", config.rounds,
              result.run.last_round.pool.pools.size(), result.final.recall_at.begin()->first, r1(result.initial),
              r1(result.final), result.initial.nmi, result.final.nmi, a.out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hard training-example mining on data manifolds"};
  app.set_version_flag("--version", std::string("mom ") + MOM_VERSION);
  app.require_subcommand(1);

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a labeled synthetic feature set");
  gen_cmd->add_option("--out", gen.out, "Output feature file")->required();
  gen_cmd->add_option("--labels", gen.labels, "Output labels sidecar");
  gen_cmd->add_option("--kind", gen.kind, "moons, circles, swiss-roll or clusters");
  gen_cmd->add_option("--per-class", gen.per_class)->check(CLI::PositiveNumber);
  gen_cmd->add_option("--classes", gen.classes)->check(CLI::PositiveNumber);
  gen_cmd->add_option("--dim", gen.dim)->check(CLI::PositiveNumber);
  gen_cmd->add_option("--noise", gen.noise)->check(CLI::NonNegativeNumber);
  gen_cmd->add_option("--offset", gen.offset);
  gen_cmd->add_option("--seed", gen.seed);

  GraphArgs graph;
  auto* graph_cmd = app.add_subcommand("graph", "Build the reciprocal kNN graph");
  graph_cmd->add_option("--features", graph.features)->required();
  graph_cmd->add_option("--out", graph.out)->required();
  graph_cmd->add_option("--k", graph.k)->check(CLI::PositiveNumber);
  graph_cmd->add_option("--threads", graph.threads)->check(CLI::PositiveNumber);

  DiffuseArgs diffuse;
  auto* diffuse_cmd = app.add_subcommand("diffuse", "Solve one manifold-similarity column");
  diffuse_cmd->add_option("--graph", diffuse.graph)->required();
  diffuse_cmd->add_option("--anchor", diffuse.anchor)->required();
  diffuse_cmd->add_option("--out", diffuse.out)->required();
  diffuse_cmd->add_option("--alpha", diffuse.config.alpha);
  diffuse_cmd->add_option("--tol", diffuse.config.tolerance);
  diffuse_cmd->add_option("--max-iter", diffuse.config.max_iterations);

  AnchorArgs anchors;
  auto* anchors_cmd = app.add_subcommand("anchors", "Select anchors from the stationary distribution");
  anchors_cmd->add_option("--graph", anchors.graph)->required();
  anchors_cmd->add_option("--out", anchors.out)->required();
  anchors_cmd->add_option("--count", anchors.count)->check(CLI::PositiveNumber);
  anchors_cmd->add_option("--tol", anchors.config.tolerance);
  anchors_cmd->add_option("--max-iter", anchors.config.max_iterations);
  anchors_cmd->add_option("--damping", anchors.config.damping);

  MineArgs mine;
  auto* mine_cmd = app.add_subcommand("mine", "Mine positive and negative pools per anchor");
  mine_cmd->add_option("--features", mine.features)->required();
  mine_cmd->add_option("--graph", mine.graph)->required();
  mine_cmd->add_option("--anchors", mine.anchors)->required();
  mine_cmd->add_option("--out", mine.out)->required();
  mine_cmd->add_option("--alpha", mine.diffusion.alpha);
  mine_cmd->add_option("--tol", mine.diffusion.tolerance);
  mine_cmd->add_option("--max-iter", mine.diffusion.max_iterations);
  mine_cmd->add_option("--k-pos", mine.mining.k_pos);
  mine_cmd->add_option("--k-neg", mine.mining.k_neg);
  mine_cmd->add_option("--max-pos", mine.max_pos, "0 keeps every positive");
  mine_cmd->add_option("--max-neg", mine.mining.max_neg);
  mine_cmd->add_option("--threads", mine.threads)->check(CLI::PositiveNumber);

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Train the embedding on mined pools");
  train_cmd->add_option("--features", tr.features)->required();
  train_cmd->add_option("--pools", tr.pools)->required();
  train_cmd->add_option("--out", tr.out)->required();
  train_cmd->add_option("--log", tr.log, "Training log CSV");
  train_cmd->add_option("--tuples", tr.tuples, "Last epoch tuples JSONL");
  train_cmd->add_option("--loss", tr.config.train_loss, "triplet or contrastive");
  train_cmd->add_option("--triplet-form", tr.config.train_triplet_form, "standard or literal");
  train_cmd->add_flag("--weighted", tr.config.train_weighted);
  train_cmd->add_option("--margin", tr.config.train_margin);
  train_cmd->add_option("--lr0", tr.config.train_lr0);
  train_cmd->add_option("--momentum", tr.config.train_momentum);
  train_cmd->add_option("--batch-size", tr.config.train_batch_size);
  train_cmd->add_option("--epochs", tr.config.train_epochs);
  train_cmd->add_option("--hard-subset", tr.config.mining.hard_subset_size);
  train_cmd->add_option("--model", tr.config.model_kind, "linear or mlp");
  train_cmd->add_option("--init", tr.config.model_init, "identity or random");
  train_cmd->add_option("--d-out", tr.config.model_d_out);
  train_cmd->add_option("--hidden", tr.config.model_hidden);
  train_cmd->add_option("--seed", tr.seed);

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate features or a model's embedding");
  eval_cmd->add_option("--features", ev.features)->required();
  eval_cmd->add_option("--labels", ev.labels)->required();
  eval_cmd->add_option("--model", ev.model);
  eval_cmd->add_option("--out", ev.out, "Report JSON");
  eval_cmd->add_option("--k", ev.ks)->delimiter(',')->check(CLI::PositiveNumber);
  eval_cmd->add_flag("--map", ev.map);
  eval_cmd->add_option("--seed", ev.seed);

  PipelineArgs pipe;
  auto* pipe_cmd = app.add_subcommand("pipeline", "Generate or load, mine, train and evaluate");
  pipe_cmd->add_option("--config", pipe.config_path, "Flat dotted-key JSON config");
  pipe_cmd->add_option("--out", pipe.out, "Artifact directory");
  pipe_cmd->add_option("--set", pipe.overrides, "key=value override, repeatable");
  pipe_cmd->add_option("--seed", pipe.seed);
  pipe_cmd->add_option("--rounds", pipe.rounds)->check(CLI::PositiveNumber);
  pipe_cmd->add_option("--baseline", pipe.baseline, "euclidean");
  pipe_cmd->add_option("--oracle", pipe.oracle, "positive or negative");
  pipe_cmd->add_option("--threads", pipe.threads)->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*gen_cmd) return run_gen(gen);
    if (*graph_cmd) return run_graph(graph);
    if (*diffuse_cmd) return run_diffuse(diffuse);
    if (*anchors_cmd) return run_anchors(anchors);
    if (*mine_cmd) return run_mine(mine);
    if (*train_cmd) return run_train(tr);
    if (*eval_cmd) return run_eval(ev);
    if (*pipe_cmd) return run_pipeline_command(pipe);
  } catch (const mom::error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
    return is_usage_error(e.code()) ? 1 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
