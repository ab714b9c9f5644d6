#pragma once

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mom/error.hpp"
#include "mom/feature_io.hpp"
#include "mom/rounds.hpp"
#include "mom/synthetic.hpp"
#include "mom/trainer.hpp"

namespace mom {

/// Every knob of a pipeline run. Serialized as a flat JSON object with dotted
/// keys ("graph.k": 30). Seeds left unset fall back to the global seed.
struct RunConfig {
  std::uint64_t seed = 0;
  int rounds = 1;

  std::string data_source = "moons";  // a manifold kind or "file"
  int data_per_class = 250;
  int data_classes = 2;
  int data_dim = 16;
  double data_noise = 0.1;
  double data_offset = 2.0;
  std::string data_features;
  std::string data_labels;
  double data_test_fraction = 0.5;
  std::size_t data_whiten_dims = 0;  // 0 disables PCA whitening
  std::optional<std::uint64_t> data_seed;
  std::optional<std::uint64_t> split_seed;

  std::size_t graph_k = 30;

  DiffusionConfig diffusion;
  StationaryConfig stationary;

  std::size_t anchors_count = 100;
  bool anchors_all = false;

  MiningConfig mining;
  std::string mining_source = "mined";  // "mined" or "euclidean"
  std::size_t mining_baseline_k = 5;
  std::string mining_oracle = "none";  // "none", "positive" or "negative"
  bool mining_random_negatives = false;

  std::string model_kind = "linear";
  std::size_t model_d_out = 0;  // 0 means d_out = input dimension
  std::size_t model_hidden = 32;
  std::string model_init = "identity";  // "identity" or "random"

  std::string train_loss = "triplet";
  std::string train_triplet_form = "standard";
  bool train_weighted = false;
  std::optional<double> train_margin;
  double train_lr0 = 1e-2;
  double train_lr_decay = 0.1;
  int train_lr_step = 10;
  double train_momentum = 0.9;
  std::size_t train_batch_size = 42;
  int train_epochs = 30;
  std::string train_weight_normalization = "per_anchor_max";
  std::optional<std::uint64_t> train_seed;

  std::vector<std::size_t> eval_ks{1, 2, 4, 8};
  bool eval_map = true;
  std::optional<std::uint64_t> eval_seed;

  std::uint64_t resolved_data_seed() const { return data_seed.value_or(seed); }
  std::uint64_t resolved_split_seed() const { return split_seed.value_or(mix_seed(seed, 1)); }
  std::uint64_t resolved_train_seed() const { return train_seed.value_or(mix_seed(seed, 2)); }
  std::uint64_t resolved_eval_seed() const { return eval_seed.value_or(mix_seed(seed, 3)); }

  LossKind loss_kind() const {
    if (train_loss == "triplet") return LossKind::triplet;
    if (train_loss == "contrastive") return LossKind::contrastive;
    throw error(errc::bad_config, "train.loss must be triplet or contrastive, got " + train_loss);
  }

  double margin() const { return train_margin.value_or(TrainConfig::default_margin(loss_kind())); }

  SyntheticSpec synthetic_spec() const {
    SyntheticSpec spec;
    spec.kind = parse_manifold_kind(data_source);
    spec.per_class = data_per_class;
    spec.classes = data_classes;
    spec.dim = data_dim;
    spec.noise = data_noise;
    spec.offset = data_offset;
    return spec;
  }

  MiningSetup mining_setup() const {
    MiningSetup s;
    s.graph_k = graph_k;
    s.diffusion = diffusion;
    s.stationary = stationary;
    s.anchor_count = anchors_count;
    s.all_anchors = anchors_all;
    s.mining = mining;
    s.baseline_k = mining_baseline_k;
    s.random_negatives = mining_random_negatives;
    if (mining_source == "mined") {
      s.source = PoolSource::mined;
    } else if (mining_source == "euclidean") {
      s.source = PoolSource::baseline;
      // Baseline negatives are sampled uniformly, not from a hard window.
      s.mining.hard_subset_size = s.mining.max_neg;
    } else {
      throw error(errc::bad_config, "mining.source must be mined or euclidean, got " + mining_source);
    }
    if (mining_oracle == "positive") {
      s.oracle = OracleMode::positive;
    } else if (mining_oracle == "negative") {
      s.oracle = OracleMode::negative;
    } else if (mining_oracle != "none") {
      throw error(errc::bad_config, "mining.oracle must be none, positive or negative, got " + mining_oracle);
    }
    return s;
  }

  TrainConfig train_config() const {
    TrainConfig t;
    t.loss = loss_kind();
    if (train_triplet_form == "standard") {
      t.triplet_form = TripletForm::standard;
    } else if (train_triplet_form == "literal") {
      t.triplet_form = TripletForm::literal;
    } else {
      throw error(errc::bad_config, "train.triplet_form must be standard or literal, got " + train_triplet_form);
    }
    t.weighted = train_weighted;
    t.margin = margin();
    t.lr0 = train_lr0;
    t.lr_decay = train_lr_decay;
    t.lr_step = train_lr_step;
    t.momentum = train_momentum;
    t.batch_size = train_batch_size;
    t.epochs = train_epochs;
    t.seed = resolved_train_seed();
    if (train_weight_normalization == "per_anchor_max") {
      t.weight_normalization = WeightNormalization::per_anchor_max;
    } else if (train_weight_normalization == "none") {
      t.weight_normalization = WeightNormalization::none;
    } else {
      throw error(errc::bad_config, "train.weight_normalization must be per_anchor_max or none");
    }
    return t;
  }

  ModelKind model_kind_value() const {
    if (model_kind == "linear") return ModelKind::linear;
    if (model_kind == "mlp") return ModelKind::mlp;
    throw error(errc::bad_config, "model.kind must be linear or mlp, got " + model_kind);
  }

  /// Checks every enumerated string and numeric range without running anything.
  void validate() const {
    if (rounds < 1) throw error(errc::bad_config, "rounds must be at least 1");
    if (data_source != "file") synthetic_spec();
    if (!(data_test_fraction > 0.0 && data_test_fraction < 1.0))
      throw error(errc::bad_config, "data.test_fraction must lie in (0, 1)");
    if (graph_k < 1) throw error(errc::bad_config, "graph.k must be at least 1");
    if (anchors_count < 1) throw error(errc::bad_config, "anchors.count must be at least 1");
    if (eval_ks.empty()) throw error(errc::bad_config, "eval.ks must not be empty");
    for (auto k : eval_ks)
      if (k < 1) throw error(errc::bad_config, "eval.ks entries must be at least 1");
    if (model_init != "identity" && model_init != "random")
      throw error(errc::bad_config, "model.init must be identity or random, got " + model_init);
    diffusion.validate();
    mining_setup().mining.validate();
    train_config().validate();
    model_kind_value();
  }
};

namespace detail {

/// Binds one dotted key to a member so that reading and writing share a table.
template <class F>
void visit_config(RunConfig& c, F&& f) {
  f("seed", c.seed);
  f("rounds", c.rounds);
  f("data.source", c.data_source);
  f("data.per_class", c.data_per_class);
  f("data.classes", c.data_classes);
  f("data.dim", c.data_dim);
  f("data.noise", c.data_noise);
  f("data.offset", c.data_offset);
  f("data.features", c.data_features);
  f("data.labels", c.data_labels);
  f("data.test_fraction", c.data_test_fraction);
  f("data.whiten_dims", c.data_whiten_dims);
  f("data.seed", c.data_seed);
  f("data.split_seed", c.split_seed);
  f("graph.k", c.graph_k);
  f("diffusion.alpha", c.diffusion.alpha);
  f("diffusion.tolerance", c.diffusion.tolerance);
  f("diffusion.max_iterations", c.diffusion.max_iterations);
  f("anchors.count", c.anchors_count);
  f("anchors.all", c.anchors_all);
  f("anchors.tolerance", c.stationary.tolerance);
  f("anchors.max_iterations", c.stationary.max_iterations);
  f("anchors.damping", c.stationary.damping);
  f("mining.k_pos", c.mining.k_pos);
  f("mining.k_neg", c.mining.k_neg);
  f("mining.max_pos", c.mining.max_pos);
  f("mining.max_neg", c.mining.max_neg);
  f("mining.hard_subset", c.mining.hard_subset_size);
  f("mining.source", c.mining_source);
  f("mining.baseline_k", c.mining_baseline_k);
  f("mining.oracle", c.mining_oracle);
  f("mining.random_negatives", c.mining_random_negatives);
  f("model.kind", c.model_kind);
  f("model.d_out", c.model_d_out);
  f("model.hidden", c.model_hidden);
  f("model.init", c.model_init);
  f("train.loss", c.train_loss);
  f("train.triplet_form", c.train_triplet_form);
  f("train.weighted", c.train_weighted);
  f("train.margin", c.train_margin);
  f("train.lr0", c.train_lr0);
  f("train.lr_decay", c.train_lr_decay);
  f("train.lr_step", c.train_lr_step);
  f("train.momentum", c.train_momentum);
  f("train.batch_size", c.train_batch_size);
  f("train.epochs", c.train_epochs);
  f("train.weight_normalization", c.train_weight_normalization);
  f("train.seed", c.train_seed);
  f("eval.ks", c.eval_ks);
  f("eval.map", c.eval_map);
  f("eval.seed", c.eval_seed);
}

template <class T>
void read_value(const nlohmann::ordered_json& v, T& out) {
  out = v.get<T>();
}

template <class T>
void read_value(const nlohmann::ordered_json& v, std::optional<T>& out) {
  if (v.is_null()) {
    out.reset();
  } else {
    out = v.get<T>();
  }
}

template <class T>
nlohmann::ordered_json write_value(const T& v) {
  return nlohmann::ordered_json(v);
}

template <class T>
nlohmann::ordered_json write_value(const std::optional<T>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

}  // namespace detail

/// Flat JSON with every key present; unset optionals are null.
inline nlohmann::ordered_json config_to_json(const RunConfig& config) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  RunConfig copy = config;
  detail::visit_config(copy, [&](const char* key, auto& member) { j[key] = detail::write_value(member); });
  return j;
}

/// Applies one key. Unknown keys and type mismatches raise BadConfig.
inline void set_config_value(RunConfig& config, const std::string& key, const nlohmann::ordered_json& value) {
  bool found = false;
  detail::visit_config(config, [&](const char* k, auto& member) {
    if (key != k) return;
    found = true;
    try {
      detail::read_value(value, member);
    } catch (const nlohmann::json::exception&) {
      throw error(errc::bad_config, "config key " + key + " has the wrong type: " + value.dump());
    }
  });
  if (!found) throw error(errc::bad_config, "unknown config key " + key);
}

/// Applies every key of a flat JSON object on top of `base`.
inline RunConfig config_from_json(const nlohmann::ordered_json& j, RunConfig base = {}) {
  if (!j.is_object()) throw error(errc::bad_config, "config must be a JSON object");
  for (const auto& [key, value] : j.items()) set_config_value(base, key, value);
  return base;
}

/// Parses "key=value". The value is read as JSON when possible, else as a string.
inline void apply_override(RunConfig& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw error(errc::bad_config, "override must look like key=value: " + assignment);
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  auto value = nlohmann::ordered_json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  set_config_value(config, key, value);
}

inline RunConfig load_config(const std::filesystem::path& path, RunConfig base = {}) {
  const auto text = detail::read_file(path);
  auto j = nlohmann::ordered_json::parse(text, nullptr, false);
  if (j.is_discarded()) throw error(errc::parse_error, path.string() + ": not valid JSON");
  return config_from_json(j, std::move(base));
}

inline void save_config(const RunConfig& config, const std::filesystem::path& path) {
  detail::write_file(path, config_to_json(config).dump(2) + "\n");
}

/// Seed from MOM_SEED, if set and numeric.
inline std::optional<std::uint64_t> seed_from_environment() {
  const char* v = std::getenv("MOM_SEED");
  if (!v || !*v) return std::nullopt;
  char* end = nullptr;
  const auto seed = std::strtoull(v, &end, 10);
  if (*end != '\0') throw error(errc::bad_config, std::string("MOM_SEED is not an unsigned integer: ") + v);
  return seed;
}

}  // namespace mom
