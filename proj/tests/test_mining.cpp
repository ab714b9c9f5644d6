#include <algorithm>
#include <set>

#include <gtest/gtest.h>

#include "mom/dense_oracle.hpp"
#include "mom/mining.hpp"
#include "mom/mining_io.hpp"
#include "mom/synthetic.hpp"
#include "oracles.hpp"
#include "support.hpp"

namespace {

using namespace mom;
using support::code_of;

std::vector<std::uint32_t> ids(const std::vector<PoolEntry>& entries) {
  std::vector<std::uint32_t> out;
  for (const auto& e : entries) out.push_back(e.id);
  return out;
}

std::set<std::uint32_t> id_set(const std::vector<std::uint32_t>& v) { return {v.begin(), v.end()}; }

EmbeddingTable table_of(const FeatureSet& f) {
  EmbeddingTable t{f.d, std::vector<double>(f.data.begin(), f.data.end())};
  return t;
}

std::vector<double> column_of(const Eigen::MatrixXd& m, std::size_t i) {
  std::vector<double> out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index j = 0; j < m.rows(); ++j) out[static_cast<std::size_t>(j)] = m(j, static_cast<Eigen::Index>(i));
  return out;
}

struct Labeled {
  FeatureSet features;
  std::vector<int> labels;
};

Labeled unlabeled(const SyntheticSpec& spec, std::uint64_t seed) {
  auto f = l2_normalize(generate_synthetic(spec, seed));
  auto labels = *f.labels;
  f.labels.reset();
  return {std::move(f), std::move(labels)};
}

TEST(Pools, EmptyWhenRankingsCoincide) {
  const auto f = oracle::random_unit_features(40, 5, 3);
  const MiningConfig config{10, 10, std::nullopt, 50, 10};
  for (std::size_t a = 0; a < f.n; a += 5) {
    const auto manifold = oracle::euclidean_scores(f, a);
    const auto pools = pools_from_column(a, f, manifold, config);
    EXPECT_TRUE(pools.positives.empty());
    EXPECT_TRUE(pools.negatives.empty());
  }
}

TEST(Pools, MatchSetDefinitions) {
  const auto f = oracle::random_unit_features(80, 6, 12);
  const auto g = build_reciprocal_graph(f, 8);
  const auto op = normalize(g, OperatorKind::symmetric);
  const MiningConfig config{15, 25, std::nullopt, 50, 10};
  for (std::size_t a = 0; a < f.n; a += 4) {
    const auto col = solve_column(op, a, {0.99, 1e-12, 1000});
    const auto pools = pools_from_column(a, f, col.values, config);
    const auto nn_e_pos = id_set(oracle::scan_knn(f, a, 15)), nn_m_pos = id_set(oracle::top_k(col.values, a, 15));
    const auto nn_e_neg = id_set(oracle::scan_knn(f, a, 25)), nn_m_neg = id_set(oracle::top_k(col.values, a, 25));
    std::set<std::uint32_t> want_pos, want_neg;
    std::set_difference(nn_m_pos.begin(), nn_m_pos.end(), nn_e_pos.begin(), nn_e_pos.end(),
                        std::inserter(want_pos, want_pos.end()));
    std::set_difference(nn_e_neg.begin(), nn_e_neg.end(), nn_m_neg.begin(), nn_m_neg.end(),
                        std::inserter(want_neg, want_neg.end()));
    EXPECT_EQ(id_set(ids(pools.positives)), want_pos);
    EXPECT_EQ(id_set(ids(pools.negatives)), want_neg);
    EXPECT_FALSE(want_pos.count(static_cast<std::uint32_t>(a)));
    for (std::size_t r = 1; r < pools.positives.size(); ++r)
      EXPECT_GE(pools.positives[r - 1].weight, pools.positives[r].weight);
    for (std::size_t r = 1; r < pools.negatives.size(); ++r)
      EXPECT_GE(pools.negatives[r - 1].weight, pools.negatives[r].weight);
    for (const auto& e : pools.positives) EXPECT_EQ(e.weight, col.values[e.id]);
    for (const auto& e : pools.negatives) EXPECT_EQ(e.weight, euclidean_similarity(f.row(a), f.row(e.id)));
  }
}

TEST(Pools, NegativeCapKeepsHardest) {
  const auto f = oracle::random_unit_features(300, 4, 5);
  const auto op = normalize(build_reciprocal_graph(f, 10), OperatorKind::symmetric);
  MiningConfig wide{50, 200, std::nullopt, 1000, 10};
  MiningConfig capped = wide;
  capped.max_neg = 50;
  for (std::size_t a = 0; a < f.n; a += 30) {
    const auto col = solve_column(op, a, {0.99, 1e-10, 1000});
    const auto all = negative_pool(a, f, col.values, wide);
    const auto cut = negative_pool(a, f, col.values, capped);
    EXPECT_LE(cut.size(), 50u);
    EXPECT_EQ(cut.size(), std::min<std::size_t>(50, all.size()));
    EXPECT_TRUE(std::equal(cut.begin(), cut.end(), all.begin()));
  }
}

TEST(Pools, PositiveCapAndKClamp) {
  const auto f = oracle::random_unit_features(12, 3, 6);
  const auto op = normalize(build_reciprocal_graph(f, 3), OperatorKind::symmetric);
  const auto col = solve_column(op, 0, {0.99, 1e-12, 1000});
  // k_pos and k_neg above n - 1 clamp to n - 1, so both rankings cover every item.
  const auto pools = pools_from_column(0, f, col.values, {50, 100, std::nullopt, 50, 10});
  EXPECT_TRUE(pools.positives.empty());
  EXPECT_TRUE(pools.negatives.empty());
  MiningConfig small{6, 6, 1, 50, 10};
  EXPECT_LE(positive_pool(0, f, col.values, small).size(), 1u);
}

TEST(Pools, ConjugateGradientMatchesDenseOracle) {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const auto f = oracle::random_unit_features(60 + 10 * seed, 5, 40 + seed);
    const auto op = normalize(build_reciprocal_graph(f, 8), OperatorKind::symmetric);
    const auto dense = dense_oracle(op, 0.99);
    const MiningConfig config{10, 20, std::nullopt, 50, 10};
    for (std::size_t a = 0; a < f.n; a += 3) {
      const auto cg = mine_anchor(a, f, op, {0.99, 1e-12, 1000}, config);
      const auto ref = pools_from_column(a, f, column_of(dense, a), config);
      EXPECT_EQ(ids(cg.positives), ids(ref.positives)) << "seed " << seed << " anchor " << a;
      EXPECT_EQ(ids(cg.negatives), ids(ref.negatives)) << "seed " << seed << " anchor " << a;
    }
  }
}

TEST(Pools, ElbowAnchorSeesAcrossTheBend) {
  // Points along an L-shaped curve on the unit sphere in 3-d; the far arm is
  // reachable only through the corner.
  std::vector<std::vector<float>> rows;
  for (int i = 0; i < 4; ++i) rows.push_back({1.0f, 0.15f * static_cast<float>(i), 0.0f});
  for (int i = 1; i <= 4; ++i) rows.push_back({1.0f, 0.45f, 0.15f * static_cast<float>(i)});
  const auto f = l2_normalize(oracle::from_rows(rows));
  const auto op = normalize(build_reciprocal_graph(f, 2), OperatorKind::symmetric);
  const auto dense = dense_oracle(op, 0.9);
  const MiningConfig config{3, 3, std::nullopt, 50, 3};
  for (std::size_t a = 0; a < f.n; ++a) {
    const auto cg = mine_anchor(a, f, op, {0.9, 1e-12, 1000}, config);
    const auto ref = pools_from_column(a, f, column_of(dense, a), config);
    EXPECT_EQ(cg.positives.size(), ref.positives.size());
    EXPECT_EQ(ids(cg.positives), ids(ref.positives));
    EXPECT_EQ(ids(cg.negatives), ids(ref.negatives));
  }
}

TEST(Pools, ClusterPurity) {
  const auto data = unlabeled({ManifoldKind::clusters, 100, 3, 16, 0.2}, 11);
  const auto op = normalize(build_reciprocal_graph(data.features, 30), OperatorKind::symmetric);
  const MiningConfig config;
  double pos = 0, pos_ok = 0, neg = 0, neg_ok = 0;
  for (std::size_t a = 0; a < data.features.n; ++a) {
    const auto p = mine_anchor(a, data.features, op, {0.99, 1e-8, 500}, config);
    for (const auto& e : p.positives) pos += 1, pos_ok += data.labels[e.id] == data.labels[a];
    for (const auto& e : p.negatives) neg += 1, neg_ok += data.labels[e.id] != data.labels[a];
  }
  ASSERT_GT(pos, 0);
  ASSERT_GT(neg, 0);
  EXPECT_GE(pos_ok / pos, 0.9);
  EXPECT_GE(neg_ok / neg, 0.9);
}

TEST(Pools, MoonsPurity) {
  const auto data = unlabeled({ManifoldKind::moons, 100, 2, 16, 0.05}, 11);
  const auto op = normalize(build_reciprocal_graph(data.features, 30), OperatorKind::symmetric);
  const MiningConfig config;
  double pos = 0, pos_ok = 0, neg = 0, neg_ok = 0;
  for (std::size_t a = 0; a < data.features.n; ++a) {
    const auto p = mine_anchor(a, data.features, op, {0.99, 1e-8, 500}, config);
    for (const auto& e : p.positives) pos += 1, pos_ok += data.labels[e.id] == data.labels[a];
    for (const auto& e : p.negatives) neg += 1, neg_ok += data.labels[e.id] != data.labels[a];
    if (a == 0 || a == 50 || a == 99 || a == 150) {
      EXPECT_FALSE(p.positives.empty());
      EXPECT_FALSE(p.negatives.empty());
      for (const auto& e : p.positives) EXPECT_EQ(data.labels[e.id], data.labels[a]) << "anchor " << a;
      for (const auto& e : p.negatives) EXPECT_NE(data.labels[e.id], data.labels[a]) << "anchor " << a;
    }
  }
  EXPECT_GE(pos_ok / pos, 0.9);
  EXPECT_GE(neg_ok / neg, 0.9);
}

TEST(BaselinePools, PositivesAreEuclideanNeighbors) {
  const auto f = oracle::random_unit_features(100, 6, 2);
  for (std::size_t a = 0; a < f.n; a += 11) {
    const auto p = baseline_pools(a, f, 5, 50, 9);
    EXPECT_EQ(ids(p.positives), oracle::scan_knn(f, a, 5));
    for (const auto& e : p.positives) EXPECT_EQ(e.weight, euclidean_similarity(f.row(a), f.row(e.id)));
    EXPECT_EQ(p.negatives.size(), 50u);
    auto seen = id_set(ids(p.positives));
    seen.insert(static_cast<std::uint32_t>(a));
    for (const auto& e : p.negatives) EXPECT_TRUE(seen.insert(e.id).second);
    for (std::size_t r = 1; r < p.negatives.size(); ++r) EXPECT_GE(p.negatives[r - 1].weight, p.negatives[r].weight);
  }
}

TEST(BaselinePools, NoRoomForNegatives) {
  const auto f = oracle::random_unit_features(6, 3, 2);
  const auto p = baseline_pools(0, f, 5, 50, 1);
  EXPECT_EQ(p.positives.size(), 5u);
  EXPECT_TRUE(p.negatives.empty());
  EXPECT_FALSE(p.usable());
}

TEST(BaselinePools, SeededDraw) {
  const auto f = oracle::random_unit_features(200, 6, 2);
  EXPECT_EQ(baseline_pools(3, f, 5, 20, 1).negatives, baseline_pools(3, f, 5, 20, 1).negatives);
  EXPECT_NE(ids(baseline_pools(3, f, 5, 20, 1).negatives), ids(baseline_pools(3, f, 5, 20, 2).negatives));
  EXPECT_EQ(code_of([&] { baseline_pools(0, f, 0, 20, 1); }), errc::bad_config);
}

TEST(RandomNegativePools, KeepPositivesAndAvoidThem) {
  const auto f = oracle::random_unit_features(120, 5, 4);
  const auto base = baseline_pools(7, f, 10, 30, 1);
  const auto p = random_negative_pools(base, f, 30, 5);
  EXPECT_EQ(p.positives, base.positives);
  EXPECT_EQ(p.negatives.size(), 30u);
  const auto pos = id_set(ids(p.positives));
  for (const auto& e : p.negatives) {
    EXPECT_FALSE(pos.count(e.id));
    EXPECT_NE(e.id, 7u);
  }
}

TEST(OraclePools, PositiveModeUsesLabels) {
  const auto [f, labels] = oracle::random_labeled(60, 4, 3, 8);
  AnchorPools base{0, {}, {{5, 0.2}}};
  const auto p = oracle_pools(base, f, labels, OracleMode::positive, {});
  std::set<std::uint32_t> want;
  for (std::size_t j = 1; j < f.n; ++j)
    if (labels[j] == labels[0] && j != 5) want.insert(static_cast<std::uint32_t>(j));
  EXPECT_EQ(id_set(ids(p.positives)), want);
  for (const auto& e : p.positives) EXPECT_EQ(e.weight, 1.0);
  EXPECT_EQ(p.negatives, base.negatives);
}

TEST(OraclePools, NegativeModeKeepsHardestOtherLabel) {
  const auto [f, labels] = oracle::random_labeled(80, 4, 2, 9);
  MiningConfig config;
  config.max_neg = 7;
  AnchorPools base{1, {{2, 0.5}}, {}};
  const auto p = oracle_pools(base, f, labels, OracleMode::negative, config);
  std::vector<double> score = oracle::euclidean_scores(f, 1);
  for (std::size_t j = 0; j < f.n; ++j)
    if (labels[j] == labels[1] || j == 2) score[j] = -1.0;
  EXPECT_EQ(ids(p.negatives), oracle::top_k(score, 1, 7));
  EXPECT_EQ(p.positives, base.positives);
  EXPECT_EQ(code_of([&] { oracle_pools(base, f, std::vector<int>(3, 0), OracleMode::negative, config); }),
            errc::labels_missing);
}

TEST(TrainingPool, UnionAndDrops) {
  std::vector<AnchorPools> per_anchor{{4, {{1, 0.5}}, {{9, 0.1}}}, {2, {}, {}}, {7, {{4, 0.3}}, {}, true}};
  const auto tp = assemble_training_pool(per_anchor);
  EXPECT_EQ(tp.pools.size(), 2u);
  EXPECT_EQ(tp.dropped, 1u);
  EXPECT_EQ(tp.not_converged, 1u);
  EXPECT_EQ(tp.items, (std::vector<std::uint32_t>{1, 4, 7, 9}));
  EXPECT_EQ(code_of([] { assemble_training_pool({{0, {}, {}}}); }), errc::all_pools_empty);
}

TEST(HardWindow, ClosestFirstTiesByPosition) {
  const auto f = oracle::from_rows({{1, 0}, {0.9f, 0.1f}, {0, 1}, {0.9f, 0.1f}, {-1, 0}});
  const auto t = table_of(f);
  const AnchorPools p{0, {{1, 1.0}}, {{4, 0.0}, {3, 0.0}, {2, 0.0}, {1, 0.0}}};
  EXPECT_EQ(hard_window(p, t, 2), (std::vector<std::size_t>{1, 3}));
  EXPECT_EQ(hard_window(p, t, 10).size(), 4u);
}

TEST(SampleTuples, OnePerUsableAnchorFromWindow) {
  const auto f = oracle::random_unit_features(100, 6, 3);
  const auto t = table_of(f);
  std::vector<AnchorPools> pools;
  for (std::uint32_t a = 0; a < 20; ++a) pools.push_back(baseline_pools(a, f, 5, 30, 2));
  pools.push_back({50, {{51, 1.0}}, {}});
  MiningConfig config;
  config.hard_subset_size = 4;
  const auto epoch = sample_epoch_tuples(pools, t, config, 77);
  EXPECT_EQ(epoch.tuples.size(), 20u);
  EXPECT_EQ(epoch.skipped, 1u);
  for (std::size_t i = 0; i < epoch.tuples.size(); ++i) {
    const auto& tu = epoch.tuples[i];
    EXPECT_EQ(tu.anchor, pools[i].anchor);
    const auto pos = std::find_if(pools[i].positives.begin(), pools[i].positives.end(),
                                  [&](const PoolEntry& e) { return e.id == tu.positive; });
    ASSERT_NE(pos, pools[i].positives.end());
    EXPECT_EQ(tu.weight, pos->weight);
    std::set<std::uint32_t> window;
    for (auto k : hard_window(pools[i], t, 4)) window.insert(pools[i].negatives[k].id);
    EXPECT_TRUE(window.count(tu.negative));
  }
  EXPECT_EQ(sample_epoch_tuples(pools, t, config, 77).tuples, epoch.tuples);
  EXPECT_NE(sample_epoch_tuples(pools, t, config, 78).tuples, epoch.tuples);
}

TEST(SampleTuples, WindowOfOnePicksClosestNegative) {
  const auto f = oracle::random_unit_features(50, 4, 1);
  const auto t = table_of(f);
  const auto p = baseline_pools(0, f, 3, 40, 5);
  MiningConfig config;
  config.hard_subset_size = 1;
  const std::vector<AnchorPools> pools{p};
  const auto epoch = sample_epoch_tuples(pools, t, config, 1);
  ASSERT_EQ(epoch.tuples.size(), 1u);
  // Negatives are sorted by descending s_e, so the closest one comes first.
  EXPECT_EQ(epoch.tuples[0].negative, p.negatives.front().id);
}

TEST(SampleTuples, CollapsedNegativeStaysInWindow) {
  // A negative embedded on top of the anchor is at distance zero and always in the window.
  const auto f = oracle::from_rows({{1, 0}, {0, 1}, {1, 0}, {-1, 0}, {0, -1}});
  const auto t = table_of(f);
  const std::vector<AnchorPools> pools{{0, {{1, 1.0}}, {{3, 0.0}, {4, 0.0}, {2, 1.0}}}};
  MiningConfig config;
  config.hard_subset_size = 1;
  for (std::uint64_t s = 0; s < 5; ++s) EXPECT_EQ(sample_epoch_tuples(pools, t, config, s).tuples[0].negative, 2u);
}

TEST(MiningIO, PoolsRoundTrip) {
  const std::vector<AnchorPools> pools{{3, {{1, 0.25}, {2, 0.125}}, {{9, 0.5}}}, {5, {}, {{0, 1e-7}}}};
  const auto text = encode_pools(pools);
  EXPECT_EQ(text.substr(0, text.find('\n')), R"({"anchor":3,"positives":[[1,0.25],[2,0.125]],"negatives":[[9,0.5]]})");
  const auto back = decode_pools(text);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].positives, pools[0].positives);
  EXPECT_EQ(back[1].negatives, pools[1].negatives);
  EXPECT_EQ(encode_pools(back), text);
  EXPECT_EQ(code_of([] { decode_pools("{\"anchor\":1}\n"); }), errc::parse_error);
}

TEST(MiningIO, AnchorsRoundTrip) {
  AnchorSet a;
  a.anchor_ids = {4, 1};
  a.pi_values = {0.5, 0.25};
  const auto text = encode_anchors(a);
  EXPECT_EQ(text, "4 0.5\n1 0.25\n");
  const auto back = decode_anchors(text);
  EXPECT_EQ(back.anchor_ids, a.anchor_ids);
  EXPECT_EQ(back.pi_values, a.pi_values);
  EXPECT_EQ(code_of([] { decode_anchors("x 1\n"); }), errc::parse_error);
}

TEST(MiningIO, TuplesAndHash) {
  const std::vector<TrainingTuple> tuples{{1, 2, 3, 0.5}};
  EXPECT_EQ(encode_tuples(tuples), "{\"r\":1,\"p\":2,\"n\":3,\"w\":0.5}\n");
  const std::vector<AnchorPools> a{{0, {{1, 0.5}}, {{2, 0.5}}}};
  std::vector<AnchorPools> b = a;
  EXPECT_EQ(pool_hash(a), pool_hash(b));
  b[0].negatives[0].id = 3;
  EXPECT_NE(pool_hash(a), pool_hash(b));
}

}  // namespace
