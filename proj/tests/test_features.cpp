#include <cmath>
#include <cstring>
#include <filesystem>

#include <gtest/gtest.h>

#include "mom/eval.hpp"
#include "mom/feature_io.hpp"
#include "mom/features.hpp"
#include "mom/synthetic.hpp"
#include "mom/whitening.hpp"
#include "oracles.hpp"
#include "support.hpp"

namespace {

using namespace mom;

using support::code_of;
using support::temp_path;

Eigen::MatrixXd covariance(const FeatureSet& f) {
  Eigen::MatrixXd x(f.n, f.d);
  for (std::size_t i = 0; i < f.n; ++i)
    for (std::size_t j = 0; j < f.d; ++j) x(i, j) = f.row(i)[j];
  const Eigen::RowVectorXd mean = x.colwise().mean();
  const Eigen::MatrixXd c = x.rowwise() - mean;
  return c.transpose() * c / static_cast<double>(f.n - 1);
}

TEST(L2Normalize, ThreeFourFive) {
  const auto f = l2_normalize(oracle::from_rows({{3.0f, 4.0f}}));
  EXPECT_FLOAT_EQ(f.row(0)[0], 0.6f);
  EXPECT_FLOAT_EQ(f.row(0)[1], 0.8f);
  EXPECT_TRUE(f.normalized);
}

TEST(L2Normalize, UnitRowUnchanged) {
  const auto f = l2_normalize(oracle::from_rows({{1.0f, 0.0f}}));
  EXPECT_EQ(f.row(0)[0], 1.0f);
  EXPECT_EQ(f.row(0)[1], 0.0f);
}

TEST(L2Normalize, RandomRowsHaveUnitNorm) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  FeatureSet f(5, 3);
  for (auto& v : f.data) v = static_cast<float>(u(rng));
  const auto g = l2_normalize(f);
  for (std::size_t i = 0; i < g.n; ++i) EXPECT_NEAR(std::sqrt(squared_norm(g.row(i))), 1.0, 1e-6);
}

TEST(L2Normalize, ZeroRowRaises) {
  EXPECT_EQ(code_of([] { l2_normalize(oracle::from_rows({{1.0f, 1.0f}, {0.0f, 0.0f}})); }), errc::zero_vector);
}

TEST(L2Normalize, Idempotent) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 4.0);
    FeatureSet f(40, 7);
    for (auto& v : f.data) v = static_cast<float>(g(rng));
    const auto once = l2_normalize(f);
    const auto twice = l2_normalize(once);
    for (std::size_t i = 0; i < once.data.size(); ++i) EXPECT_NEAR(once.data[i], twice.data[i], 1e-12);
  }
}

TEST(Whitening, IdentityCovarianceGivesRotation) {
  // Symmetric +-1 design: zero mean, covariance exactly identity.
  FeatureSet f(8, 3);
  for (std::size_t i = 0; i < 8; ++i)
    for (std::size_t j = 0; j < 3; ++j) f.row(i)[j] = ((i >> j) & 1u) ? 1.0f : -1.0f;
  const double scale = std::sqrt(7.0 / 8.0);
  for (auto& v : f.data) v = static_cast<float>(v * scale);
  const auto w = pca_whiten_fit(f, 3, 1e-12);
  const Eigen::MatrixXd p = w.projection.transpose() * w.projection;
  EXPECT_LT((p - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-6);
  const auto c = covariance(w.apply(f));
  EXPECT_LT((c - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Whitening, LinePlusNoiseWhitensToIdentity) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 1.0);
  FeatureSet f(500, 2);
  for (std::size_t i = 0; i < f.n; ++i) {
    const double t = 5.0 * g(rng);
    f.row(i)[0] = static_cast<float>(t + 0.1 * g(rng));
    f.row(i)[1] = static_cast<float>(0.5 * t + 0.1 * g(rng));
  }
  const auto w = pca_whiten_fit(f, 2);
  const auto c = covariance(w.apply(f));
  EXPECT_LT((c - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-3);
}

TEST(Whitening, ToyAxis) {
  const auto f = oracle::from_rows({{0.0f, 0.0f}, {2.0f, 0.0f}, {4.0f, 0.0f}});
  const auto w = pca_whiten_fit(f, 1);
  const auto axis = w.axis(0);
  EXPECT_NEAR(std::abs(axis[0]), 1.0, 1e-12);
  EXPECT_NEAR(axis[1], 0.0, 1e-12);
}

TEST(Whitening, RankDeficient) {
  const auto f = oracle::from_rows({{0.0f, 0.0f}, {2.0f, 0.0f}, {4.0f, 0.0f}});
  EXPECT_EQ(code_of([&] { pca_whiten_fit(f, 2); }), errc::rank_deficient);
}

TEST(Whitening, RetainedVarianceIsUnit) {
  auto f = generate_synthetic({ManifoldKind::clusters, 100, 4, 10, 0.3}, 9);
  const auto w = pca_whiten_fit(f, 6);
  const auto c = covariance(w.apply(f));
  for (int i = 0; i < 6; ++i) EXPECT_NEAR(c(i, i), 1.0, 1e-4);
}

TEST(Synthetic, NoiselessMoonsAreHalfCircles) {
  const auto f = generate_synthetic({ManifoldKind::moons, 100, 2, 2, 0.0}, 1);
  ASSERT_EQ(f.n, 200u);
  ASSERT_EQ(f.d, 2u);
  // With d equal to the intrinsic dimension the isometry is a rotation or
  // reflection, so arc geometry is preserved.
  const auto r0 = f.row(0), r99 = f.row(99), r100 = f.row(100), r199 = f.row(199);
  // The arc endpoints of each moon are a diameter apart (2 units).
  EXPECT_NEAR(std::hypot(r0[0] - r99[0], r0[1] - r99[1]), 2.0, 1e-5);
  EXPECT_NEAR(std::hypot(r100[0] - r199[0], r100[1] - r199[1]), 2.0, 1e-5);
  // Every point of a moon is at distance 1 from the midpoint of its endpoints.
  for (int c = 0; c < 2; ++c) {
    const auto a = f.row(static_cast<std::size_t>(c * 100)), b = f.row(static_cast<std::size_t>(c * 100 + 99));
    const double mx = 0.5 * (a[0] + b[0]), my = 0.5 * (a[1] + b[1]);
    for (int i = 0; i < 100; ++i) {
      const auto r = f.row(static_cast<std::size_t>(c * 100 + i));
      EXPECT_NEAR(std::hypot(r[0] - mx, r[1] - my), 1.0, 1e-5);
      EXPECT_EQ((*f.labels)[static_cast<std::size_t>(c * 100 + i)], c);
    }
  }
  EXPECT_FALSE(f.normalized);
}

TEST(Synthetic, DeterministicPerSeed) {
  for (auto kind : {ManifoldKind::moons, ManifoldKind::circles, ManifoldKind::swiss_roll, ManifoldKind::clusters}) {
    const SyntheticSpec spec{kind, 30, 3, 12, 0.2};
    const auto a = generate_synthetic(spec, 77), b = generate_synthetic(spec, 77), c = generate_synthetic(spec, 78);
    EXPECT_EQ(encode_features(a), encode_features(b));
    EXPECT_EQ(*a.labels, *b.labels);
    EXPECT_NE(encode_features(a), encode_features(c));
  }
}

TEST(Synthetic, SmallNoiseClustersAreRecoveredByKMeans) {
  const auto f = l2_normalize(generate_synthetic({ManifoldKind::clusters, 60, 3, 16, 0.05}, 4));
  const auto km = kmeans(f, 3, 1);
  EXPECT_GT(nmi(*f.labels, km.assignment), 0.9);
}

TEST(Synthetic, BadSpec) {
  EXPECT_EQ(code_of([] { generate_synthetic({ManifoldKind::moons, 0, 2, 2, 0.0}, 1); }), errc::bad_spec);
  EXPECT_EQ(code_of([] { generate_synthetic({ManifoldKind::clusters, 10, 0, 4, 0.0}, 1); }), errc::bad_spec);
  EXPECT_EQ(code_of([] { generate_synthetic({ManifoldKind::swiss_roll, 10, 2, 2, 0.0}, 1); }), errc::bad_spec);
  EXPECT_EQ(code_of([] { generate_synthetic({ManifoldKind::moons, 10, 2, 4, -1.0}, 1); }), errc::bad_spec);
}

TEST(FeatureIO, RoundTripIsBitwise) {
  const auto f = oracle::random_unit_features(4, 3, 2);
  const auto path = temp_path("roundtrip.mom");
  save_features(f, path);
  const auto bytes = detail::read_file(path);
  const auto g = load_features(path);
  EXPECT_EQ(g.n, 4u);
  EXPECT_EQ(g.d, 3u);
  EXPECT_EQ(std::memcmp(f.data.data(), g.data.data(), f.data.size() * sizeof(float)), 0);
  EXPECT_EQ(encode_features(g), bytes);
  EXPECT_EQ(bytes.size(), 12u + 4u * 12u);
  EXPECT_EQ(bytes.substr(0, 4), "MOM1");
  std::filesystem::remove(path);
}

TEST(FeatureIO, WrongMagic) {
  auto bytes = encode_features(oracle::random_unit_features(2, 2, 1));
  bytes[0] = 'X';
  EXPECT_EQ(code_of([&] { decode_features(bytes); }), errc::bad_magic);
}

TEST(FeatureIO, MissingRowIsTruncated) {
  const auto bytes = encode_features(oracle::random_unit_features(10, 3, 1));
  const auto short_bytes = bytes.substr(0, bytes.size() - 3 * 4);
  EXPECT_EQ(code_of([&] { decode_features(short_bytes); }), errc::truncated_file);
  EXPECT_EQ(code_of([&] { decode_features(bytes.substr(0, 6)); }), errc::truncated_file);
}

TEST(FeatureIO, LabelsLengthMismatch) {
  const auto path = temp_path("labels.txt");
  save_labels({0, 1, 1}, path);
  EXPECT_EQ(load_labels(path, 3), (std::vector<int>{0, 1, 1}));
  EXPECT_EQ(code_of([&] { load_labels(path, 4); }), errc::dim_mismatch);
  std::filesystem::remove(path);
}

}  // namespace
