#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <string_view>

#include "mom/error.hpp"
#include "mom/features.hpp"

namespace mom {

enum class ManifoldKind { moons, circles, swiss_roll, clusters };

inline ManifoldKind parse_manifold_kind(std::string_view name) {
  if (name == "moons" || name == "interleaved-moons") return ManifoldKind::moons;
  if (name == "circles" || name == "concentric-circles") return ManifoldKind::circles;
  if (name == "swiss-roll" || name == "swiss-roll-segments") return ManifoldKind::swiss_roll;
  if (name == "clusters" || name == "gaussian-clusters") return ManifoldKind::clusters;
  throw error(errc::bad_spec, "unknown manifold kind '" + std::string(name) + "'");
}

inline std::string_view to_string(ManifoldKind kind) {
  switch (kind) {
    case ManifoldKind::moons: return "moons";
    case ManifoldKind::circles: return "circles";
    case ManifoldKind::swiss_roll: return "swiss-roll";
    case ManifoldKind::clusters: return "clusters";
  }
  return "?";
}

struct SyntheticSpec {
  ManifoldKind kind = ManifoldKind::moons;
  int per_class = 100;
  int classes = 2;  // ignored for moons (always 2)
  int dim = 2;
  double noise = 0.0;
  /// Distance of the embedded manifold from the origin along a direction
  /// orthogonal to it. Only used when dim exceeds the intrinsic dimension,
  /// so that l2-normalization does not collapse the manifold.
  double offset = 2.0;
  /// Intrinsic spread of gaussian-clusters around their centers.
  double cluster_spread = 0.35;
};

inline int intrinsic_dim(ManifoldKind kind) { return kind == ManifoldKind::swiss_roll ? 3 : 2; }

namespace detail {

inline Eigen::MatrixXd random_orthonormal(std::size_t rows, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd g(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(rows));
  for (Eigen::Index i = 0; i < g.rows(); ++i)
    for (Eigen::Index j = 0; j < g.cols(); ++j) g(i, j) = gauss(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(g.rows(), g.cols());
  // Fix column signs against R's diagonal so Q is a deterministic function of G.
  const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < q.cols(); ++j)
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  return q;
}

}  // namespace detail

/// Low-dimensional labeled manifolds embedded in `dim` dimensions by a seeded
/// random isometry, plus isotropic Gaussian noise of std `noise`.
/// Output rows are grouped by class; the result is a pure function of (spec, seed).
inline FeatureSet generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
  const int m = intrinsic_dim(spec.kind);
  const int classes = spec.kind == ManifoldKind::moons ? 2 : spec.classes;
  if (spec.per_class <= 0) throw error(errc::bad_spec, "per_class must be positive");
  if (classes <= 0) throw error(errc::bad_spec, "classes must be positive");
  if (spec.dim < m) throw error(errc::bad_spec, "dim must be at least " + std::to_string(m) + " for " + std::string(to_string(spec.kind)));
  if (spec.noise < 0) throw error(errc::bad_spec, "noise must be non-negative");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const auto d = static_cast<std::size_t>(spec.dim);
  const std::size_t n = static_cast<std::size_t>(spec.per_class) * static_cast<std::size_t>(classes);

  const Eigen::MatrixXd basis = detail::random_orthonormal(d, rng);
  Eigen::VectorXd shift = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
  if (spec.dim > m) shift = spec.offset * basis.col(m);

  // Cluster centers for the gaussian kind: evenly spaced on a circle of radius 2.
  constexpr double pi = std::numbers::pi;
  FeatureSet out(n, d);
  out.labels.emplace();
  out.labels->reserve(n);
  Eigen::VectorXd u(m);
  std::size_t row = 0;
  for (int c = 0; c < classes; ++c) {
    for (int p = 0; p < spec.per_class; ++p, ++row) {
      u.setZero();
      switch (spec.kind) {
        case ManifoldKind::moons: {
          const double t = pi * (spec.per_class == 1 ? 0.0 : static_cast<double>(p) / (spec.per_class - 1));
          if (c == 0) {
            u[0] = std::cos(t);
            u[1] = std::sin(t);
          } else {
            u[0] = 1.0 - std::cos(t);
            u[1] = 0.5 - std::sin(t);
          }
          break;
        }
        case ManifoldKind::circles: {
          const double t = 2.0 * pi * unit(rng);
          const double radius = 1.0 + c;
          u[0] = radius * std::cos(t);
          u[1] = radius * std::sin(t);
          break;
        }
        case ManifoldKind::swiss_roll: {
          // Class c covers the c-th arc-length segment of the roll.
          const double lo = 1.5 * pi + 3.0 * pi * c / classes;
          const double hi = 1.5 * pi + 3.0 * pi * (c + 1) / classes;
          const double t = lo + (hi - lo) * unit(rng);
          u[0] = t * std::cos(t) / 10.0;
          u[1] = 2.0 * unit(rng);
          u[2] = t * std::sin(t) / 10.0;
          break;
        }
        case ManifoldKind::clusters: {
          const double angle = 2.0 * pi * c / classes;
          u[0] = 2.0 * std::cos(angle) + spec.cluster_spread * gauss(rng);
          u[1] = 2.0 * std::sin(angle) + spec.cluster_spread * gauss(rng);
          break;
        }
      }
      Eigen::VectorXd x = basis.leftCols(m) * u + shift;
      if (spec.noise > 0)
        for (Eigen::Index j = 0; j < x.size(); ++j) x[j] += spec.noise * gauss(rng);
      for (std::size_t j = 0; j < d; ++j) out.row(row)[j] = static_cast<float>(x[static_cast<Eigen::Index>(j)]);
      out.labels->push_back(c);
    }
  }
  return out;
}

}  // namespace mom
