#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "mom/error.hpp"
#include "mom/features.hpp"

namespace mom {

/// Centering plus projection onto the leading principal axes, each scaled by
/// 1/sqrt(eigenvalue + epsilon).
struct WhiteningTransform {
  Eigen::VectorXd mean;
  Eigen::MatrixXd projection;   // d x retained_dims
  Eigen::VectorXd eigenvalues;  // retained, descending
  std::size_t retained_dims = 0;

  /// Unit-length principal axis `c` (unscaled column of the projection).
  Eigen::VectorXd axis(std::size_t c) const { return projection.col(static_cast<Eigen::Index>(c)).normalized(); }

  FeatureSet apply(const FeatureSet& features) const {
    if (features.d != static_cast<std::size_t>(mean.size()))
      throw error(errc::dim_mismatch, "whitening fitted on d=" + std::to_string(mean.size()) +
                                          ", input has d=" + std::to_string(features.d));
    FeatureSet out(features.n, retained_dims);
    out.labels = features.labels;
    Eigen::VectorXd x(features.d);
    for (std::size_t i = 0; i < features.n; ++i) {
      const auto r = features.row(i);
      for (std::size_t j = 0; j < features.d; ++j) x[static_cast<Eigen::Index>(j)] = r[j];
      const Eigen::VectorXd y = projection.transpose() * (x - mean);
      for (std::size_t j = 0; j < retained_dims; ++j) out.row(i)[j] = static_cast<float>(y[static_cast<Eigen::Index>(j)]);
    }
    return out;
  }
};

/// Fits PCA whitening with the unbiased (n-1) sample covariance.
inline WhiteningTransform pca_whiten_fit(const FeatureSet& features, std::size_t retained_dims,
                                         double epsilon = 1e-9) {
  const std::size_t n = features.n;
  const std::size_t d = features.d;
  if (n < 2) throw error(errc::bad_spec, "whitening needs at least 2 items");
  if (retained_dims == 0 || retained_dims > std::min(n - 1, d))
    throw error(errc::bad_spec, "retained_dims=" + std::to_string(retained_dims) + " outside [1, min(n-1, d)]");
  if (!(epsilon > 0.0)) throw error(errc::bad_spec, "epsilon must be positive");

  Eigen::MatrixXd x(n, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j)
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = features.row(i)[j];
  const Eigen::VectorXd mean = x.colwise().mean().transpose();
  x.rowwise() -= mean.transpose();
  const Eigen::MatrixXd cov = (x.transpose() * x) / static_cast<double>(n - 1);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  // Eigen returns ascending eigenvalues.
  const Eigen::VectorXd values = eig.eigenvalues().reverse();
  const Eigen::MatrixXd vectors = eig.eigenvectors().rowwise().reverse();

  std::size_t above = 0;
  for (Eigen::Index i = 0; i < values.size(); ++i)
    if (values[i] > epsilon) ++above;
  if (above < retained_dims)
    throw error(errc::rank_deficient, std::to_string(above) + " eigenvalues exceed epsilon, " +
                                          std::to_string(retained_dims) + " requested");

  WhiteningTransform t;
  t.mean = mean;
  t.retained_dims = retained_dims;
  t.projection.resize(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(retained_dims));
  t.eigenvalues.resize(static_cast<Eigen::Index>(retained_dims));
  for (std::size_t c = 0; c < retained_dims; ++c) {
    const auto ci = static_cast<Eigen::Index>(c);
    Eigen::VectorXd v = vectors.col(ci);
    // Sign convention: largest-magnitude component positive.
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v[arg] < 0) v = -v;
    t.eigenvalues[ci] = values[ci];
    t.projection.col(ci) = v / std::sqrt(values[ci] + epsilon);
  }
  return t;
}

}  // namespace mom
