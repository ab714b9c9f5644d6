#pragma once

#include <Eigen/Dense>
#include <string>

#include "mom/error.hpp"
#include "mom/graph.hpp"

namespace mom {

/// Dense (1 - alpha)(I - alpha A_hat)^{-1} by LU factorization. Test oracle only.
inline Eigen::MatrixXd dense_oracle(const NormalizedOperator& op, double alpha, std::size_t max_n = 2000) {
  if (op.n > max_n) throw error(errc::too_large, "dense oracle limited to n <= " + std::to_string(max_n));
  if (op.kind != OperatorKind::symmetric) throw error(errc::bad_config, "dense oracle needs the symmetric operator");
  const auto n = static_cast<Eigen::Index>(op.n);
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(n, n);
  for (std::size_t i = 0; i < op.n; ++i)
    for (std::size_t p = op.rowptr[i]; p < op.rowptr[i + 1]; ++p)
      m(static_cast<Eigen::Index>(i), op.cols[p]) -= alpha * op.vals[p];
  const Eigen::MatrixXd rhs = (1.0 - alpha) * Eigen::MatrixXd::Identity(n, n);
  return m.partialPivLu().solve(rhs);
}

}  // namespace mom
