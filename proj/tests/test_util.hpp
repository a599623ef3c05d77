#pragma once

#include <Eigen/Dense>

#include "bilstab/data_record.hpp"
#include "bilstab/rng.hpp"
#include "bilstab/system.hpp"

namespace bilstab::testutil {

inline Eigen::MatrixXd random_matrix(Rng& rng, int rows, int cols, double lo = -1.0,
                                     double hi = 1.0) {
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = rng.uniform(lo, hi);
  return m;
}

inline BilinearSystem random_system(Rng& rng, int n) {
  return make_system(random_matrix(rng, n, n), random_matrix(rng, n, 1),
                     random_matrix(rng, n, n));
}

// Minimum-norm right inverse of X0: G_K = X0' (X0 X0')^{-1}.
inline Eigen::MatrixXd pinv_gk(const Eigen::MatrixXd& X0) {
  const Eigen::MatrixXd gram = X0 * X0.transpose();
  return X0.transpose() * gram.inverse();
}

// Random experiment with full-row-rank X0 and moderate conditioning;
// regenerates with consecutive seeds until both hold.
inline DataRecord well_posed_record(const BilinearSystem& sys, int T, std::uint64_t seed) {
  for (std::uint64_t attempt = 0;; ++attempt) {
    DataRecord record = run_experiment(sys, T, seed + attempt);
    const DataDiagnostics diag = diagnose(record);
    if (diag.rank_X0 == sys.n && diag.cond_X0 < 1e6) return record;
  }
}

inline Eigen::MatrixXd random_spd(Rng& rng, int n, double shift = 0.5) {
  const Eigen::MatrixXd m = random_matrix(rng, n, n);
  return m * m.transpose() + shift * Eigen::MatrixXd::Identity(n, n);
}

}  // namespace bilstab::testutil
