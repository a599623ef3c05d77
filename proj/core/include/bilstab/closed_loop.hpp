#pragma once

#include <Eigen/Core>

#include "bilstab/data_record.hpp"
#include "bilstab/ellipsoid.hpp"
#include "bilstab/system.hpp"

namespace bilstab {

// Consistency tolerance for ||X0*G_K - I||_F. The design pipeline builds G_K
// from a solved (Y, P) pair, so only roundoff has to be absorbed.
inline double gk_consistency_tol(int T) { return 1e-8 * std::sqrt(static_cast<double>(T)); }

// Compact closed-loop quantities built from data and a reparametrization G_K
// with X0*G_K = I:
//   Ac = X1*G_K,  H = -V0*G_K,  Kc = U0*G_K,  F = I,
// so that the closed loop reads  x+ = (Ac + F D H + D x Kc) x.
struct ClosedLoopData {
  Eigen::MatrixXd Ac;     // n x n
  Eigen::MatrixXd H;      // n x n
  Eigen::RowVectorXd Kc;  // 1 x n
  Eigen::MatrixXd GK;     // T x n (empty when built from a model)
  int n = 0;

  Eigen::MatrixXd F() const { return Eigen::MatrixXd::Identity(n, n); }
};

// Builds the closed-loop quantities from a record; checks X0*G_K = I to
// gk_consistency_tol(T) and throws CertificateViolation with the residual
// otherwise.
ClosedLoopData make_closed_loop(const DataRecord& data, const Eigen::MatrixXd& GK);

// Model form of the same quantities: Ac = A + B*K, H = 0, Kc = K.
ClosedLoopData closed_loop_from_model(const BilinearSystem& sys, const Eigen::RowVectorXd& K);

// Data representation of the closed-loop state map,
//   g_D(x) = (X1 - D*V0 + D*x*U0) * G_K.
// Test-only use: the design path never calls this with the true D.
// Throws CertificateViolation if ||X0*G_K - I||_F exceeds tolerance.
Eigen::MatrixXd closed_loop_matrix_data(const DataRecord& data, const Eigen::MatrixXd& GK,
                                        const Eigen::MatrixXd& D, const Eigen::VectorXd& x);

// Lyapunov increment matrix: x' * nd_matrix(...) * x = V(g_D(x) x) - V(x).
// Five-term expansion around Ac + F D H, symmetrized against roundoff.
Eigen::MatrixXd nd_matrix(const ClosedLoopData& cl, const Ellipsoid& e, const Eigen::MatrixXd& D,
                          const Eigen::VectorXd& x);

// Closed-loop state map in the data form, g_D(x) = Ac + F D H + D x Kc.
Eigen::MatrixXd g_matrix(const ClosedLoopData& cl, const Eigen::MatrixXd& D,
                         const Eigen::VectorXd& x);

}  // namespace bilstab
