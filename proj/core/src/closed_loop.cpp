#include "bilstab/closed_loop.hpp"

#include <stdexcept>

#include "bilstab/errors.hpp"

namespace bilstab {

namespace {

void check_gk_consistency(const DataRecord& data, const Eigen::MatrixXd& GK) {
  if (GK.rows() != data.T || GK.cols() != data.n)
    throw std::invalid_argument("G_K must be T x n");
  const double residual =
      (data.X0 * GK - Eigen::MatrixXd::Identity(data.n, data.n)).norm();
  const double tol = gk_consistency_tol(data.T);
  if (residual > tol)
    throw CertificateViolation(
        "X0*G_K deviates from identity: ||X0*G_K - I||_F = " + std::to_string(residual),
        residual);
}

}  // namespace

ClosedLoopData make_closed_loop(const DataRecord& data, const Eigen::MatrixXd& GK) {
  data.validate();
  check_gk_consistency(data, GK);
  ClosedLoopData cl;
  cl.n = data.n;
  cl.Ac = data.X1 * GK;
  cl.H = -data.V0 * GK;
  cl.Kc = data.U0 * GK;
  cl.GK = GK;
  return cl;
}

ClosedLoopData closed_loop_from_model(const BilinearSystem& sys, const Eigen::RowVectorXd& K) {
  sys.validate();
  if (K.size() != sys.n) throw std::invalid_argument("closed_loop_from_model: K must be 1 x n");
  ClosedLoopData cl;
  cl.n = sys.n;
  cl.Ac = sys.A + sys.B * K;
  cl.H = Eigen::MatrixXd::Zero(sys.n, sys.n);
  cl.Kc = K;
  return cl;
}

Eigen::MatrixXd closed_loop_matrix_data(const DataRecord& data, const Eigen::MatrixXd& GK,
                                        const Eigen::MatrixXd& D, const Eigen::VectorXd& x) {
  data.validate();
  check_gk_consistency(data, GK);
  if (D.rows() != data.n || D.cols() != data.n || x.size() != data.n)
    throw std::invalid_argument("closed_loop_matrix_data: dimension mismatch");
  return (data.X1 - D * data.V0 + (D * x) * data.U0) * GK;
}

Eigen::MatrixXd g_matrix(const ClosedLoopData& cl, const Eigen::MatrixXd& D,
                         const Eigen::VectorXd& x) {
  if (D.rows() != cl.n || D.cols() != cl.n || x.size() != cl.n)
    throw std::invalid_argument("g_matrix: dimension mismatch");
  return cl.Ac + D * cl.H + (D * x) * cl.Kc;
}

Eigen::MatrixXd nd_matrix(const ClosedLoopData& cl, const Ellipsoid& e, const Eigen::MatrixXd& D,
                          const Eigen::VectorXd& x) {
  e.validate();
  if (e.Q.rows() != cl.n || D.rows() != cl.n || D.cols() != cl.n || x.size() != cl.n)
    throw std::invalid_argument("nd_matrix: dimension mismatch");
  const Eigen::MatrixXd& Q = e.Q;
  const Eigen::MatrixXd M = cl.Ac + D * cl.H;        // Ac + F D H with F = I
  const Eigen::MatrixXd N = (D * x) * cl.Kc;         // D x Kc
  Eigen::MatrixXd nd = M.transpose() * Q * M - Q
      + M.transpose() * Q * N
      + N.transpose() * Q * M
      + N.transpose() * Q * N;
  // Symmetric in exact arithmetic; average out roundoff so downstream
  // eigenvalue checks see an exactly symmetric matrix.
  nd = 0.5 * (nd + nd.transpose().eval());
  return nd;
}

}  // namespace bilstab
