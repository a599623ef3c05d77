#include "bilstab/lmi.hpp"

#include <stdexcept>

#include <Eigen/Dense>

namespace bilstab {

void DesignIneqInputs::validate() const {
  if (!(delta > 0.0)) throw std::invalid_argument("DesignIneqInputs: delta must be > 0");
  if (!(eps1 > 0.0)) throw std::invalid_argument("DesignIneqInputs: eps1 must be > 0");
  if (!(mu > 0.0 && mu <= 1.0))
    throw std::invalid_argument("DesignIneqInputs: mu must be in (0,1]");
}

namespace {

Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& Q, const char* who) {
  Eigen::LLT<Eigen::MatrixXd> llt(Q);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument(std::string(who) + ": Q is not positive definite");
  Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(Q.rows(), Q.cols()));
  return 0.5 * (inv + inv.transpose().eval());
}

void check_symmetric(const Eigen::MatrixXd& Q, const char* who) {
  if (Q.rows() != Q.cols()) throw std::invalid_argument(std::string(who) + ": Q must be square");
  if ((Q - Q.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + Q.cwiseAbs().maxCoeff()))
    throw std::invalid_argument(std::string(who) + ": Q must be symmetric");
}

}  // namespace

Eigen::MatrixXd build_mi_with_D(const ClosedLoopData& cl, const Eigen::MatrixXd& Q, double tau,
                                const Eigen::MatrixXd& D) {
  const int n = cl.n;
  check_symmetric(Q, "build_mi_with_D");
  if (Q.rows() != n || D.rows() != n || D.cols() != n)
    throw std::invalid_argument("build_mi_with_D: dimension mismatch");
  if (!(tau > 0.0)) throw std::invalid_argument("build_mi_with_D: tau must be > 0");
  const Eigen::MatrixXd Qinv = spd_inverse(Q, "build_mi_with_D");
  const Eigen::MatrixXd AcFDH = cl.Ac + D * cl.H;

  const int dim = 3 * n + 1;
  Eigen::MatrixXd mi = Eigen::MatrixXd::Zero(dim, dim);
  const int r1 = 0, r2 = n, r3 = 2 * n, r4 = 2 * n + 1;
  mi.block(r1, r1, n, n) = -Q;
  mi.block(r2, r2, n, n) = -tau * Q;
  mi(r3, r3) = -1.0 / tau;
  mi.block(r4, r4, n, n) = -Qinv;
  mi.block(r1, r3, n, 1) = cl.Kc.transpose();
  mi.block(r3, r1, 1, n) = cl.Kc;
  mi.block(r1, r4, n, n) = AcFDH.transpose();
  mi.block(r4, r1, n, n) = AcFDH;
  mi.block(r2, r4, n, n) = D.transpose();
  mi.block(r4, r2, n, n) = D;
  return mi;
}

Eigen::MatrixXd build_mi_without_D(const ClosedLoopData& cl, const Eigen::MatrixXd& Q, double tau,
                                   double eps2, double delta) {
  const int n = cl.n;
  check_symmetric(Q, "build_mi_without_D");
  if (Q.rows() != n) throw std::invalid_argument("build_mi_without_D: dimension mismatch");
  if (!(tau > 0.0)) throw std::invalid_argument("build_mi_without_D: tau must be > 0");
  if (!(delta > 0.0)) throw std::invalid_argument("build_mi_without_D: delta must be > 0");
  const Eigen::MatrixXd Qinv = spd_inverse(Q, "build_mi_without_D");
  const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(n, n);

  const int dim = 4 * n + 1;
  Eigen::MatrixXd mi = Eigen::MatrixXd::Zero(dim, dim);
  const int r1 = 0, r2 = n, r3 = 2 * n, r4 = 2 * n + 1, r5 = 3 * n + 1;
  mi.block(r1, r1, n, n) = -Q;
  mi.block(r2, r2, n, n) = -tau * Q;
  mi(r3, r3) = -1.0 / tau;
  mi.block(r4, r4, n, n) = -Qinv + eps2 * identity;
  mi.block(r5, r5, n, n) = -eps2 * identity;
  mi.block(r1, r3, n, 1) = cl.Kc.transpose();
  mi.block(r3, r1, 1, n) = cl.Kc;
  mi.block(r1, r4, n, n) = cl.Ac.transpose();
  mi.block(r4, r1, n, n) = cl.Ac;
  mi.block(r1, r5, n, n) = delta * cl.H.transpose();
  mi.block(r5, r1, n, n) = delta * cl.H;
  mi.block(r2, r5, n, n) = delta * identity;
  mi.block(r5, r2, n, n) = delta * identity;
  return mi;
}

MaxDetProblem build_data_lmi(const DataRecord& data, const DesignIneqInputs& cfg) {
  data.validate();
  cfg.validate();
  const int n = data.n;
  const int T = data.T;

  MaxDetProblem problem;
  const Eigen::MatrixXi p_ids = add_symmetric_variable(problem, "P", n);
  const Eigen::MatrixXi y_ids = add_matrix_variable(problem, "Y", n, T);
  const int eps2_id = add_scalar_variable(problem, "eps2");
  problem.objective_block = p_ids;

  BlockLayout layout{{"lyapunov", "multiplier", "gain", "successor", "uncertainty"},
                     {n, n, 1, n, n}};
  AffineSymmetricForm form(layout, "data-design");

  const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(n, n);

  // P entries appear in blocks (1,1), (2,2), (2,5), (4,4).
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      const Eigen::MatrixXd basis = symmetric_basis(n, i, j);
      const int id = p_ids(i, j);
      form.add_coefficient_block(id, 0, 0, -cfg.mu * basis);
      form.add_coefficient_block(id, 1, 1, -cfg.eps1 * basis);
      form.add_coefficient_block(id, 1, 4, cfg.delta * cfg.eps1 * basis);
      form.add_coefficient_block(id, 3, 3, -basis);
    }
  }
  // Y entries appear in blocks (1,3) = Y U0', (1,4) = Y X1', (1,5) = -delta Y V0'.
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < T; ++k) {
      const int id = y_ids(i, k);
      Eigen::MatrixXd u_block = Eigen::MatrixXd::Zero(n, 1);
      u_block(i, 0) = data.U0(k);
      form.add_coefficient_block(id, 0, 2, u_block);
      Eigen::MatrixXd x1_block = Eigen::MatrixXd::Zero(n, n);
      x1_block.row(i) = data.X1.col(k).transpose();
      form.add_coefficient_block(id, 0, 3, x1_block);
      Eigen::MatrixXd v0_block = Eigen::MatrixXd::Zero(n, n);
      v0_block.row(i) = -cfg.delta * data.V0.col(k).transpose();
      form.add_coefficient_block(id, 0, 4, v0_block);
    }
  }
  // eps2 appears in blocks (4,4) and (5,5).
  form.add_coefficient_block(eps2_id, 3, 3, identity);
  form.add_coefficient_block(eps2_id, 4, 4, -identity);
  // Constant part: -eps1 in the scalar gain block.
  form.add_constant_block(2, 2, -cfg.eps1 * Eigen::MatrixXd::Identity(1, 1));

  problem.constraints.push_back(std::move(form));

  // Equalities P = X0 * Y' entrywise (n^2 scalar equations; the symmetric
  // storage of P forces symmetry of X0 * Y' as well).
  const int nv = problem.num_vars();
  problem.eq_lhs = Eigen::MatrixXd::Zero(n * n, nv);
  problem.eq_rhs = Eigen::VectorXd::Zero(n * n);
  int row = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j, ++row) {
      problem.eq_lhs(row, p_ids(i, j)) = 1.0;
      for (int k = 0; k < T; ++k) problem.eq_lhs(row, y_ids(j, k)) -= data.X0(i, k);
    }
  }

  problem.validate();
  return problem;
}

MaxDetProblem build_model_lmi(const BilinearSystem& sys, double eps1) {
  sys.validate();
  if (!(eps1 > 0.0)) throw std::invalid_argument("build_model_lmi: eps1 must be > 0");
  const int n = sys.n;

  MaxDetProblem problem;
  const Eigen::MatrixXi p_ids = add_symmetric_variable(problem, "P", n);
  const Eigen::MatrixXi y_ids = add_matrix_variable(problem, "y", n, 1);
  problem.objective_block = p_ids;

  BlockLayout layout{{"lyapunov", "multiplier", "gain", "successor"}, {n, n, 1, n}};
  AffineSymmetricForm form(layout, "model-design");

  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      const Eigen::MatrixXd basis = symmetric_basis(n, i, j);
      const int id = p_ids(i, j);
      form.add_coefficient_block(id, 0, 0, -basis);
      form.add_coefficient_block(id, 1, 1, -eps1 * basis);
      form.add_coefficient_block(id, 3, 3, -basis);
      form.add_coefficient_block(id, 0, 3, basis * sys.A.transpose());
      form.add_coefficient_block(id, 1, 3, basis * sys.D.transpose());
    }
  }
  for (int i = 0; i < n; ++i) {
    const int id = y_ids(i, 0);
    Eigen::MatrixXd e_i = Eigen::MatrixXd::Zero(n, 1);
    e_i(i, 0) = 1.0;
    form.add_coefficient_block(id, 0, 2, e_i);
    form.add_coefficient_block(id, 0, 3, e_i * sys.B.transpose());
  }
  // Gain-channel multiplier. The reciprocal pairing with the -eps1 P block is
  // what the reference optimum satisfies (the S-procedure scalar enters the
  // two blocks inversely).
  form.add_constant_block(2, 2, (-1.0 / eps1) * Eigen::MatrixXd::Identity(1, 1));
  problem.constraints.push_back(std::move(form));

  // P > 0, stated explicitly in the baseline formulation.
  AffineSymmetricForm positivity(n, "P-positivity");
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j)
      positivity.add_coefficient(p_ids(i, j), -symmetric_basis(n, i, j));
  problem.constraints.push_back(std::move(positivity));

  problem.eq_lhs = Eigen::MatrixXd::Zero(0, problem.num_vars());
  problem.eq_rhs = Eigen::VectorXd::Zero(0);
  problem.validate();
  return problem;
}

Eigen::MatrixXd petersen_certificate_matrix(const Eigen::MatrixXd& G, const Eigen::MatrixXd& M,
                                            const Eigen::MatrixXd& N, double e) {
  const Eigen::Index nh = G.rows();
  if (G.cols() != nh || M.rows() != nh || N.rows() != nh)
    throw std::invalid_argument("petersen_certificate_matrix: dimension mismatch");
  const Eigen::Index q = N.cols();
  Eigen::MatrixXd cert(nh + q, nh + q);
  cert.topLeftCorner(nh, nh) = G + e * M * M.transpose();
  cert.topRightCorner(nh, q) = N;
  cert.bottomLeftCorner(q, nh) = N.transpose();
  cert.bottomRightCorner(q, q) = -e * Eigen::MatrixXd::Identity(q, q);
  return cert;
}

Eigen::MatrixXd petersen_lhs(const Eigen::MatrixXd& G, const Eigen::MatrixXd& M,
                             const Eigen::MatrixXd& N, const Eigen::MatrixXd& Dhat) {
  const Eigen::Index nh = G.rows();
  if (G.cols() != nh || M.rows() != nh || N.rows() != nh || Dhat.rows() != M.cols() ||
      Dhat.cols() != N.cols())
    throw std::invalid_argument("petersen_lhs: dimension mismatch");
  const double norm = Dhat.size() > 0 ? Dhat.jacobiSvd().singularValues()(0) : 0.0;
  if (norm > 1.0 + 1e-12)
    throw std::invalid_argument("petersen_lhs: ||Dhat|| exceeds 1");
  return G + M * Dhat * N.transpose() + N * Dhat.transpose() * M.transpose();
}

}  // namespace bilstab
