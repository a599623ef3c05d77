#include <doctest.h>

#include <Eigen/Dense>

#include "bilstab/lmi.hpp"
#include "bilstab/maxdet.hpp"
#include "test_util.hpp"

using namespace bilstab;

TEST_SUITE_BEGIN("lmi");

namespace {

ClosedLoopData zero_closed_loop(int n) {
  ClosedLoopData cl;
  cl.n = n;
  cl.Ac = Eigen::MatrixXd::Zero(n, n);
  cl.H = Eigen::MatrixXd::Zero(n, n);
  cl.Kc = Eigen::RowVectorXd::Zero(n);
  return cl;
}

double max_eig(const Eigen::MatrixXd& m) {
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m).eigenvalues().maxCoeff();
}

}  // namespace

TEST_CASE("build_mi_with_D: all-zero closed loop is block diagonal") {
  const ClosedLoopData cl = zero_closed_loop(2);
  const Eigen::MatrixXd q = Eigen::MatrixXd::Identity(2, 2);
  const Eigen::MatrixXd mi = build_mi_with_D(cl, q, 1.0, Eigen::MatrixXd::Zero(2, 2));
  REQUIRE(mi.rows() == 7);
  Eigen::MatrixXd expected = -Eigen::MatrixXd::Identity(7, 7);
  CHECK((mi - expected).norm() == doctest::Approx(0.0));
  CHECK(max_eig(mi) == doctest::Approx(-1.0));
}

TEST_CASE("build_mi_with_D: doubling tau changes only blocks (2,2) and (3,3)") {
  Rng rng(15);
  const BilinearSystem sys = example_system();
  const DataRecord record = testutil::well_posed_record(sys, 10, 11);
  const ClosedLoopData cl = make_closed_loop(record, testutil::pinv_gk(record.X0));
  const Eigen::MatrixXd q = testutil::random_spd(rng, 2);
  const Eigen::MatrixXd d_sample = 0.3 * testutil::random_matrix(rng, 2, 2);
  const Eigen::MatrixXd a = build_mi_with_D(cl, q, 0.7, d_sample);
  const Eigen::MatrixXd b = build_mi_with_D(cl, q, 1.4, d_sample);
  Eigen::MatrixXd diff = b - a;
  // Zero out blocks (2,2) (rows/cols 2..3) and (3,3) (row/col 4): the rest
  // must be untouched.
  diff.block(2, 2, 2, 2).setZero();
  diff(4, 4) = 0.0;
  CHECK(diff.norm() == 0.0);
  CHECK((b.block(2, 2, 2, 2) - (-1.4) * q).norm() == 0.0);
  CHECK(b(4, 4) == doctest::Approx(-1.0 / 1.4));
}

TEST_CASE("build_mi_with_D rejects a non-PD shape") {
  const ClosedLoopData cl = zero_closed_loop(2);
  Eigen::MatrixXd bad(2, 2);
  bad << 1.0, 0.0,
         0.0, -1.0;
  CHECK_THROWS_AS(build_mi_with_D(cl, bad, 1.0, Eigen::MatrixXd::Zero(2, 2)),
                  std::invalid_argument);
}

TEST_CASE("build_mi_without_D: corner blocks read back as specified") {
  Rng rng(16);
  const BilinearSystem sys = example_system();
  const DataRecord record = testutil::well_posed_record(sys, 10, 12);
  const ClosedLoopData cl = make_closed_loop(record, testutil::pinv_gk(record.X0));
  const Eigen::MatrixXd q = testutil::random_spd(rng, 2);
  const double tau = 0.8, eps2 = 0.3, delta = 0.7637;
  const Eigen::MatrixXd mi = build_mi_without_D(cl, q, tau, eps2, delta);
  REQUIRE(mi.rows() == 9);

  const Eigen::MatrixXd q_inv = q.inverse();
  CHECK((mi.block(5, 5, 2, 2) - (-q_inv + eps2 * Eigen::MatrixXd::Identity(2, 2))).norm() <
        1e-12);
  CHECK((mi.block(7, 7, 2, 2) + eps2 * Eigen::MatrixXd::Identity(2, 2)).norm() == 0.0);
  CHECK((mi.block(0, 7, 2, 2) - delta * cl.H.transpose()).norm() == 0.0);
  CHECK((mi.block(2, 7, 2, 2) - delta * Eigen::MatrixXd::Identity(2, 2)).norm() == 0.0);
}

TEST_CASE("build_mi_without_D: vanishing delta approaches the D = 0 form") {
  Rng rng(17);
  const BilinearSystem sys = example_system();
  const DataRecord record = testutil::well_posed_record(sys, 10, 13);
  const ClosedLoopData cl = make_closed_loop(record, testutil::pinv_gk(record.X0));
  const Eigen::MatrixXd q = testutil::random_spd(rng, 2);
  const double tau = 0.8, eps2 = 0.3;
  const Eigen::MatrixXd mi = build_mi_without_D(cl, q, tau, eps2, 1e-14);
  const Eigen::MatrixXd base = build_mi_with_D(cl, q, tau, Eigen::MatrixXd::Zero(2, 2));
  // Top-left 7x7 equals the D = 0 matrix, except for the +eps2 I shift in the
  // successor block; the border is O(delta).
  Eigen::MatrixXd expected = base;
  expected.block(5, 5, 2, 2) += eps2 * Eigen::MatrixXd::Identity(2, 2);
  CHECK((mi.topLeftCorner(7, 7) - expected).norm() < 1e-12);
  CHECK(mi.block(0, 7, 2, 2).norm() < 1e-12);
  CHECK(mi.block(2, 7, 2, 2).norm() < 1e-12);
}

TEST_CASE("build_data_lmi: dimensions and the (1,1) coefficient audit") {
  const BilinearSystem sys = example_system();
  const DataRecord record = testutil::well_posed_record(sys, 10, 14);

  for (double mu : {1.0, 0.9}) {
    const MaxDetProblem problem = build_data_lmi(record, {0.7637, 0.8, mu});
    REQUIRE(problem.constraints.size() == 1);
    const AffineSymmetricForm& form = problem.constraints.front();
    CHECK(form.dim() == 9);  // 2 + 2 + 1 + 2 + 2
    CHECK(form.asymmetry() == 0.0);

    // Coefficient of each P entry restricted to block (1,1) must be
    // -mu * (symmetric basis); eps2 must shift blocks (4,4) and (5,5).
    for (int i = 0; i < 2; ++i)
      for (int j = i; j < 2; ++j) {
        const int id = problem.var("P(" + std::to_string(i) + "," + std::to_string(j) + ")");
        const Eigen::MatrixXd& coef = form.coefficients().at(id);
        CHECK((coef.topLeftCorner(2, 2) + mu * symmetric_basis(2, i, j)).norm() == 0.0);
      }
    const Eigen::MatrixXd& eps2_coef = form.coefficients().at(problem.var("eps2"));
    CHECK((eps2_coef.block(5, 5, 2, 2) - Eigen::MatrixXd::Identity(2, 2)).norm() == 0.0);
    CHECK((eps2_coef.block(7, 7, 2, 2) + Eigen::MatrixXd::Identity(2, 2)).norm() == 0.0);

    // Equalities: n^2 rows tying P to X0 * Y'.
    CHECK(problem.eq_lhs.rows() == 4);
    CHECK(problem.eq_rhs.isZero(0.0));
  }
}

TEST_CASE("build_model_lmi: dimension and infeasibility of the naive point") {
  const BilinearSystem sys = example_system();
  const MaxDetProblem problem = build_model_lmi(sys, 0.8);
  REQUIRE(problem.constraints.size() == 2);
  CHECK(problem.constraints[0].dim() == 7);  // 2 + 2 + 1 + 2

  // y = 0, P = I: the open-loop A is unstable, so the form cannot be
  // negative definite there.
  Eigen::VectorXd values = Eigen::VectorXd::Zero(problem.num_vars());
  values(problem.var("P(0,0)")) = 1.0;
  values(problem.var("P(1,1)")) = 1.0;
  const Eigen::MatrixXd at_identity = problem.constraints[0].evaluate(values);
  CHECK(max_eig(at_identity) >= 0.0);
}

TEST_CASE("data problem solved at eps1 = 0.8: certificates chain downward") {
  const BilinearSystem sys = example_system();
  const DataRecord record = testutil::well_posed_record(sys, 10, 1);
  const double delta = 0.7637;
  const MaxDetProblem problem = build_data_lmi(record, {delta, 0.8, 1.0});
  const Solution solution = solve(problem);
  REQUIRE(solution.status == SolveStatus::kOptimal);

  // The solved point itself evaluates negative definite.
  const Eigen::MatrixXd at_solution = problem.constraints[0].evaluate(solution.values);
  CHECK(max_eig(at_solution) < 0.0);

  // Map back: Q = P^{-1}, G_K = Y' P^{-1}, tau = 1/eps1.
  const Eigen::MatrixXd p = problem.objective_matrix(solution.values);
  Eigen::MatrixXd y(record.n, record.T);
  for (int i = 0; i < record.n; ++i)
    for (int k = 0; k < record.T; ++k)
      y(i, k) =
          solution.values(problem.var("Y(" + std::to_string(i) + "," + std::to_string(k) + ")"));
  const Eigen::MatrixXd p_inv = p.inverse();
  const Eigen::MatrixXd q = 0.5 * (p_inv + p_inv.transpose());
  const Eigen::MatrixXd gk = y.transpose() * q;
  const double eps2 = solution.values(problem.var("eps2"));
  const double tau = 1.0 / 0.8;
  const ClosedLoopData cl = make_closed_loop(record, gk);

  // Uniform certificate (no D) is negative definite at the mapped point.
  const Eigen::MatrixXd without_d = build_mi_without_D(cl, q, tau, eps2, delta);
  CHECK(max_eig(without_d) < 0.0);

  // It dominates the per-D certificate for sampled ||D|| <= delta.
  Rng rng(88);
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::MatrixXd direction = rng.normal_matrix(2, 2);
    const double norm = direction.jacobiSvd().singularValues()(0);
    const double radius = (trial % 4 == 0) ? delta : delta * rng.uniform01();
    const Eigen::MatrixXd d_sample = (radius / norm) * direction;
    const Eigen::MatrixXd with_d = build_mi_with_D(cl, q, tau, d_sample);
    CHECK(max_eig(with_d) < 0.0);
  }

  // And the per-D certificate dominates the pointwise Lyapunov decrease.
  const Ellipsoid ellipsoid{q};
  const auto boundary = sample_ellipsoid(ellipsoid, 700, SampleMode::kBoundary, 555);
  const auto interior = sample_ellipsoid(ellipsoid, 300, SampleMode::kInterior, 556);
  for (const auto& samples : {boundary, interior})
    for (const auto& x : samples) {
      const Eigen::MatrixXd nd = nd_matrix(cl, ellipsoid, sys.D, x);
      CHECK(max_eig(nd) < 0.0);
    }
}

TEST_CASE("variable substitution audit on feasible perturbations") {
  const BilinearSystem sys = example_system();
  const DataRecord record = testutil::well_posed_record(sys, 10, 1);
  const double delta = 0.7637, eps1 = 0.8;
  const MaxDetProblem problem = build_data_lmi(record, {delta, eps1, 1.0});
  // A loosely centered point stays well inside the constraint, leaving room
  // for the perturbations (the true optimum sits on the boundary).
  SolverOptions loose;
  loose.gap_tol = 0.1;
  const Solution solution = solve(problem, loose);
  REQUIRE(solution.status == SolveStatus::kOptimal);

  // Orthonormal basis of the equality null space, computed independently.
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(problem.eq_lhs,
                                        Eigen::ComputeFullU | Eigen::ComputeFullV);
  const int rank = 4;
  const Eigen::MatrixXd null_basis = svd.matrixV().rightCols(problem.num_vars() - rank);

  Rng rng(91);
  int tested = 0;
  for (int trial = 0; trial < 200 && tested < 50; ++trial) {
    const Eigen::VectorXd dir = testutil::random_matrix(rng, null_basis.cols(), 1);
    const Eigen::VectorXd values = solution.values + 1e-6 * (null_basis * dir);
    const Eigen::MatrixXd at_point = problem.constraints[0].evaluate(values);
    if (max_eig(at_point) >= 0.0) continue;  // perturbation left the feasible set
    ++tested;

    const Eigen::MatrixXd p = problem.objective_matrix(values);
    Eigen::MatrixXd y(record.n, record.T);
    for (int i = 0; i < record.n; ++i)
      for (int k = 0; k < record.T; ++k)
        y(i, k) =
            values(problem.var("Y(" + std::to_string(i) + "," + std::to_string(k) + ")"));
    const Eigen::MatrixXd p_inv = p.inverse();
    const Eigen::MatrixXd q = 0.5 * (p_inv + p_inv.transpose());
    const ClosedLoopData cl = make_closed_loop(record, y.transpose() * q);
    const Eigen::MatrixXd mapped =
        build_mi_without_D(cl, q, 1.0 / eps1, values(problem.var("eps2")), delta);
    CHECK(max_eig(mapped) < 0.0);
  }
  CHECK(tested == 50);
}

TEST_SUITE_END();
