#include <doctest.h>

#include <cmath>

#include <Eigen/Dense>

#include "bilstab/lmi.hpp"
#include "bilstab/maxdet.hpp"
#include "test_util.hpp"

using namespace bilstab;
using bilstab::maxdet_detail::BarrierEval;
using bilstab::maxdet_detail::ReducedTerm;
using bilstab::maxdet_detail::eval_barrier;

TEST_SUITE_BEGIN("maxdet");

namespace {

// maximize log det P subject to P - bound < 0, P symmetric 2x2.
MaxDetProblem cap_instance(const Eigen::MatrixXd& bound) {
  MaxDetProblem problem;
  const Eigen::MatrixXi p_ids = add_symmetric_variable(problem, "P", 2);
  problem.objective_block = p_ids;
  AffineSymmetricForm form(2, "cap");
  for (int i = 0; i < 2; ++i)
    for (int j = i; j < 2; ++j)
      form.add_coefficient(p_ids(i, j), symmetric_basis(2, i, j));
  form.add_constant(-bound);
  problem.constraints.push_back(std::move(form));
  problem.eq_lhs = Eigen::MatrixXd::Zero(0, problem.num_vars());
  problem.eq_rhs = Eigen::VectorXd::Zero(0);
  return problem;
}

MaxDetProblem paper_data_problem(std::uint64_t seed = 1) {
  const BilinearSystem sys = example_system();
  const DataRecord record = testutil::well_posed_record(sys, 10, seed);
  return build_data_lmi(record, {0.7637, 0.8, 1.0});
}

}  // namespace

TEST_CASE("identity cap: objective approaches zero") {
  const MaxDetProblem problem = cap_instance(Eigen::MatrixXd::Identity(2, 2));
  const Solution solution = solve(problem);
  REQUIRE(solution.status == SolveStatus::kOptimal);
  CHECK(std::abs(solution.objective) < 1e-5);
  CHECK(solution.values(problem.var("P(0,0)")) == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(solution.values(problem.var("P(1,1)")) == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(std::abs(solution.values(problem.var("P(0,1)"))) < 1e-5);
}

TEST_CASE("diagonal cap: determinant approaches the grid-search oracle") {
  Eigen::MatrixXd bound(2, 2);
  bound << 2.0, 0.0,
           0.0, 3.0;

  // Independent oracle: exhaustive grid over diagonal P with step 1e-3.
  double oracle = 0.0;
  for (double p1 = 1e-3; p1 <= 2.0 + 1e-12; p1 += 1e-3)
    for (double p2 = 3.0; p2 >= 1e-3 - 1e-12; p2 -= 1e-3) {
      if (p1 <= 2.0 && p2 <= 3.0) {  // feasibility of diag(p1,p2) <= diag(2,3)
        oracle = std::max(oracle, p1 * p2);
        break;  // p2 descends, so the first feasible value is the best
      }
    }
  CHECK(oracle == doctest::Approx(6.0).epsilon(1e-6));

  const MaxDetProblem problem = cap_instance(bound);
  const Solution solution = solve(problem);
  REQUIRE(solution.status == SolveStatus::kOptimal);
  const double det =
      std::exp(-solution.objective);  // objective is -log det P
  CHECK(det == doctest::Approx(oracle).epsilon(1e-4));
}

TEST_CASE("phase1: scalar cap returns a strictly feasible scalar") {
  MaxDetProblem problem;
  const int x = add_scalar_variable(problem, "x");
  problem.objective_block.resize(1, 1);
  problem.objective_block(0, 0) = x;
  AffineSymmetricForm form(2, "scalar-cap");
  form.add_coefficient(x, Eigen::MatrixXd::Identity(2, 2));
  form.add_constant(-Eigen::MatrixXd::Identity(2, 2));
  problem.constraints.push_back(std::move(form));
  problem.eq_lhs = Eigen::MatrixXd::Zero(0, 1);
  problem.eq_rhs = Eigen::VectorXd::Zero(0);

  const Phase1Result result = phase1(problem);
  REQUIRE(result.feasible);
  const double sigma = problem.constraints[0].strict_margin();
  CHECK(result.point(0) < 1.0 - sigma);
  CHECK(result.point(0) > 0.0);  // objective block must be positive definite
}

TEST_CASE("phase1: contradictory equalities are infeasible with residual report") {
  MaxDetProblem problem;
  const int x = add_scalar_variable(problem, "x");
  problem.objective_block.resize(1, 1);
  problem.objective_block(0, 0) = x;
  AffineSymmetricForm form(1, "cap");
  form.add_coefficient(x, Eigen::MatrixXd::Identity(1, 1));
  form.add_constant(-2.0 * Eigen::MatrixXd::Identity(1, 1));
  problem.constraints.push_back(std::move(form));
  problem.eq_lhs.resize(2, 1);
  problem.eq_lhs << 1.0, 1.0;
  problem.eq_rhs.resize(2);
  problem.eq_rhs << 0.0, 1.0;

  const Phase1Result p1 = phase1(problem);
  CHECK_FALSE(p1.feasible);
  CHECK(p1.status == SolveStatus::kInfeasible);
  CHECK(p1.message.find("residual") != std::string::npos);

  const Solution solution = solve(problem);
  CHECK(solution.status == SolveStatus::kInfeasible);
}

TEST_CASE("phase1 finds a strictly feasible point for the example data problem") {
  const MaxDetProblem problem = paper_data_problem();
  const Phase1Result result = phase1(problem);
  REQUIRE(result.feasible);
  const SolutionCheck check = check_solution(problem, result.point);
  for (std::size_t i = 0; i < check.margins.size(); ++i)
    CHECK(check.margins[i].eig_max < -problem.constraints[i].strict_margin());
  CHECK(check.eq_residual <= 1e-9 * (1.0 + problem.eq_rhs.norm()));
}

TEST_CASE("check_solution: reference baseline values are feasible") {
  const BilinearSystem sys = example_system();
  const MaxDetProblem problem = build_model_lmi(sys, 0.8);

  Eigen::MatrixXd p(2, 2);
  p << 8.5623, -4.7253,
       -4.7253, 6.3616;
  Eigen::RowVectorXd k(2);
  k << -0.3572, -0.5738;
  const Eigen::VectorXd y = p * k.transpose();

  Eigen::VectorXd values = Eigen::VectorXd::Zero(problem.num_vars());
  values(problem.var("P(0,0)")) = p(0, 0);
  values(problem.var("P(0,1)")) = p(0, 1);
  values(problem.var("P(1,1)")) = p(1, 1);
  values(problem.var("y(0,0)")) = y(0);
  values(problem.var("y(1,0)")) = y(1);

  const SolutionCheck check = check_solution(problem, values);
  // The published optimum sits on the constraint boundary and its entries are
  // rounded to four decimals, so allow the rounding residue.
  for (const auto& margin : check.margins) CHECK(margin.eig_max < 1e-3);
  CHECK(check.margins[1].eig_max < 0.0);  // -P is strictly inside
  CHECK(check.eq_residual == 0.0);
}

TEST_CASE("optimal solutions satisfy the margin postcondition") {
  const MaxDetProblem problem = paper_data_problem();
  const Solution solution = solve(problem);
  REQUIRE(solution.status == SolveStatus::kOptimal);
  REQUIRE(solution.margins.size() == problem.constraints.size());
  for (std::size_t i = 0; i < solution.margins.size(); ++i)
    CHECK(solution.margins[i].eig_max <= -0.5 * problem.constraints[i].strict_margin());
  CHECK(solution.eq_residual <= 1e-9 * (1.0 + problem.eq_rhs.norm()));
}

TEST_CASE("barrier gradients and Hessians match central differences") {
  Rng rng(2718);
  const double h = 1e-6;
  for (int instance = 0; instance < 20; ++instance) {
    const int dim = 2 + static_cast<int>(rng.next_u64() % 2);
    const int nvars = 2 + static_cast<int>(rng.next_u64() % 2);
    ReducedTerm term;
    term.base = testutil::random_spd(rng, dim, 1.0);
    double coef_norm = 0.0;
    for (int j = 0; j < nvars; ++j) {
      const Eigen::MatrixXd raw = testutil::random_matrix(rng, dim, dim);
      term.coef.push_back(0.5 * (raw + raw.transpose()));
      coef_norm += term.coef.back().norm();
    }
    term.base += coef_norm * Eigen::MatrixXd::Identity(dim, dim);
    const Eigen::VectorXd w0 = 0.3 * testutil::random_matrix(rng, nvars, 1);

    const BarrierEval eval = eval_barrier(term, w0, true);
    REQUIRE(eval.feasible);
    for (int j = 0; j < nvars; ++j) {
      Eigen::VectorXd wp = w0, wm = w0;
      wp(j) += h;
      wm(j) -= h;
      const BarrierEval up = eval_barrier(term, wp, true);
      const BarrierEval down = eval_barrier(term, wm, true);
      REQUIRE(up.feasible);
      REQUIRE(down.feasible);
      const double grad_fd = (up.value - down.value) / (2.0 * h);
      CHECK(eval.grad(j) ==
            doctest::Approx(grad_fd).epsilon(1e-4));
      for (int k = 0; k < nvars; ++k) {
        const double hess_fd = (up.grad(k) - down.grad(k)) / (2.0 * h);
        CHECK(eval.hess(j, k) ==
              doctest::Approx(hess_fd).epsilon(1e-4).scale(1.0));
      }
    }
  }
}

TEST_CASE("centering objective is monotone over outer iterations") {
  const Solution solution = solve(paper_data_problem());
  REQUIRE(solution.status == SolveStatus::kOptimal);
  REQUIRE(solution.outer_objectives.size() >= 2);
  for (std::size_t i = 1; i < solution.outer_objectives.size(); ++i)
    CHECK(solution.outer_objectives[i] <= solution.outer_objectives[i - 1] + 1e-9);
}

TEST_CASE("solver is bitwise deterministic") {
  const MaxDetProblem problem = paper_data_problem();
  const Solution a = solve(problem);
  const Solution b = solve(problem);
  REQUIRE(a.status == b.status);
  REQUIRE(a.trace.size() == b.trace.size());
  for (std::size_t i = 0; i < a.trace.size(); ++i) {
    CHECK(a.trace[i].objective == b.trace[i].objective);
    CHECK(a.trace[i].worst_margin == b.trace[i].worst_margin);
    CHECK(a.trace[i].newton_steps == b.trace[i].newton_steps);
  }
  REQUIRE(a.values.size() == b.values.size());
  for (Eigen::Index i = 0; i < a.values.size(); ++i) CHECK(a.values(i) == b.values(i));
}

TEST_CASE("scaling the whole problem by 10 keeps the status and optimum") {
  const MaxDetProblem original = paper_data_problem();
  MaxDetProblem scaled = original;
  for (auto& form : scaled.constraints) {
    form.add_constant(9.0 * form.constant());
    const auto snapshot = form.coefficients();
    for (const auto& [var, coef] : snapshot) form.add_coefficient(var, 9.0 * coef);
  }
  scaled.eq_lhs *= 10.0;
  scaled.eq_rhs *= 10.0;

  const Solution a = solve(original);
  const Solution b = solve(scaled);
  REQUIRE(a.status == SolveStatus::kOptimal);
  REQUIRE(b.status == SolveStatus::kOptimal);
  CHECK(std::exp(-b.objective) == doctest::Approx(std::exp(-a.objective)).epsilon(1e-2));
}

TEST_CASE("diagonal instances match the exhaustive grid oracle") {
  Rng rng(5150);
  for (int instance = 0; instance < 20; ++instance) {
    const double r1 = rng.uniform(0.5, 3.0);
    const double r2 = rng.uniform(0.5, 3.0);
    const double a1 = rng.uniform(0.2, 1.0);
    const double a2 = rng.uniform(0.2, 1.0);
    const double c = (a1 * r1 + a2 * r2) * rng.uniform(0.5, 0.9);

    MaxDetProblem problem;
    const int d1 = add_scalar_variable(problem, "d1");
    const int d2 = add_scalar_variable(problem, "d2");
    problem.objective_block.resize(2, 2);
    problem.objective_block << d1, -1,
                               -1, d2;
    auto cap = [&](int var, double r, const char* name) {
      AffineSymmetricForm form(1, name);
      form.add_coefficient(var, Eigen::MatrixXd::Identity(1, 1));
      form.add_constant(-r * Eigen::MatrixXd::Identity(1, 1));
      problem.constraints.push_back(std::move(form));
    };
    cap(d1, r1, "cap1");
    cap(d2, r2, "cap2");
    AffineSymmetricForm coupling(1, "coupling");
    coupling.add_coefficient(d1, a1 * Eigen::MatrixXd::Identity(1, 1));
    coupling.add_coefficient(d2, a2 * Eigen::MatrixXd::Identity(1, 1));
    coupling.add_constant(-c * Eigen::MatrixXd::Identity(1, 1));
    problem.constraints.push_back(std::move(coupling));
    problem.eq_lhs = Eigen::MatrixXd::Zero(0, 2);
    problem.eq_rhs = Eigen::VectorXd::Zero(0);

    // Exhaustive grid oracle (step 1e-3); for fixed v1 the objective grows
    // with v2, so the scan can stop at the first feasible v2 from above.
    double best = 0.0;
    for (double v1 = 1e-3; v1 <= r1 + 1e-12; v1 += 1e-3) {
      for (double v2 = r2; v2 >= 1e-3 - 1e-12; v2 -= 1e-3) {
        if (v1 < r1 && v2 < r2 && a1 * v1 + a2 * v2 < c) {
          best = std::max(best, v1 * v2);
          break;
        }
      }
    }
    REQUIRE(best > 0.0);

    const Solution solution = solve(problem);
    REQUIRE(solution.status == SolveStatus::kOptimal);
    CHECK(std::abs(solution.objective - (-std::log(best))) < 1e-2);
  }
}

TEST_SUITE_END();
