#include <doctest.h>

#include <cmath>

#include <Eigen/Dense>

#include "bilstab/design.hpp"
#include "bilstab/errors.hpp"
#include "bilstab/lmi.hpp"
#include "bilstab/maxdet.hpp"
#include "test_util.hpp"

using namespace bilstab;

TEST_SUITE_BEGIN("design");

namespace {

DataRecord paper_record(std::uint64_t seed = 1) {
  return testutil::well_posed_record(example_system(), 10, seed);
}

}  // namespace

TEST_CASE("data-based design at eps1 = 0.8 is feasible and self-consistent") {
  const DataRecord record = paper_record();
  const DesignResult result = design_data_based(record, DesignConfig::single(0.7637, 0.8));
  REQUIRE(result.optimal());

  CHECK((record.X0 * result.GK - Eigen::MatrixXd::Identity(2, 2)).norm() <=
        gk_consistency_tol(record.T));
  CHECK((result.K - record.U0 * result.GK).norm() == 0.0);
  CHECK((result.Q * result.P - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() <= 1e-9);
  CHECK(result.logdetP == doctest::Approx(std::log(result.detP())).epsilon(1e-9));
  CHECK(result.eps2 > 0.0);
  CHECK(result.provenance == Provenance::kDataBased);
}

TEST_CASE("gain formula consistency: U0 Y' (X0 Y')^{-1} equals U0 G_K") {
  const DataRecord record = paper_record();
  const DesignResult result = design_data_based(record, DesignConfig::single(0.7637, 0.8));
  REQUIRE(result.optimal());
  const Eigen::MatrixXd y_t = result.GK * result.P;  // Y' = G_K P
  const Eigen::MatrixXd x0yt = record.X0 * y_t;
  const Eigen::RowVectorXd k_alt = record.U0 * y_t * x0yt.inverse();
  CHECK((k_alt - result.K).norm() <= 1e-9 * (1.0 + result.K.norm()));
}

TEST_CASE("zero-D data reduces toward a stabilizing linear design") {
  const BilinearSystem base = example_system();
  const BilinearSystem linear = make_system(base.A, base.B, Eigen::MatrixXd::Zero(2, 2));
  const DataRecord record = testutil::well_posed_record(linear, 10, 4);
  const DesignResult result = design_data_based(record, DesignConfig::single(1e-6, 0.8));
  REQUIRE(result.optimal());
  const Eigen::MatrixXd closed = linear.A + linear.B * result.K;
  const auto eigenvalues = closed.eigenvalues();
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i)
    CHECK(std::abs(eigenvalues(i)) < 1.0);
}

TEST_CASE("tiny eps1 on the example instance is infeasible with no gain") {
  const DataRecord record = paper_record();
  const DesignResult result = design_data_based(record, DesignConfig::single(0.7637, 1e-6));
  CHECK(result.status == SolveStatus::kInfeasible);
  CHECK(result.K.size() == 0);
  CHECK(result.P.size() == 0);
}

TEST_CASE("rank-deficient data is rejected up front") {
  const BilinearSystem sys = example_system();
  const DataRecord degenerate =
      run_experiment(sys, Eigen::VectorXd::Zero(2), [](int) { return 0.0; }, 10);
  CHECK_THROWS_AS(design_data_based(degenerate, DesignConfig::single(0.7637, 0.8)),
                  std::invalid_argument);
}

TEST_CASE("model-based design reproduces the reference values at eps1 = 0.8") {
  const DesignResult result = design_model_based(example_system(), 0.8);
  REQUIRE(result.optimal());
  CHECK(result.K(0) == doctest::Approx(-0.3572).epsilon(0.06));
  CHECK(std::abs(result.K(0) - (-0.3572)) <= 0.02);
  CHECK(std::abs(result.K(1) - (-0.5738)) <= 0.02);

  Eigen::MatrixXd p_ref(2, 2);
  p_ref << 8.5623, -4.7253,
           -4.7253, 6.3616;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      CHECK(std::abs(result.P(i, j) - p_ref(i, j)) <= 0.05 * std::abs(p_ref(i, j)));
  CHECK(result.provenance == Provenance::kModelBased);
  CHECK(result.GK.size() == 0);
}

TEST_CASE("model-based design at eps1 = 0.4 reproduces the reference volume") {
  const DesignResult result = design_model_based(example_system(), 0.4);
  REQUIRE(result.optimal());
  CHECK(std::abs(result.detP() - 60.03) <= 0.05 * 60.03);
}

TEST_CASE("stable open loop with D = 0 is feasible but its volume is unbounded") {
  Eigen::MatrixXd a(2, 2);
  a << 0.5, 0.1,
       0.0, 0.4;
  Eigen::MatrixXd b(2, 1);
  b << 1.0,
       1.0;
  const BilinearSystem sys = make_system(a, b, Eigen::MatrixXd::Zero(2, 2));
  // K = 0 already stabilizes globally (the input-coupled term vanishes with
  // D = 0), so every scaled-up P stays feasible and det(P) has no finite
  // maximum. The solver must find feasible points yet flag the divergence.
  const MaxDetProblem problem = build_model_lmi(sys, 0.05);
  CHECK(phase1(problem).feasible);
  const Solution solution = solve(problem);
  CHECK(solution.status == SolveStatus::kNumericalTrouble);
  CHECK(solution.message.find("unbounded") != std::string::npos);
}

TEST_CASE("delta helper overapproximates the true norm by 20%") {
  const BilinearSystem sys = example_system();
  const double norm_d = sys.D.jacobiSvd().singularValues()(0);
  CHECK(delta_from_system(sys) == doctest::Approx(1.2 * norm_d).epsilon(1e-12));
  CHECK(delta_from_system(sys) == doctest::Approx(0.7637).epsilon(1e-3));
}

TEST_CASE("sweep with a single grid point runs both pipelines") {
  const DataRecord record = paper_record();
  DesignConfig cfg = DesignConfig::single(0.7637, 0.8);
  const SweepTable table = sweep_eps1(record, example_system(), cfg);
  REQUIRE(table.rows.size() == 1);
  const SweepRow& row = table.rows.front();
  REQUIRE(row.data.has_value());
  REQUIRE(row.model.has_value());
  CHECK(row.data->optimal());
  CHECK(row.model->optimal());
  REQUIRE(row.rel_gain_diff.has_value());
  CHECK(*row.rel_gain_diff >= 0.0);
  CHECK(*row.rel_gain_diff < 1.0);
}

TEST_CASE("an absurd delta renders every sweep row infeasible") {
  const DataRecord record = paper_record();
  DesignConfig cfg;
  cfg.delta = 100.0;
  cfg.eps1_grid = {0.1, 0.8, 10.0};
  const SweepTable table = sweep_eps1(record, cfg);
  REQUIRE(table.rows.size() == 3);
  for (const auto& row : table.rows) {
    REQUIRE(row.data.has_value());
    CHECK_FALSE(row.data->optimal());
  }
  CHECK_THROWS_AS(best_design(table), NotFoundError);
}

TEST_CASE("default grid has 50 ascending points spanning [1e-3, 1e2]") {
  const auto grid = default_eps1_grid();
  REQUIRE(grid.size() == 50);
  CHECK(grid.front() == doctest::Approx(1e-3).epsilon(1e-12));
  CHECK(grid.back() == doctest::Approx(1e2).epsilon(1e-12));
  for (std::size_t i = 1; i < grid.size(); ++i) CHECK(grid[i] > grid[i - 1]);
}

TEST_CASE("best_design picks the largest determinant, ties toward small eps1") {
  auto stub = [](double eps1, double det_scale) {
    DesignResult r;
    r.provenance = Provenance::kDataBased;
    r.status = SolveStatus::kOptimal;
    r.eps1 = eps1;
    r.P = det_scale * Eigen::MatrixXd::Identity(2, 2);
    r.K = Eigen::RowVectorXd::Zero(2);
    return r;
  };
  SweepTable table;
  table.n = 2;

  SweepRow only;
  only.eps1 = 0.8;
  only.data = stub(0.8, 1.0);
  table.rows = {only};
  CHECK(best_design(table).eps1 == 0.8);

  SweepRow low, high;
  low.eps1 = 0.4;
  low.data = stub(0.4, std::sqrt(3.0));      // detP = 3
  high.eps1 = 0.8;
  high.data = stub(0.8, std::sqrt(60.03));   // detP = 60.03
  table.rows = {low, high};
  CHECK(best_design(table).eps1 == 0.8);

  SweepRow tie_a = low, tie_b = high;
  tie_a.data = stub(0.4, std::sqrt(5.0));
  tie_b.data = stub(0.8, std::sqrt(5.0));
  table.rows = {tie_a, tie_b};
  CHECK(best_design(table).eps1 == 0.4);
}

TEST_CASE("sweep argmax row agrees with best_design") {
  const DataRecord record = paper_record();
  DesignConfig cfg;
  cfg.delta = 0.7637;
  cfg.eps1_grid = {0.2, 0.5, 0.8, 1.5};
  const SweepTable table = sweep_eps1(record, cfg);
  double max_det = -1.0;
  for (const auto& row : table.rows)
    if (row.data->optimal()) max_det = std::max(max_det, row.data->detP());
  REQUIRE(max_det > 0.0);
  CHECK(best_design(table).detP() == doctest::Approx(max_det));
}

TEST_CASE("design JSON round-trips the certified fields") {
  const DataRecord record = paper_record();
  const DesignResult result = design_data_based(record, DesignConfig::single(0.7637, 0.8));
  REQUIRE(result.optimal());
  const DesignResult back = design_from_json(design_to_json(result));
  CHECK(back.provenance == result.provenance);
  CHECK(back.status == result.status);
  CHECK(back.eps1 == result.eps1);
  CHECK(back.mu == result.mu);
  CHECK((back.K - result.K).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.P - result.P).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.Q - result.Q).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.GK - result.GK).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.cl.Ac - result.cl.Ac).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.cl.H - result.cl.H).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.cl.Kc - result.cl.Kc).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("sweep CSV carries the fixed schema") {
  const DataRecord record = paper_record();
  DesignConfig cfg;
  cfg.delta = 0.7637;
  cfg.eps1_grid = {1e-6 + 1e-7, 0.8};  // one infeasible, one feasible
  cfg.eps1_grid[0] = 1e-4;
  const SweepTable table = sweep_eps1(record, cfg);
  const std::string csv = sweep_to_csv(table);
  CHECK(csv.rfind("eps1,status,detP,logdetP,K_1,K_2,rel_gain_diff\n", 0) == 0);
  CHECK(csv.find("Optimal") != std::string::npos);
}

TEST_SUITE_END();
