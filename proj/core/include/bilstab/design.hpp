#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "bilstab/closed_loop.hpp"
#include "bilstab/data_record.hpp"
#include "bilstab/lmi.hpp"
#include "bilstab/maxdet.hpp"
#include "bilstab/system.hpp"

namespace bilstab {

enum class Provenance { kDataBased, kModelBased };

const char* to_string(Provenance provenance);

struct DesignConfig {
  double delta = 0.0;              // norm bound on D
  double mu = 1.0;                 // contraction factor, (0,1]
  std::vector<double> eps1_grid;   // strictly positive, ascending
  SolverOptions solver;

  void validate() const;
  static DesignConfig single(double delta, double eps1, double mu = 1.0);
};

// 50 logarithmically spaced points over [1e-3, 1e2].
std::vector<double> default_eps1_grid();

// 1.2 * ||D||: overapproximates the true bound by 20% (test parity helper;
// the data-based path itself never sees the true D).
double delta_from_system(const BilinearSystem& sys);

// Certified design outputs. For data-based results G_K satisfies X0*G_K = I
// and K = U0*G_K; Q = P^{-1}. The closed-loop quantities are stored so that
// verification does not need the raw data record again.
struct DesignResult {
  Provenance provenance = Provenance::kDataBased;
  SolveStatus status = SolveStatus::kInfeasible;
  double eps1 = 0.0;
  double eps2 = 0.0;   // NaN for the model-based baseline
  double mu = 1.0;
  double logdetP = 0.0;
  Eigen::RowVectorXd K;
  Eigen::MatrixXd GK;  // T x n; empty for model-based results
  Eigen::MatrixXd P;
  Eigen::MatrixXd Q;
  ClosedLoopData cl;
  std::vector<TraceRow> trace;  // solver iterations; not serialized

  bool optimal() const { return status == SolveStatus::kOptimal; }
  double detP() const;
  int n() const { return static_cast<int>(K.size()); }
};

// Data-based design at one fixed eps1 (cfg.eps1_grid must hold exactly one
// value). Requires rank(X0) = n; solver failures come back in the status.
DesignResult design_data_based(const DataRecord& data, const DesignConfig& cfg);

// Model-based baseline at one fixed eps1, using the true system matrices.
DesignResult design_model_based(const BilinearSystem& sys, double eps1,
                                const SolverOptions& solver = {});

struct SweepRow {
  double eps1 = 0.0;
  std::optional<DesignResult> data;
  std::optional<DesignResult> model;
  std::optional<double> rel_gain_diff;  // ||K_DB - K_MB|| / ||K_MB||, both optimal
};

struct SweepTable {
  std::vector<SweepRow> rows;  // one per grid point, ascending eps1
  int n = 0;
};

// One design per grid point; failures are recorded as rows, never raised.
SweepTable sweep_eps1(const DataRecord& data, const DesignConfig& cfg);
SweepTable sweep_eps1(const BilinearSystem& sys, const DesignConfig& cfg);
SweepTable sweep_eps1(const DataRecord& data, const BilinearSystem& sys,
                      const DesignConfig& cfg);

// Feasible row maximizing det(P); ties resolved toward smaller eps1. Tables
// holding both pipelines return the data-based design. Throws NotFoundError
// when no row is feasible.
DesignResult best_design(const SweepTable& table);

std::string design_to_json(const DesignResult& result);
DesignResult design_from_json(const std::string& text);

std::string sweep_to_json(const SweepTable& table);
// Columns: eps1, status, detP, logdetP, K_1..K_n, rel_gain_diff.
std::string sweep_to_csv(const SweepTable& table);

}  // namespace bilstab
