#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>

#include <Eigen/Core>

#include "bilstab/rng.hpp"
#include "bilstab/system.hpp"

namespace bilstab {

// Data matrices collected in one offline open-loop experiment of length T:
// U0 stacks the inputs, X0 the visited states, X1 the successor states, and
// V0 the products x(k)u(k) column by column.
struct DataRecord {
  Eigen::RowVectorXd U0;  // 1 x T
  Eigen::MatrixXd X0;     // n x T
  Eigen::MatrixXd X1;     // n x T
  Eigen::MatrixXd V0;     // n x T
  int T = 0;
  int n = 0;

  // Checks dimensions, finiteness, and V0(:,k) == X0(:,k)*U0(k).
  // Throws ValidationError naming the offending field.
  void validate() const;
};

struct DataDiagnostics {
  int rank_X0 = 0;
  double sigma_min = 0.0;      // smallest singular value of X0
  double cond_X0 = 0.0;        // sigma_max / sigma_min (inf when rank-deficient)
  double max_state_norm = 0.0; // largest column norm over [X0, X1]
  bool ill_conditioned = false;  // cond_X0 > 1e8
};

using InputSource = std::function<double(int)>;

// i.i.d. uniform[lo,hi) inputs drawn from a dedicated seeded generator.
InputSource uniform_input_source(double lo, double hi, std::uint64_t seed);

// Runs the open-loop experiment and assembles the record. By construction
// X1 = A*X0 + B*U0 + D*V0 up to floating-point roundoff.
// Throws ExperimentDiverged if the trajectory leaves the representable range.
DataRecord run_experiment(const BilinearSystem& sys, const Eigen::VectorXd& x0,
                          const InputSource& input_source, int T);

// Convenience: x0 uniform in [-0.5,0.5]^n and inputs uniform in [-1,1),
// both drawn from the same seeded generator (x0 first).
DataRecord run_experiment(const BilinearSystem& sys, int T, std::uint64_t seed);

// Column k of the result is X0(:,k) * U0(k).
Eigen::MatrixXd assemble_v0(const Eigen::RowVectorXd& U0, const Eigen::MatrixXd& X0);

// Rank/conditioning report for X0. Rank threshold: max(n,T)*sigma_max*1e-12.
DataDiagnostics diagnose(const DataRecord& data);

// || X1 - A*X0 - B*U0 - D*V0 ||_F  (test-only; needs the true system).
double consistency_residual(const DataRecord& data, const BilinearSystem& sys);

// Lossless JSON round-trip: {"T":int,"n":int,"U0":[[...]],"X0":..,"X1":..,"V0":..}.
// load() validates dimensions and the V0 invariant.
void save(const DataRecord& data, const std::filesystem::path& path);
DataRecord load(const std::filesystem::path& path);

std::string record_to_json(const DataRecord& data);
DataRecord record_from_json(const std::string& text);

}  // namespace bilstab
