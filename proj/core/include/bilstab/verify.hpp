#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <Eigen/Core>

#include "bilstab/design.hpp"
#include "bilstab/system.hpp"

namespace bilstab {

// Sampling-based cross-checks of a certified design. Every quantity is the
// worst case over the drawn samples; all fields are reproducible from the
// stored seed.
struct VerificationReport {
  // max over ellipsoid samples of lambda_max of the (mu-adjusted) Lyapunov
  // increment matrix; negative everywhere when the certificate holds.
  std::optional<double> worst_nd_eig;
  // max over samples of (V(x+) - mu V(x)) / V(x), the relative increment.
  std::optional<double> worst_decrease;
  std::optional<double> robust_worst_nd_eig;    // worst over sampled D
  std::optional<double> robust_worst_decrease;
  std::optional<double> basin_converged_fraction;
  std::optional<double> basin_worst_v_step;     // max over steps of V(k+1)-V(k)

  int samples = 0;
  int num_D = 0;
  int basin_grid = 0;
  int horizon = 0;
  std::uint64_t seed = 0;

  bool pass() const;
};

// Lyapunov decrease on the certified ellipsoid for one specific D, sampled at
// 70% boundary / 30% interior points (the origin is never drawn). Each sample
// is evaluated two ways, through the increment matrix and through one
// closed-loop step; divergence beyond 1e-9 relative raises
// InternalConsistencyError since it indicates an assembly bug.
VerificationReport verify_decrease(const DesignResult& result, const Eigen::MatrixXd& D,
                                   int samples, std::uint64_t seed);

// Decrease check over num_D sampled D with ||D|| <= delta (norm-normalized
// Gaussian directions, radius uniform in [0, delta], every fifth draw pinned
// to the boundary radius).
VerificationReport verify_robust(const DesignResult& result, double delta, int num_D,
                                 int samples, std::uint64_t seed);

// Direct simulation from `grid` interior starts with the true system:
// convergence means ||x(horizon)|| <= 1e-8 * max(1, ||x(0)||) and the
// trajectory never leaves the ellipsoid. Failures lower the fraction, they
// are not raised.
VerificationReport verify_basin(const BilinearSystem& sys, const DesignResult& result, int grid,
                                int horizon, std::uint64_t seed);

// Field-wise combination; either side may carry partial results.
VerificationReport merge_reports(const VerificationReport& a, const VerificationReport& b);

std::string report_to_json(const VerificationReport& report);

inline constexpr double kConvergenceNorm = 1e-8;

}  // namespace bilstab
