#include "bilstab/verify.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>
#include <json.hpp>

#include "bilstab/closed_loop.hpp"
#include "bilstab/ellipsoid.hpp"
#include "bilstab/errors.hpp"
#include "bilstab/rng.hpp"

namespace bilstab {

using nlohmann::json;

namespace {

std::vector<Eigen::VectorXd> mixed_samples(const Ellipsoid& e, int samples, std::uint64_t seed) {
  const int boundary = static_cast<int>(std::lround(0.7 * samples));
  const int interior = samples - boundary;
  std::vector<Eigen::VectorXd> points;
  if (boundary > 0) points = sample_ellipsoid(e, boundary, SampleMode::kBoundary, seed);
  if (interior > 0) {
    auto inner =
        sample_ellipsoid(e, interior, SampleMode::kInterior, seed ^ 0x9e3779b97f4a7c15ULL);
    points.insert(points.end(), inner.begin(), inner.end());
  }
  return points;
}

Eigen::MatrixXd sample_d_ball(int n, double radius, Rng& rng) {
  if (radius == 0.0) return Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd direction = rng.normal_matrix(n, n);
  double norm = direction.jacobiSvd().singularValues()(0);
  while (norm < 1e-12) {
    direction = rng.normal_matrix(n, n);
    norm = direction.jacobiSvd().singularValues()(0);
  }
  return (radius / norm) * direction;
}

}  // namespace

bool VerificationReport::pass() const {
  if (worst_nd_eig && !(*worst_nd_eig < 0.0)) return false;
  if (worst_decrease && !(*worst_decrease < 0.0)) return false;
  if (robust_worst_nd_eig && !(*robust_worst_nd_eig < 0.0)) return false;
  if (robust_worst_decrease && !(*robust_worst_decrease < 0.0)) return false;
  if (basin_converged_fraction && !(*basin_converged_fraction >= 1.0)) return false;
  return true;
}

VerificationReport verify_decrease(const DesignResult& result, const Eigen::MatrixXd& D,
                                   int samples, std::uint64_t seed) {
  if (!result.optimal())
    throw std::invalid_argument("verify_decrease: design result is not Optimal");
  if (samples < 1) throw std::invalid_argument("verify_decrease: samples must be >= 1");
  const Ellipsoid e{result.Q};
  const double mu = result.mu;

  VerificationReport report;
  report.samples = samples;
  report.seed = seed;

  double worst_eig = -std::numeric_limits<double>::infinity();
  double worst_rel = -std::numeric_limits<double>::infinity();
  for (const Eigen::VectorXd& x : mixed_samples(e, samples, seed)) {
    Eigen::MatrixXd nd = nd_matrix(result.cl, e, D, x);
    if (mu < 1.0) nd += (1.0 - mu) * result.Q;
    const double lam_max =
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(nd).eigenvalues().maxCoeff();
    const double quad = x.dot(nd * x);

    const Eigen::VectorXd x_next = g_matrix(result.cl, D, x) * x;
    const double v_now = lyapunov_value(e, x);
    const double increment = lyapunov_value(e, x_next) - mu * v_now;

    const double scale = 1.0 + std::max(std::abs(quad), std::abs(increment));
    if (std::abs(quad - increment) > 1e-9 * scale)
      throw InternalConsistencyError(
          "increment matrix and direct step disagree: " + std::to_string(quad) + " vs " +
          std::to_string(increment));

    worst_eig = std::max(worst_eig, lam_max);
    worst_rel = std::max(worst_rel, increment / v_now);
  }
  report.worst_nd_eig = worst_eig;
  report.worst_decrease = worst_rel;
  return report;
}

VerificationReport verify_robust(const DesignResult& result, double delta, int num_D,
                                 int samples, std::uint64_t seed) {
  if (!result.optimal())
    throw std::invalid_argument("verify_robust: design result is not Optimal");
  if (num_D < 1) throw std::invalid_argument("verify_robust: num_D must be >= 1");
  if (delta < 0.0) throw std::invalid_argument("verify_robust: delta must be >= 0");

  VerificationReport report;
  report.samples = samples;
  report.num_D = num_D;
  report.seed = seed;

  Rng rng(seed);
  const int n = result.n();
  double worst_eig = -std::numeric_limits<double>::infinity();
  double worst_rel = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < num_D; ++i) {
    const double radius = (i % 5 == 0) ? delta : delta * rng.uniform01();
    const Eigen::MatrixXd D = sample_d_ball(n, radius, rng);
    const VerificationReport partial =
        verify_decrease(result, D, samples, seed + 0x100 + static_cast<std::uint64_t>(i));
    worst_eig = std::max(worst_eig, *partial.worst_nd_eig);
    worst_rel = std::max(worst_rel, *partial.worst_decrease);
  }
  report.robust_worst_nd_eig = worst_eig;
  report.robust_worst_decrease = worst_rel;
  return report;
}

VerificationReport verify_basin(const BilinearSystem& sys, const DesignResult& result, int grid,
                                int horizon, std::uint64_t seed) {
  if (!result.optimal())
    throw std::invalid_argument("verify_basin: design result is not Optimal");
  if (grid < 1 || horizon < 1)
    throw std::invalid_argument("verify_basin: grid and horizon must be >= 1");
  sys.validate();

  const Ellipsoid e{result.Q};
  VerificationReport report;
  report.basin_grid = grid;
  report.horizon = horizon;
  report.seed = seed;

  int good = 0;
  double worst_step = -std::numeric_limits<double>::infinity();
  const auto starts = sample_ellipsoid(e, grid, SampleMode::kInterior, seed);
  for (const Eigen::VectorXd& x0 : starts) {
    Eigen::VectorXd x = x0;
    bool stayed = true;
    double v_prev = lyapunov_value(e, x);
    for (int k = 0; k < horizon; ++k) {
      x = step(sys, x, result.K.dot(x));
      const double v = lyapunov_value(e, x);
      if (v > 1.0 + 1e-12) stayed = false;
      worst_step = std::max(worst_step, v - v_prev);
      v_prev = v;
    }
    const bool converged = x.norm() <= kConvergenceNorm * std::max(1.0, x0.norm());
    if (stayed && converged) ++good;
  }
  report.basin_converged_fraction = static_cast<double>(good) / grid;
  report.basin_worst_v_step = worst_step;
  return report;
}

VerificationReport merge_reports(const VerificationReport& a, const VerificationReport& b) {
  VerificationReport merged = a;
  auto take = [](std::optional<double>& dst, const std::optional<double>& src) {
    if (src) dst = src;
  };
  take(merged.worst_nd_eig, b.worst_nd_eig);
  take(merged.worst_decrease, b.worst_decrease);
  take(merged.robust_worst_nd_eig, b.robust_worst_nd_eig);
  take(merged.robust_worst_decrease, b.robust_worst_decrease);
  take(merged.basin_converged_fraction, b.basin_converged_fraction);
  take(merged.basin_worst_v_step, b.basin_worst_v_step);
  merged.samples = std::max(merged.samples, b.samples);
  merged.num_D = std::max(merged.num_D, b.num_D);
  merged.basin_grid = std::max(merged.basin_grid, b.basin_grid);
  merged.horizon = std::max(merged.horizon, b.horizon);
  return merged;
}

std::string report_to_json(const VerificationReport& report) {
  json j;
  auto put = [&](const char* key, const std::optional<double>& value) {
    j[key] = value ? json(*value) : json(nullptr);
  };
  put("worst_nd_eig", report.worst_nd_eig);
  put("worst_decrease", report.worst_decrease);
  put("robust_worst_nd_eig", report.robust_worst_nd_eig);
  put("robust_worst_decrease", report.robust_worst_decrease);
  put("basin_converged_fraction", report.basin_converged_fraction);
  put("basin_worst_v_step", report.basin_worst_v_step);
  j["samples"] = report.samples;
  j["num_D"] = report.num_D;
  j["basin_grid"] = report.basin_grid;
  j["horizon"] = report.horizon;
  j["seed"] = report.seed;
  j["pass"] = report.pass();
  return j.dump(2);
}

}  // namespace bilstab
