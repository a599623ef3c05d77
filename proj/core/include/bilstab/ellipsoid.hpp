#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "bilstab/rng.hpp"

namespace bilstab {

// Sublevel set { x : x'Qx <= 1 } of the quadratic Lyapunov function V(x) = x'Qx.
struct Ellipsoid {
  Eigen::MatrixXd Q;  // symmetric positive definite

  // Throws std::invalid_argument if Q is not square/symmetric/finite.
  // Positive definiteness is checked where it is actually needed (sampling).
  void validate() const;
};

double lyapunov_value(const Ellipsoid& e, const Eigen::VectorXd& x);

bool ellipsoid_contains(const Ellipsoid& e, const Eigen::VectorXd& x);

enum class SampleMode { kBoundary, kInterior };

// Deterministic ellipsoid sampling from a 64-bit seed.
// Boundary points are Q^{-1/2} * (unit sphere samples), renormalized so that
// x'Qx = 1 to within 1e-12; interior points are additionally scaled by r^{1/n}
// with r uniform in (0,1], which never produces the origin.
// Throws std::invalid_argument if Q is not positive definite or count < 1.
std::vector<Eigen::VectorXd> sample_ellipsoid(const Ellipsoid& e, int count, SampleMode mode,
                                              std::uint64_t seed);

// Unique symmetric positive definite square root, via eigendecomposition.
// Throws std::invalid_argument if m is not symmetric positive definite.
Eigen::MatrixXd spd_sqrt(const Eigen::MatrixXd& m);
Eigen::MatrixXd spd_inverse_sqrt(const Eigen::MatrixXd& m);

}  // namespace bilstab
