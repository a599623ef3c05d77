#include "bilstab/ellipsoid.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

namespace bilstab {

void Ellipsoid::validate() const {
  if (Q.rows() != Q.cols() || Q.rows() < 1)
    throw std::invalid_argument("Ellipsoid: Q must be square and non-empty");
  if (!Q.allFinite()) throw std::invalid_argument("Ellipsoid: Q has non-finite entries");
  const double scale = Q.cwiseAbs().maxCoeff();
  if ((Q - Q.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + scale))
    throw std::invalid_argument("Ellipsoid: Q is not symmetric");
}

double lyapunov_value(const Ellipsoid& e, const Eigen::VectorXd& x) {
  e.validate();
  if (x.size() != e.Q.rows()) throw std::invalid_argument("lyapunov_value: dimension mismatch");
  return x.dot(e.Q * x);
}

bool ellipsoid_contains(const Ellipsoid& e, const Eigen::VectorXd& x) {
  return lyapunov_value(e, x) <= 1.0;
}

namespace {

Eigen::MatrixXd spd_power(const Eigen::MatrixXd& m, double exponent) {
  if (m.rows() != m.cols()) throw std::invalid_argument("spd_power: matrix must be square");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
  if (eig.info() != Eigen::Success) throw std::invalid_argument("spd_power: eigensolver failed");
  if (eig.eigenvalues().minCoeff() <= 0.0)
    throw std::invalid_argument("spd_power: matrix is not positive definite");
  const Eigen::VectorXd powers =
      eig.eigenvalues().array().pow(exponent).matrix();
  return eig.eigenvectors() * powers.asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace

Eigen::MatrixXd spd_sqrt(const Eigen::MatrixXd& m) { return spd_power(m, 0.5); }

Eigen::MatrixXd spd_inverse_sqrt(const Eigen::MatrixXd& m) { return spd_power(m, -0.5); }

std::vector<Eigen::VectorXd> sample_ellipsoid(const Ellipsoid& e, int count, SampleMode mode,
                                              std::uint64_t seed) {
  e.validate();
  if (count < 1) throw std::invalid_argument("sample_ellipsoid: count must be >= 1");
  const Eigen::Index n = e.Q.rows();
  const Eigen::MatrixXd q_inv_sqrt = spd_inverse_sqrt(e.Q);  // throws if Q not PD

  Rng rng(seed);
  std::vector<Eigen::VectorXd> samples;
  samples.reserve(count);
  for (int i = 0; i < count; ++i) {
    Eigen::VectorXd z = rng.normal_vector(n);
    while (z.norm() < 1e-12) z = rng.normal_vector(n);
    Eigen::VectorXd x = q_inv_sqrt * (z / z.norm());
    // Renormalize so x'Qx = 1 exactly up to roundoff, then pull marginally
    // inside so membership x'Qx <= 1 holds.
    x /= std::sqrt(x.dot(e.Q * x));
    x *= (1.0 - 1e-14);
    if (mode == SampleMode::kInterior) {
      const double r = rng.uniform01_open_closed();  // (0,1], never the origin
      x *= std::pow(r, 1.0 / static_cast<double>(n));
    }
    samples.push_back(std::move(x));
  }
  return samples;
}

}  // namespace bilstab
