#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

namespace bilstab {

// Discrete-time single-input bilinear dynamics  x+ = A x + B u + D x u.
struct BilinearSystem {
  Eigen::MatrixXd A;  // n x n state map
  Eigen::MatrixXd B;  // n x 1 input map
  Eigen::MatrixXd D;  // n x n bilinear map
  int n = 0;

  // Throws std::invalid_argument on inconsistent dimensions or non-finite entries.
  void validate() const;
};

BilinearSystem make_system(Eigen::MatrixXd A, Eigen::MatrixXd B, Eigen::MatrixXd D);

// Built-in two-state demo system used by the CLI and the test suite.
// Its open-loop A is unstable, which makes the design non-trivial.
BilinearSystem example_system();

// Norm bound used with example_system(): overapproximates ||D|| by 20%.
inline constexpr double kExampleDelta = 0.7637;

// One step of the dynamics.
Eigen::VectorXd step(const BilinearSystem& sys, const Eigen::VectorXd& x, double u);

// Iterates step(); result has inputs.size()+1 states, starting with x0.
// Throws ExperimentDiverged (with the failing step index) if a state leaves
// the representable range.
std::vector<Eigen::VectorXd> simulate(const BilinearSystem& sys, const Eigen::VectorXd& x0,
                                      const std::vector<double>& inputs);

// Closed-loop state map A + B K + D x K under u = K x.
Eigen::MatrixXd closed_loop_matrix_model(const BilinearSystem& sys, const Eigen::RowVectorXd& K,
                                         const Eigen::VectorXd& x);

// JSON round-trip: {"n":int,"A":[[..]],"B":[[..]],"D":[[..]]}.
std::string system_to_json(const BilinearSystem& sys);
BilinearSystem system_from_json(const std::string& text);

}  // namespace bilstab
