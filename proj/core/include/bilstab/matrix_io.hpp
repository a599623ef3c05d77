#pragma once

#include <string>

#include <Eigen/Core>

namespace bilstab {

// Matrices interchange as row-major nested JSON arrays and as CSV
// (one matrix row per line, '.' decimal separator, locale-independent).
// Both formats round-trip doubles exactly.

std::string matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const std::string& text);

std::string matrix_to_csv(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_csv(const std::string& text);

// Shortest decimal form that parses back to the same double.
std::string format_double(double value);

}  // namespace bilstab
