#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bilstab {

// Consistency precondition X0 * G_K = I violated beyond tolerance.
class CertificateViolation : public std::runtime_error {
 public:
  CertificateViolation(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

// A simulated state left the representable range.
class ExperimentDiverged : public std::runtime_error {
 public:
  ExperimentDiverged(const std::string& what, std::size_t step)
      : std::runtime_error(what), step_(step) {}
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

// Malformed file or violated data invariant; names the offending field.
class ValidationError : public std::runtime_error {
 public:
  ValidationError(const std::string& what, std::string field)
      : std::runtime_error(what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

// Two redundant computations of the same quantity disagree.
class InternalConsistencyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NotFoundError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace bilstab
