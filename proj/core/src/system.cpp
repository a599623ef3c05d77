#include "bilstab/system.hpp"

#include <stdexcept>

#include <json.hpp>

#include "bilstab/errors.hpp"
#include "bilstab/matrix_io.hpp"

namespace bilstab {

using nlohmann::json;

namespace {

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_field(const json& j, const std::string& field) {
  if (!j.contains(field)) throw ValidationError("missing field " + field, field);
  return matrix_from_json(j.at(field).dump());
}

}  // namespace

void BilinearSystem::validate() const {
  if (n < 1) throw std::invalid_argument("BilinearSystem: n must be >= 1");
  if (A.rows() != n || A.cols() != n) throw std::invalid_argument("BilinearSystem: A must be n x n");
  if (B.rows() != n || B.cols() != 1) throw std::invalid_argument("BilinearSystem: B must be n x 1");
  if (D.rows() != n || D.cols() != n) throw std::invalid_argument("BilinearSystem: D must be n x n");
  if (!A.allFinite() || !B.allFinite() || !D.allFinite())
    throw std::invalid_argument("BilinearSystem: non-finite entries");
}

BilinearSystem make_system(Eigen::MatrixXd A, Eigen::MatrixXd B, Eigen::MatrixXd D) {
  BilinearSystem sys;
  sys.A = std::move(A);
  sys.B = std::move(B);
  sys.D = std::move(D);
  sys.n = static_cast<int>(sys.A.rows());
  sys.validate();
  return sys;
}

BilinearSystem example_system() {
  Eigen::MatrixXd A(2, 2);
  A << 0.8, 0.5,
       0.4, 1.2;
  Eigen::MatrixXd B(2, 1);
  B << 1.0,
       2.0;
  Eigen::MatrixXd D(2, 2);
  D << 0.45, 0.45,
       0.30, -0.30;
  return make_system(A, B, D);
}

Eigen::VectorXd step(const BilinearSystem& sys, const Eigen::VectorXd& x, double u) {
  sys.validate();
  if (x.size() != sys.n) throw std::invalid_argument("step: x has wrong dimension");
  return sys.A * x + sys.B.col(0) * u + (sys.D * x) * u;
}

std::vector<Eigen::VectorXd> simulate(const BilinearSystem& sys, const Eigen::VectorXd& x0,
                                      const std::vector<double>& inputs) {
  std::vector<Eigen::VectorXd> trajectory;
  trajectory.reserve(inputs.size() + 1);
  trajectory.push_back(x0);
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    Eigen::VectorXd next = step(sys, trajectory.back(), inputs[k]);
    if (!next.allFinite())
      throw ExperimentDiverged("simulate: state became non-finite at step " + std::to_string(k),
                               k);
    trajectory.push_back(std::move(next));
  }
  return trajectory;
}

Eigen::MatrixXd closed_loop_matrix_model(const BilinearSystem& sys, const Eigen::RowVectorXd& K,
                                         const Eigen::VectorXd& x) {
  sys.validate();
  if (K.size() != sys.n || x.size() != sys.n)
    throw std::invalid_argument("closed_loop_matrix_model: dimension mismatch");
  return sys.A + sys.B * K + (sys.D * x) * K;
}

std::string system_to_json(const BilinearSystem& sys) {
  json j;
  j["n"] = sys.n;
  j["A"] = matrix_json(sys.A);
  j["B"] = matrix_json(sys.B);
  j["D"] = matrix_json(sys.D);
  return j.dump(2);
}

BilinearSystem system_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& err) {
    throw ValidationError(std::string("system JSON parse error: ") + err.what(), "system");
  }
  BilinearSystem sys;
  sys.A = matrix_field(j, "A");
  sys.B = matrix_field(j, "B");
  sys.D = matrix_field(j, "D");
  sys.n = j.value("n", static_cast<int>(sys.A.rows()));
  try {
    sys.validate();
  } catch (const std::invalid_argument& err) {
    throw ValidationError(err.what(), "system");
  }
  return sys;
}

}  // namespace bilstab
