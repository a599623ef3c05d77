#include "bilstab/data_record.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <memory>
#include <stdexcept>

#include <Eigen/Dense>
#include <json.hpp>

#include "bilstab/errors.hpp"
#include "bilstab/matrix_io.hpp"

namespace bilstab {

using nlohmann::json;

void DataRecord::validate() const {
  if (T < 1) throw ValidationError("DataRecord: T must be >= 1", "T");
  if (n < 1) throw ValidationError("DataRecord: n must be >= 1", "n");
  if (U0.cols() != T) throw ValidationError("DataRecord: U0 must be 1 x T", "U0");
  if (X0.rows() != n || X0.cols() != T) throw ValidationError("DataRecord: X0 must be n x T", "X0");
  if (X1.rows() != n || X1.cols() != T) throw ValidationError("DataRecord: X1 must be n x T", "X1");
  if (V0.rows() != n || V0.cols() != T) throw ValidationError("DataRecord: V0 must be n x T", "V0");
  if (!U0.allFinite()) throw ValidationError("DataRecord: non-finite entries in U0", "U0");
  if (!X0.allFinite()) throw ValidationError("DataRecord: non-finite entries in X0", "X0");
  if (!X1.allFinite()) throw ValidationError("DataRecord: non-finite entries in X1", "X1");
  if (!V0.allFinite()) throw ValidationError("DataRecord: non-finite entries in V0", "V0");
  for (int k = 0; k < T; ++k) {
    for (int i = 0; i < n; ++i) {
      const double expected = X0(i, k) * U0(k);
      if (std::abs(V0(i, k) - expected) > 1e-12 * (1.0 + std::abs(expected)))
        throw ValidationError("DataRecord: V0 column " + std::to_string(k) +
                                  " is not X0 column scaled by U0",
                              "V0");
    }
  }
}

InputSource uniform_input_source(double lo, double hi, std::uint64_t seed) {
  auto rng = std::make_shared<Rng>(seed);
  return [rng, lo, hi](int) { return rng->uniform(lo, hi); };
}

Eigen::MatrixXd assemble_v0(const Eigen::RowVectorXd& U0, const Eigen::MatrixXd& X0) {
  if (U0.cols() != X0.cols()) throw std::invalid_argument("assemble_v0: width mismatch");
  Eigen::MatrixXd V0(X0.rows(), X0.cols());
  for (Eigen::Index k = 0; k < X0.cols(); ++k) V0.col(k) = X0.col(k) * U0(k);
  return V0;
}

DataRecord run_experiment(const BilinearSystem& sys, const Eigen::VectorXd& x0,
                          const InputSource& input_source, int T) {
  sys.validate();
  if (T < 1) throw std::invalid_argument("run_experiment: T must be >= 1");
  std::vector<double> inputs(T);
  for (int k = 0; k < T; ++k) inputs[k] = input_source(k);
  const std::vector<Eigen::VectorXd> trajectory = simulate(sys, x0, inputs);

  DataRecord record;
  record.T = T;
  record.n = sys.n;
  record.U0.resize(T);
  record.X0.resize(sys.n, T);
  record.X1.resize(sys.n, T);
  for (int k = 0; k < T; ++k) {
    record.U0(k) = inputs[k];
    record.X0.col(k) = trajectory[k];
    record.X1.col(k) = trajectory[k + 1];
  }
  record.V0 = assemble_v0(record.U0, record.X0);
  return record;
}

DataRecord run_experiment(const BilinearSystem& sys, int T, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::VectorXd x0(sys.n);
  for (int i = 0; i < sys.n; ++i) x0(i) = rng.uniform(-0.5, 0.5);
  auto shared = std::make_shared<Rng>(rng);
  InputSource source = [shared](int) { return shared->uniform(-1.0, 1.0); };
  return run_experiment(sys, x0, source, T);
}

DataDiagnostics diagnose(const DataRecord& data) {
  data.validate();
  DataDiagnostics diag;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(data.X0);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double sigma_max = sv.size() > 0 ? sv(0) : 0.0;
  const double threshold = std::max(data.n, data.T) * sigma_max * 1e-12;
  diag.rank_X0 = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > threshold) ++diag.rank_X0;
  diag.sigma_min = sv.size() > 0 ? sv(sv.size() - 1) : 0.0;
  diag.cond_X0 = diag.sigma_min > 0.0 ? sigma_max / diag.sigma_min
                                      : std::numeric_limits<double>::infinity();
  diag.max_state_norm = 0.0;
  for (int k = 0; k < data.T; ++k) {
    diag.max_state_norm = std::max(diag.max_state_norm, data.X0.col(k).norm());
    diag.max_state_norm = std::max(diag.max_state_norm, data.X1.col(k).norm());
  }
  diag.ill_conditioned = diag.cond_X0 > 1e8;
  return diag;
}

double consistency_residual(const DataRecord& data, const BilinearSystem& sys) {
  sys.validate();
  if (sys.n != data.n) throw std::invalid_argument("consistency_residual: dimension mismatch");
  const Eigen::MatrixXd residual =
      data.X1 - sys.A * data.X0 - sys.B * data.U0 - sys.D * data.V0;
  return residual.norm();
}

std::string record_to_json(const DataRecord& data) {
  json j;
  j["T"] = data.T;
  j["n"] = data.n;
  j["U0"] = json::parse(matrix_to_json(data.U0));
  j["X0"] = json::parse(matrix_to_json(data.X0));
  j["X1"] = json::parse(matrix_to_json(data.X1));
  j["V0"] = json::parse(matrix_to_json(data.V0));
  return j.dump(2);
}

DataRecord record_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& err) {
    throw ValidationError(std::string("record JSON parse error: ") + err.what(), "record");
  }
  DataRecord record;
  for (const char* field : {"T", "n", "U0", "X0", "X1", "V0"})
    if (!j.contains(field)) throw ValidationError(std::string("missing field ") + field, field);
  if (!j["T"].is_number_integer()) throw ValidationError("T must be an integer", "T");
  if (!j["n"].is_number_integer()) throw ValidationError("n must be an integer", "n");
  record.T = j["T"].get<int>();
  record.n = j["n"].get<int>();
  const Eigen::MatrixXd u0 = matrix_from_json(j["U0"].dump());
  if (u0.rows() != 1) throw ValidationError("U0 must have exactly one row", "U0");
  record.U0 = u0.row(0);
  record.X0 = matrix_from_json(j["X0"].dump());
  record.X1 = matrix_from_json(j["X1"].dump());
  record.V0 = matrix_from_json(j["V0"].dump());
  record.validate();
  return record;
}

void save(const DataRecord& data, const std::filesystem::path& path) {
  data.validate();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save: cannot open " + path.string());
  out << record_to_json(data) << '\n';
  if (!out) throw std::runtime_error("save: write failed for " + path.string());
}

DataRecord load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load: cannot open " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return record_from_json(text);
}

}  // namespace bilstab
