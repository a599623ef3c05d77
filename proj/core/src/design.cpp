#include "bilstab/design.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Dense>
#include <json.hpp>

#include "bilstab/errors.hpp"
#include "bilstab/matrix_io.hpp"

namespace bilstab {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Eigen::MatrixXd symmetric_inverse(const Eigen::MatrixXd& P) {
  Eigen::LLT<Eigen::MatrixXd> llt(P);
  if (llt.info() != Eigen::Success)
    throw InternalConsistencyError("optimal P is not positive definite");
  Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(P.rows(), P.cols()));
  return 0.5 * (inv + inv.transpose().eval());
}

double log_det_spd(const Eigen::MatrixXd& P) {
  Eigen::LLT<Eigen::MatrixXd> llt(P);
  if (llt.info() != Eigen::Success)
    throw InternalConsistencyError("log_det_spd: matrix not positive definite");
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

void enforce_result_invariants(const DesignResult& result, const Solution& solution) {
  const Eigen::MatrixXd qp = result.Q * result.P;
  const double qp_err =
      (qp - Eigen::MatrixXd::Identity(qp.rows(), qp.cols())).cwiseAbs().maxCoeff();
  if (qp_err > 1e-9)
    throw InternalConsistencyError("Q*P deviates from identity by " + std::to_string(qp_err));
  const double logdet_err = std::abs(result.logdetP - (-solution.objective));
  if (logdet_err > 1e-9 * (1.0 + std::abs(result.logdetP)))
    throw InternalConsistencyError("log det(P) disagrees with the solver objective");
}

}  // namespace

const char* to_string(Provenance provenance) {
  return provenance == Provenance::kDataBased ? "data-based" : "model-based";
}

void DesignConfig::validate() const {
  if (!(delta > 0.0)) throw std::invalid_argument("DesignConfig: delta must be > 0");
  if (!(mu > 0.0 && mu <= 1.0)) throw std::invalid_argument("DesignConfig: mu must be in (0,1]");
  if (eps1_grid.empty()) throw std::invalid_argument("DesignConfig: eps1 grid is empty");
  double last = 0.0;
  for (double e : eps1_grid) {
    if (!(e > 0.0)) throw std::invalid_argument("DesignConfig: eps1 values must be > 0");
    if (e <= last) throw std::invalid_argument("DesignConfig: eps1 grid must be ascending");
    last = e;
  }
  solver.validate();
}

DesignConfig DesignConfig::single(double delta, double eps1, double mu) {
  DesignConfig cfg;
  cfg.delta = delta;
  cfg.mu = mu;
  cfg.eps1_grid = {eps1};
  return cfg;
}

std::vector<double> default_eps1_grid() {
  const int points = 50;
  const double lo = std::log10(1e-3), hi = std::log10(1e2);
  std::vector<double> grid(points);
  for (int i = 0; i < points; ++i)
    grid[i] = std::pow(10.0, lo + (hi - lo) * i / (points - 1));
  return grid;
}

double delta_from_system(const BilinearSystem& sys) {
  sys.validate();
  return 1.2 * sys.D.jacobiSvd().singularValues()(0);
}

double DesignResult::detP() const { return P.size() > 0 ? P.determinant() : kNaN; }

DesignResult design_data_based(const DataRecord& data, const DesignConfig& cfg) {
  cfg.validate();
  if (cfg.eps1_grid.size() != 1)
    throw std::invalid_argument("design_data_based: cfg must fix exactly one eps1");
  const double eps1 = cfg.eps1_grid.front();

  const DataDiagnostics diag = diagnose(data);
  if (diag.rank_X0 < data.n)
    throw std::invalid_argument("design_data_based: X0 is rank deficient (rank " +
                                std::to_string(diag.rank_X0) + " < n = " +
                                std::to_string(data.n) + ")");

  const MaxDetProblem problem = build_data_lmi(data, {cfg.delta, eps1, cfg.mu});
  const Solution solution = solve(problem, cfg.solver);

  DesignResult result;
  result.provenance = Provenance::kDataBased;
  result.status = solution.status;
  result.eps1 = eps1;
  result.eps2 = kNaN;
  result.mu = cfg.mu;
  result.logdetP = kNaN;
  result.trace = solution.trace;
  if (!result.optimal()) return result;

  result.P = problem.objective_matrix(solution.values);
  result.eps2 = solution.values(problem.var("eps2"));
  Eigen::MatrixXd Y(data.n, data.T);
  for (int i = 0; i < data.n; ++i)
    for (int k = 0; k < data.T; ++k)
      Y(i, k) = solution.values(problem.var("Y(" + std::to_string(i) + "," +
                                            std::to_string(k) + ")"));
  Eigen::LLT<Eigen::MatrixXd> llt(result.P);
  if (llt.info() != Eigen::Success)
    throw InternalConsistencyError("optimal P is not positive definite");
  result.GK = llt.solve(Y).transpose();  // G_K = Y' P^{-1}
  result.K = data.U0 * result.GK;
  result.Q = symmetric_inverse(result.P);
  result.logdetP = log_det_spd(result.P);
  result.cl = make_closed_loop(data, result.GK);
  enforce_result_invariants(result, solution);
  return result;
}

DesignResult design_model_based(const BilinearSystem& sys, double eps1,
                                const SolverOptions& solver_options) {
  const MaxDetProblem problem = build_model_lmi(sys, eps1);
  const Solution solution = solve(problem, solver_options);

  DesignResult result;
  result.provenance = Provenance::kModelBased;
  result.status = solution.status;
  result.eps1 = eps1;
  result.eps2 = kNaN;
  result.mu = 1.0;
  result.logdetP = kNaN;
  result.trace = solution.trace;
  if (!result.optimal()) return result;

  result.P = problem.objective_matrix(solution.values);
  Eigen::VectorXd y(sys.n);
  for (int i = 0; i < sys.n; ++i)
    y(i) = solution.values(problem.var("y(" + std::to_string(i) + ",0)"));
  Eigen::LLT<Eigen::MatrixXd> llt(result.P);
  if (llt.info() != Eigen::Success)
    throw InternalConsistencyError("optimal P is not positive definite");
  result.K = llt.solve(y).transpose();  // K = y' P^{-1}
  result.Q = symmetric_inverse(result.P);
  result.logdetP = log_det_spd(result.P);
  result.cl = closed_loop_from_model(sys, result.K);
  enforce_result_invariants(result, solution);
  return result;
}

namespace {

SweepTable sweep_impl(const DataRecord* data, const BilinearSystem* sys,
                      const DesignConfig& cfg) {
  cfg.validate();
  SweepTable table;
  table.n = data != nullptr ? data->n : sys->n;
  for (double eps1 : cfg.eps1_grid) {
    SweepRow row;
    row.eps1 = eps1;
    if (data != nullptr) {
      DesignConfig point = cfg;
      point.eps1_grid = {eps1};
      row.data = design_data_based(*data, point);
    }
    if (sys != nullptr) row.model = design_model_based(*sys, eps1, cfg.solver);
    if (row.data && row.model && row.data->optimal() && row.model->optimal()) {
      const double denom = row.model->K.norm();
      row.rel_gain_diff = (row.data->K - row.model->K).norm() / denom;
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace

SweepTable sweep_eps1(const DataRecord& data, const DesignConfig& cfg) {
  return sweep_impl(&data, nullptr, cfg);
}

SweepTable sweep_eps1(const BilinearSystem& sys, const DesignConfig& cfg) {
  return sweep_impl(nullptr, &sys, cfg);
}

SweepTable sweep_eps1(const DataRecord& data, const BilinearSystem& sys,
                      const DesignConfig& cfg) {
  return sweep_impl(&data, &sys, cfg);
}

DesignResult best_design(const SweepTable& table) {
  const DesignResult* best = nullptr;
  for (const auto& row : table.rows) {
    const DesignResult* candidate = nullptr;
    if (row.data && row.data->optimal()) candidate = &*row.data;
    else if (!row.data && row.model && row.model->optimal()) candidate = &*row.model;
    if (candidate == nullptr) continue;
    // Rows are in ascending eps1 order, so a strict comparison keeps the
    // smaller eps1 on ties.
    if (best == nullptr || candidate->detP() > best->detP()) best = candidate;
  }
  if (best == nullptr) throw NotFoundError("best_design: no feasible sweep row");
  return *best;
}

namespace {

json matrix_json(const Eigen::MatrixXd& m) { return json::parse(matrix_to_json(m)); }

json optional_number(double v) { return std::isnan(v) ? json(nullptr) : json(v); }

double number_or_nan(const json& j, const char* field) {
  if (!j.contains(field) || j.at(field).is_null()) return kNaN;
  return j.at(field).get<double>();
}

SolveStatus status_from_string(const std::string& s) {
  if (s == "Optimal") return SolveStatus::kOptimal;
  if (s == "Infeasible") return SolveStatus::kInfeasible;
  if (s == "NumericalTrouble") return SolveStatus::kNumericalTrouble;
  if (s == "IterationLimit") return SolveStatus::kIterationLimit;
  throw ValidationError("unknown solver status '" + s + "'", "status");
}

json design_json_value(const DesignResult& r) {
  json j;
  j["provenance"] = to_string(r.provenance);
  j["status"] = to_string(r.status);
  j["eps1"] = r.eps1;
  j["eps2"] = optional_number(r.eps2);
  j["mu"] = r.mu;
  if (!r.optimal()) return j;
  j["logdetP"] = r.logdetP;
  j["detP"] = r.detP();
  j["K"] = matrix_json(r.K);
  j["P"] = matrix_json(r.P);
  j["Q"] = matrix_json(r.Q);
  if (r.GK.size() > 0) j["GK"] = matrix_json(r.GK);
  j["closed_loop"] = {{"Ac", matrix_json(r.cl.Ac)},
                      {"H", matrix_json(r.cl.H)},
                      {"Kc", matrix_json(r.cl.Kc)}};
  return j;
}

DesignResult design_from_json_value(const json& j) {
  DesignResult r;
  const std::string provenance = j.value("provenance", std::string("data-based"));
  r.provenance =
      provenance == "model-based" ? Provenance::kModelBased : Provenance::kDataBased;
  r.status = status_from_string(j.value("status", std::string("Infeasible")));
  r.eps1 = number_or_nan(j, "eps1");
  r.eps2 = number_or_nan(j, "eps2");
  r.mu = j.value("mu", 1.0);
  r.logdetP = number_or_nan(j, "logdetP");
  if (!r.optimal()) return r;
  auto matrix_field = [&](const char* field) {
    if (!j.contains(field)) throw ValidationError(std::string("missing field ") + field, field);
    return matrix_from_json(j.at(field).dump());
  };
  const Eigen::MatrixXd k = matrix_field("K");
  if (k.rows() != 1) throw ValidationError("K must be a single row", "K");
  r.K = k.row(0);
  r.P = matrix_field("P");
  r.Q = matrix_field("Q");
  if (j.contains("GK")) r.GK = matrix_field("GK");
  if (!j.contains("closed_loop"))
    throw ValidationError("missing field closed_loop", "closed_loop");
  const json& cl = j.at("closed_loop");
  r.cl.n = static_cast<int>(r.K.size());
  r.cl.Ac = matrix_from_json(cl.at("Ac").dump());
  r.cl.H = matrix_from_json(cl.at("H").dump());
  const Eigen::MatrixXd kc = matrix_from_json(cl.at("Kc").dump());
  if (kc.rows() != 1) throw ValidationError("Kc must be a single row", "closed_loop");
  r.cl.Kc = kc.row(0);
  r.cl.GK = r.GK;
  return r;
}

}  // namespace

std::string design_to_json(const DesignResult& result) { return design_json_value(result).dump(2); }

DesignResult design_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& err) {
    throw ValidationError(std::string("design JSON parse error: ") + err.what(), "design");
  }
  return design_from_json_value(j);
}

std::string sweep_to_json(const SweepTable& table) {
  json j;
  j["n"] = table.n;
  json rows = json::array();
  for (const auto& row : table.rows) {
    json jr;
    jr["eps1"] = row.eps1;
    if (row.data) jr["data"] = design_json_value(*row.data);
    if (row.model) jr["model"] = design_json_value(*row.model);
    if (row.rel_gain_diff) jr["rel_gain_diff"] = *row.rel_gain_diff;
    rows.push_back(std::move(jr));
  }
  j["rows"] = rows;
  return j.dump(2);
}

std::string sweep_to_csv(const SweepTable& table) {
  std::string out = "eps1,status,detP,logdetP";
  for (int i = 1; i <= table.n; ++i) out += ",K_" + std::to_string(i);
  out += ",rel_gain_diff\n";
  for (const auto& row : table.rows) {
    const DesignResult* primary =
        row.data ? &*row.data : (row.model ? &*row.model : nullptr);
    out += format_double(row.eps1);
    if (primary == nullptr) {
      out += ",,,";
      for (int i = 0; i < table.n; ++i) out += ",";
      out += ",\n";
      continue;
    }
    out += ",";
    out += to_string(primary->status);
    if (primary->optimal()) {
      out += "," + format_double(primary->detP());
      out += "," + format_double(primary->logdetP);
      for (int i = 0; i < table.n; ++i) out += "," + format_double(primary->K(i));
    } else {
      out += ",,";
      for (int i = 0; i < table.n; ++i) out += ",";
    }
    out += ",";
    if (row.rel_gain_diff) out += format_double(*row.rel_gain_diff);
    out += "\n";
  }
  return out;
}

}  // namespace bilstab
