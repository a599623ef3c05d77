// Batch front door: offline experiments, data-based and model-based designs,
// eps1 sweeps, and sampling-based verification, with CSV/JSON outputs suited
// for plotting. Every command is deterministic given its manifest.

#include <charconv>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bilstab/data_record.hpp"
#include "bilstab/design.hpp"
#include "bilstab/errors.hpp"
#include "bilstab/matrix_io.hpp"
#include "bilstab/system.hpp"
#include "bilstab/verify.hpp"
#include "bilstab/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitInfeasible = 2;
constexpr int kExitVerifyFailed = 3;
constexpr int kExitNumerical = 4;

std::string iso_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm utc{};
  gmtime_r(&now, &utc);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &utc);
  return buf;
}

fs::path resolve_out(const std::string& out, const std::string& fallback) {
  fs::path path = out.empty() ? fs::path(fallback) : fs::path(out);
  if (path.is_relative()) {
    if (const char* dir = std::getenv("BILSTAB_OUT_DIR"); dir != nullptr && *dir != '\0')
      path = fs::path(dir) / path;
  }
  return path;
}

// All writes go through a temp-then-rename step so partially written files
// never appear under the final name.
void write_file_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string());
    out << content;
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

struct ManifestInfo {
  std::string command;
  std::vector<std::string> argv;
  std::vector<std::string> inputs;
  json config;
  std::uint64_t seed = 0;
  std::vector<std::string> outputs;
};

void write_manifest(const fs::path& anchor, const ManifestInfo& info) {
  json manifest;
  manifest["tool"] = "bilstab";
  manifest["version"] = bilstab::kVersion;
  manifest["command"] = info.command;
  manifest["argv"] = info.argv;
  manifest["inputs"] = info.inputs;
  manifest["config"] = info.config;
  manifest["seed"] = info.seed;
  manifest["created"] = iso_timestamp();
  manifest["outputs"] = info.outputs;
  fs::path path = anchor;
  path += ".manifest.json";
  write_file_atomic(path, manifest.dump(2) + "\n");
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

bilstab::BilinearSystem load_system(const std::string& file, bool paper_example) {
  if (paper_example) return bilstab::example_system();
  return bilstab::system_from_json(read_file(file));
}

std::vector<double> parse_sweep(const std::string& text) {
  double lo = 0.0, hi = 0.0;
  int points = 0;
  if (std::sscanf(text.c_str(), "%lf:%lf:%d", &lo, &hi, &points) != 3 || !(lo > 0.0) ||
      !(hi >= lo) || points < 1)
    throw CLI::ValidationError("--sweep", "expected lo:hi:points with 0 < lo <= hi, points >= 1");
  std::vector<double> grid(points);
  if (points == 1) {
    grid[0] = lo;
    return grid;
  }
  const double llo = std::log10(lo), lhi = std::log10(hi);
  for (int i = 0; i < points; ++i)
    grid[i] = std::pow(10.0, llo + (lhi - llo) * i / (points - 1));
  return grid;
}

Eigen::VectorXd parse_vector(const std::string& text) {
  std::vector<double> values;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t next = text.find(',', pos);
    const std::string cell =
        text.substr(pos, next == std::string::npos ? next : next - pos);
    double v = 0.0;
    const auto parsed = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (parsed.ec != std::errc() || parsed.ptr != cell.data() + cell.size())
      throw CLI::ValidationError("--x0", "bad number '" + cell + "'");
    values.push_back(v);
    if (next == std::string::npos) break;
    pos = next + 1;
  }
  Eigen::VectorXd x(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) x(i) = values[i];
  return x;
}

std::string trace_to_csv(const std::vector<bilstab::TraceRow>& trace) {
  std::string out = "phase,outer,t,objective,worst_margin,newton_steps\n";
  for (const auto& row : trace) {
    out += row.phase1 ? "phase1," : "main,";
    out += std::to_string(row.outer) + ",";
    out += bilstab::format_double(row.t) + ",";
    out += bilstab::format_double(row.objective) + ",";
    out += bilstab::format_double(row.worst_margin) + ",";
    out += std::to_string(row.newton_steps) + "\n";
  }
  return out;
}

int status_exit_code(bilstab::SolveStatus status) {
  switch (status) {
    case bilstab::SolveStatus::kOptimal: return kExitOk;
    case bilstab::SolveStatus::kInfeasible: return kExitInfeasible;
    default: return kExitNumerical;
  }
}

// ---------------------------------------------------------------------------
// experiment

struct ExperimentArgs {
  std::string system_file;
  bool paper_example = false;
  int T = 10;
  std::uint64_t seed = 0;
  std::string x0_text;
  std::string out;
  std::vector<std::string> argv;
};

int run_experiment_cmd(const ExperimentArgs& args) {
  const bilstab::BilinearSystem sys = load_system(args.system_file, args.paper_example);
  bilstab::DataRecord record;
  if (args.x0_text.empty()) {
    record = bilstab::run_experiment(sys, args.T, args.seed);
  } else {
    const Eigen::VectorXd x0 = parse_vector(args.x0_text);
    if (x0.size() != sys.n) throw CLI::ValidationError("--x0", "dimension must match the system");
    record =
        bilstab::run_experiment(sys, x0, bilstab::uniform_input_source(-1.0, 1.0, args.seed),
                                args.T);
  }

  const bilstab::DataDiagnostics diag = bilstab::diagnose(record);
  const fs::path out = resolve_out(args.out, "record.json");
  write_file_atomic(out, bilstab::record_to_json(record) + "\n");

  json jdiag;
  jdiag["rank_X0"] = diag.rank_X0;
  jdiag["sigma_min"] = diag.sigma_min;
  jdiag["cond_X0"] = diag.cond_X0;
  jdiag["max_state_norm"] = diag.max_state_norm;
  jdiag["ill_conditioned"] = diag.ill_conditioned;
  fs::path diag_path = out;
  diag_path.replace_extension();
  diag_path += ".diagnostics.json";
  write_file_atomic(diag_path, jdiag.dump(2) + "\n");

  ManifestInfo info;
  info.command = "experiment";
  info.argv = args.argv;
  if (!args.paper_example) info.inputs.push_back(args.system_file);
  info.config = {{"T", args.T},
                 {"paper_example", args.paper_example},
                 {"x0", args.x0_text.empty() ? json(nullptr) : json(args.x0_text)}};
  info.seed = args.seed;
  info.outputs = {out.string(), diag_path.string()};
  write_manifest(out, info);

  std::cout << "experiment: T=" << record.T << " n=" << record.n
            << " rank(X0)=" << diag.rank_X0 << " cond(X0)=" << diag.cond_X0 << "\n";
  if (diag.rank_X0 < record.n)
    std::cout << "warning: X0 is rank deficient; the design LMI will be infeasible\n";
  if (diag.ill_conditioned) std::cout << "warning: cond(X0) > 1e8\n";
  std::cout << "wrote " << out.string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// design (data-based) and design-mb (model-based baseline)

struct DesignArgs {
  std::string data_file;
  std::string system_file;  // comparison baseline (design) or source (design-mb)
  bool paper_example = false;
  double delta = 0.0;
  double eps1 = 0.0;
  std::string sweep;
  double mu = 1.0;
  std::string out;
  std::string trace;
  std::string dump_lmi;
  std::vector<std::string> argv;
};

int finish_single(const bilstab::DesignResult& result, const DesignArgs& args,
                  const std::string& command, const std::vector<std::string>& inputs) {
  const fs::path out = resolve_out(args.out, "design.json");
  write_file_atomic(out, bilstab::design_to_json(result) + "\n");
  if (!args.trace.empty())
    write_file_atomic(resolve_out(args.trace, "trace.csv"), trace_to_csv(result.trace));

  ManifestInfo info;
  info.command = command;
  info.argv = args.argv;
  info.inputs = inputs;
  info.config = {{"delta", args.delta}, {"eps1", args.eps1}, {"mu", args.mu}};
  info.outputs = {out.string()};
  write_manifest(out, info);

  std::cout << command << ": eps1=" << result.eps1 << " status=" << to_string(result.status);
  if (result.optimal())
    std::cout << " detP=" << result.detP() << " K=[" << result.K << "]";
  std::cout << "\nwrote " << out.string() << "\n";
  if (result.status == bilstab::SolveStatus::kInfeasible)
    std::cout << "infeasible at this eps1; try a line search, e.g. --sweep 1e-3:1e2:50\n";
  return status_exit_code(result.status);
}

int finish_sweep(const bilstab::SweepTable& table, const DesignArgs& args,
                 const std::string& command, const std::vector<std::string>& inputs) {
  const fs::path out = resolve_out(args.out, "sweep.json");
  write_file_atomic(out, bilstab::sweep_to_json(table) + "\n");
  fs::path csv_path = out;
  csv_path.replace_extension(".csv");
  write_file_atomic(csv_path, bilstab::sweep_to_csv(table));

  ManifestInfo info;
  info.command = command;
  info.argv = args.argv;
  info.inputs = inputs;
  info.config = {{"delta", args.delta}, {"sweep", args.sweep}, {"mu", args.mu}};
  info.outputs = {out.string(), csv_path.string()};
  write_manifest(out, info);

  int feasible = 0;
  for (const auto& row : table.rows) {
    const bool ok = (row.data && row.data->optimal()) || (!row.data && row.model && row.model->optimal());
    if (ok) ++feasible;
  }
  std::cout << command << " sweep: " << table.rows.size() << " rows, " << feasible
            << " feasible\nwrote " << out.string() << " and " << csv_path.string() << "\n";
  return kExitOk;
}

int run_design_cmd(const DesignArgs& args) {
  const bilstab::DataRecord record = bilstab::record_from_json(read_file(args.data_file));
  std::optional<bilstab::BilinearSystem> baseline;
  if (args.paper_example || !args.system_file.empty())
    baseline = load_system(args.system_file, args.paper_example);

  const bilstab::DataDiagnostics diag = bilstab::diagnose(record);
  if (diag.rank_X0 < record.n)
    std::cout << "warning: rank(X0) = " << diag.rank_X0 << " < n = " << record.n << "\n";
  if (diag.ill_conditioned) std::cout << "warning: cond(X0) > 1e8\n";

  std::vector<std::string> inputs{args.data_file};
  if (!args.system_file.empty()) inputs.push_back(args.system_file);

  if (!args.dump_lmi.empty()) {
    const double probe_eps1 = args.sweep.empty() ? args.eps1 : parse_sweep(args.sweep).front();
    const bilstab::MaxDetProblem problem =
        bilstab::build_data_lmi(record, {args.delta, probe_eps1, args.mu});
    write_file_atomic(resolve_out(args.dump_lmi, "lmi.json"), problem.debug_json() + "\n");
  }

  if (args.sweep.empty()) {
    bilstab::DesignConfig cfg = bilstab::DesignConfig::single(args.delta, args.eps1, args.mu);
    return finish_single(bilstab::design_data_based(record, cfg), args, "design", inputs);
  }
  bilstab::DesignConfig cfg;
  cfg.delta = args.delta;
  cfg.mu = args.mu;
  cfg.eps1_grid = parse_sweep(args.sweep);
  const bilstab::SweepTable table = baseline
                                        ? bilstab::sweep_eps1(record, *baseline, cfg)
                                        : bilstab::sweep_eps1(record, cfg);
  return finish_sweep(table, args, "design", inputs);
}

int run_design_mb_cmd(const DesignArgs& args) {
  const bilstab::BilinearSystem sys = load_system(args.system_file, args.paper_example);
  std::vector<std::string> inputs;
  if (!args.paper_example) inputs.push_back(args.system_file);

  if (args.sweep.empty()) {
    return finish_single(bilstab::design_model_based(sys, args.eps1), args, "design-mb", inputs);
  }
  bilstab::DesignConfig cfg;
  cfg.delta = 1.0;  // unused by the model path, but must validate
  cfg.eps1_grid = parse_sweep(args.sweep);
  return finish_sweep(bilstab::sweep_eps1(sys, cfg), args, "design-mb", inputs);
}

// ---------------------------------------------------------------------------
// verify

struct VerifyArgs {
  std::string design_file;
  std::string system_file;
  bool paper_example = false;
  double delta = -1.0;  // < 0: derive (paper example) or skip the robust check
  int samples = 1000;
  int num_d = 50;
  int grid = 100;
  int horizon = 200;
  std::uint64_t seed = 0;
  std::string out;
  std::vector<std::string> argv;
};

int run_verify_cmd(const VerifyArgs& args) {
  const bilstab::BilinearSystem sys = load_system(args.system_file, args.paper_example);
  const bilstab::DesignResult design = bilstab::design_from_json(read_file(args.design_file));
  if (!design.optimal()) {
    std::cout << "design file carries status " << to_string(design.status)
              << "; nothing to verify\n";
    return kExitUsage;
  }

  double delta = args.delta;
  if (delta < 0.0 && args.paper_example) delta = bilstab::kExampleDelta;

  bilstab::VerificationReport report =
      bilstab::verify_decrease(design, sys.D, args.samples, args.seed);
  // The D-ball guarantee is part of the data-based certificate only; the
  // baseline certifies the true D.
  if (design.provenance == bilstab::Provenance::kDataBased && delta > 0.0)
    report = bilstab::merge_reports(
        report, bilstab::verify_robust(design, delta, args.num_d, args.samples, args.seed));
  report = bilstab::merge_reports(
      report, bilstab::verify_basin(sys, design, args.grid, args.horizon, args.seed));

  const fs::path out = resolve_out(args.out, "verify.json");
  write_file_atomic(out, bilstab::report_to_json(report) + "\n");

  ManifestInfo info;
  info.command = "verify";
  info.argv = args.argv;
  info.inputs = {args.design_file};
  if (!args.paper_example) info.inputs.push_back(args.system_file);
  info.config = {{"delta", delta},
                 {"samples", args.samples},
                 {"num_D", args.num_d},
                 {"grid", args.grid},
                 {"horizon", args.horizon}};
  info.seed = args.seed;
  info.outputs = {out.string()};
  write_manifest(out, info);

  auto line = [](const char* name, const std::optional<double>& v, bool ok) {
    std::cout << (ok ? "PASS " : "FAIL ") << name;
    if (v) std::cout << " = " << *v;
    std::cout << "\n";
  };
  line("worst_nd_eig     ", report.worst_nd_eig,
       report.worst_nd_eig && *report.worst_nd_eig < 0.0);
  line("worst_decrease   ", report.worst_decrease,
       report.worst_decrease && *report.worst_decrease < 0.0);
  if (report.robust_worst_nd_eig)
    line("robust_worst_eig ", report.robust_worst_nd_eig, *report.robust_worst_nd_eig < 0.0);
  line("basin_fraction   ", report.basin_converged_fraction,
       report.basin_converged_fraction && *report.basin_converged_fraction >= 1.0);
  std::cout << "wrote " << out.string() << "\n";
  return report.pass() ? kExitOk : kExitVerifyFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"data-driven stabilization of bilinear systems with a certified basin"};
  app.require_subcommand(1);
  const std::vector<std::string> raw_argv(argv, argv + argc);

  ExperimentArgs exp_args;
  exp_args.argv = raw_argv;
  CLI::App* exp = app.add_subcommand("experiment", "run the offline open-loop experiment");
  auto* exp_sys = exp->add_option("--system", exp_args.system_file, "system JSON file");
  auto* exp_paper = exp->add_flag("--paper-example", exp_args.paper_example,
                                  "use the built-in example system");
  exp->add_option("--T", exp_args.T, "experiment length")->check(CLI::PositiveNumber);
  exp->add_option("--seed", exp_args.seed, "random seed");
  exp->add_option("--x0", exp_args.x0_text, "initial state, comma separated");
  exp->add_option("--out", exp_args.out, "output record path (default record.json)");
  exp_sys->excludes(exp_paper);

  DesignArgs design_args;
  design_args.argv = raw_argv;
  CLI::App* design = app.add_subcommand("design", "data-based design from a record");
  design->add_option("--data", design_args.data_file, "DataRecord JSON file")->required();
  design->add_option("--delta", design_args.delta, "norm bound on D")
      ->required()
      ->check(CLI::PositiveNumber);
  auto* design_eps = design->add_option("--eps1", design_args.eps1, "fixed eps1")
                         ->check(CLI::PositiveNumber);
  auto* design_sweep =
      design->add_option("--sweep", design_args.sweep, "eps1 line search, lo:hi:points");
  design->add_option("--mu", design_args.mu, "contraction factor in (0,1]")
      ->check(CLI::Range(1e-12, 1.0));
  design->add_option("--system", design_args.system_file,
                     "optional true-system JSON for the comparison column");
  design->add_flag("--paper-example", design_args.paper_example,
                   "compare against the built-in example system");
  design->add_option("--out", design_args.out, "output path");
  design->add_option("--trace", design_args.trace, "write the solver iteration trace CSV");
  design->add_option("--dump-lmi", design_args.dump_lmi, "write the assembled problem as JSON");
  design_eps->excludes(design_sweep);
  design_sweep->excludes(design_eps);

  DesignArgs mb_args;
  mb_args.argv = raw_argv;
  CLI::App* design_mb = app.add_subcommand("design-mb", "model-based baseline design");
  auto* mb_sys = design_mb->add_option("--system", mb_args.system_file, "system JSON file");
  auto* mb_paper = design_mb->add_flag("--paper-example", mb_args.paper_example,
                                       "use the built-in example system");
  auto* mb_eps =
      design_mb->add_option("--eps1", mb_args.eps1, "fixed eps1")->check(CLI::PositiveNumber);
  auto* mb_sweep = design_mb->add_option("--sweep", mb_args.sweep, "eps1 sweep, lo:hi:points");
  design_mb->add_option("--out", mb_args.out, "output path");
  design_mb->add_option("--trace", mb_args.trace, "write the solver iteration trace CSV");
  mb_sys->excludes(mb_paper);
  mb_eps->excludes(mb_sweep);
  mb_sweep->excludes(mb_eps);

  VerifyArgs verify_args;
  verify_args.argv = raw_argv;
  CLI::App* verify = app.add_subcommand("verify", "sampling-based certificate checks");
  verify->add_option("--design", verify_args.design_file, "DesignResult JSON file")->required();
  auto* verify_sys =
      verify->add_option("--system", verify_args.system_file, "true-system JSON file");
  auto* verify_paper = verify->add_flag("--paper-example", verify_args.paper_example,
                                        "verify against the built-in example system");
  verify->add_option("--delta", verify_args.delta, "norm bound for the robust check")
      ->check(CLI::PositiveNumber);
  verify->add_option("--samples", verify_args.samples, "ellipsoid samples")
      ->check(CLI::PositiveNumber);
  verify->add_option("--num-D", verify_args.num_d, "sampled D matrices")
      ->check(CLI::PositiveNumber);
  verify->add_option("--grid", verify_args.grid, "basin simulation starts")
      ->check(CLI::PositiveNumber);
  verify->add_option("--horizon", verify_args.horizon, "basin simulation length")
      ->check(CLI::PositiveNumber);
  verify->add_option("--seed", verify_args.seed, "random seed");
  verify->add_option("--out", verify_args.out, "output report path");
  verify_sys->excludes(verify_paper);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (exp->parsed()) {
      if (exp_args.system_file.empty() && !exp_args.paper_example)
        throw CLI::ValidationError("experiment", "need --system or --paper-example");
      return run_experiment_cmd(exp_args);
    }
    if (design->parsed()) {
      if (design_args.eps1 <= 0.0 && design_args.sweep.empty())
        throw CLI::ValidationError("design", "need --eps1 or --sweep");
      return run_design_cmd(design_args);
    }
    if (design_mb->parsed()) {
      if (mb_args.system_file.empty() && !mb_args.paper_example)
        throw CLI::ValidationError("design-mb", "need --system or --paper-example");
      if (mb_args.eps1 <= 0.0 && mb_args.sweep.empty())
        throw CLI::ValidationError("design-mb", "need --eps1 or --sweep");
      return run_design_mb_cmd(mb_args);
    }
    if (verify->parsed()) {
      if (verify_args.system_file.empty() && !verify_args.paper_example)
        throw CLI::ValidationError("verify", "need --system or --paper-example");
      return run_verify_cmd(verify_args);
    }
  } catch (const CLI::ParseError& err) {
    std::cerr << err.what() << "\n";
    return kExitUsage;
  } catch (const bilstab::ValidationError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitUsage;
  } catch (const bilstab::ExperimentDiverged& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitUsage;
  } catch (const bilstab::InternalConsistencyError& err) {
    std::cerr << "internal consistency error: " << err.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
