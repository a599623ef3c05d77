#include "bilstab/maxdet.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>

#include <Eigen/Dense>

namespace bilstab {

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::kOptimal: return "Optimal";
    case SolveStatus::kInfeasible: return "Infeasible";
    case SolveStatus::kNumericalTrouble: return "NumericalTrouble";
    case SolveStatus::kIterationLimit: return "IterationLimit";
  }
  return "Unknown";
}

void SolverOptions::validate() const {
  if (!(margin_scale > 0.0 && t_init > 0.0 && t_growth > 1.0 && newton_tol > 0.0 &&
        gap_tol > 0.0 && max_outer > 0 && max_newton > 0 && ls_slope > 0.0 && ls_slope < 1.0 &&
        ls_shrink > 0.0 && ls_shrink < 1.0))
    throw std::invalid_argument("SolverOptions: parameters out of range");
}

namespace maxdet_detail {

BarrierEval eval_barrier(const ReducedTerm& term, const Eigen::VectorXd& w,
                         bool need_derivatives) {
  BarrierEval out;
  const int r = term.vars();
  Eigen::MatrixXd s = term.base;
  for (int j = 0; j < r; ++j) s += w(j) * term.coef[j];

  Eigen::LLT<Eigen::MatrixXd> llt(s);
  if (llt.info() != Eigen::Success) return out;  // not PD: infeasible
  out.feasible = true;
  out.value = -2.0 * llt.matrixLLT().diagonal().array().log().sum();
  if (!need_derivatives) return out;

  // grad_j = -tr(S^{-1} C_j), hess_jk = tr(S^{-1} C_j S^{-1} C_k),
  // computed through W_j = L^{-1} C_j L^{-T}.
  std::vector<Eigen::MatrixXd> whitened(r);
  const auto& L = llt.matrixL();
  for (int j = 0; j < r; ++j) {
    Eigen::MatrixXd half = L.solve(term.coef[j]);
    Eigen::MatrixXd w_full = L.solve(half.transpose()).transpose();
    whitened[j] = 0.5 * (w_full + w_full.transpose().eval());
  }
  out.grad = Eigen::VectorXd::Zero(r);
  out.hess = Eigen::MatrixXd::Zero(r, r);
  for (int j = 0; j < r; ++j) {
    out.grad(j) = -whitened[j].trace();
    for (int k = j; k < r; ++k) {
      const double h = (whitened[j].array() * whitened[k].array()).sum();
      out.hess(j, k) = h;
      out.hess(k, j) = h;
    }
  }
  return out;
}

}  // namespace maxdet_detail

namespace {

using maxdet_detail::BarrierEval;
using maxdet_detail::ReducedTerm;
using maxdet_detail::eval_barrier;

constexpr double kEqualityTol = 1e-9;

struct Reduction {
  bool consistent = true;
  double eq_residual = 0.0;
  Eigen::VectorXd v0;  // particular solution, full variable space
  Eigen::MatrixXd Z;   // orthonormal null-space basis (full x reduced)
};

Reduction reduce_equalities(const MaxDetProblem& problem) {
  const int nv = problem.num_vars();
  Reduction red;
  if (problem.eq_lhs.rows() == 0) {
    red.v0 = Eigen::VectorXd::Zero(nv);
    red.Z = Eigen::MatrixXd::Identity(nv, nv);
    return red;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(problem.eq_lhs,
                                        Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double sigma_max = sv.size() > 0 ? sv(0) : 0.0;
  const double threshold =
      std::max(problem.eq_lhs.rows(), problem.eq_lhs.cols()) * sigma_max * 1e-13;
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > threshold) ++rank;

  // Minimum-norm solution; dependent-but-consistent rows drop out here.
  Eigen::VectorXd projected = svd.matrixU().transpose() * problem.eq_rhs;
  Eigen::VectorXd scaled = Eigen::VectorXd::Zero(sv.size());
  for (int i = 0; i < rank; ++i) scaled(i) = projected(i) / sv(i);
  red.v0 = svd.matrixV().leftCols(sv.size()) * scaled;
  red.Z = svd.matrixV().rightCols(nv - rank);
  red.eq_residual = (problem.eq_lhs * red.v0 - problem.eq_rhs).norm();
  red.consistent = red.eq_residual <= kEqualityTol * (1.0 + problem.eq_rhs.norm());
  return red;
}

// Shifted constraint term in the reduced space:
//   S_j(w) = -M_j(v0 + Z w) - sigma_j I, which must stay PD.
ReducedTerm reduce_form(const AffineSymmetricForm& form, const Reduction& red, double sigma) {
  ReducedTerm term;
  const int dim = form.dim();
  const int r = static_cast<int>(red.Z.cols());
  term.base = -form.evaluate(red.v0) - sigma * Eigen::MatrixXd::Identity(dim, dim);
  term.coef.assign(r, Eigen::MatrixXd::Zero(dim, dim));
  for (const auto& [var, coef] : form.coefficients())
    for (int l = 0; l < r; ++l) {
      const double z = red.Z(var, l);
      if (z != 0.0) term.coef[l] -= z * coef;
    }
  return term;
}

// Objective matrix P as a reduced-space term (no sign flip, no shift).
ReducedTerm reduce_objective(const MaxDetProblem& problem, const Reduction& red) {
  ReducedTerm term;
  const int d = static_cast<int>(problem.objective_block.rows());
  const int r = static_cast<int>(red.Z.cols());
  term.base = problem.objective_matrix(red.v0);
  term.coef.assign(r, Eigen::MatrixXd::Zero(d, d));
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      const int id = problem.objective_block(i, j);
      if (id < 0) continue;
      for (int l = 0; l < r; ++l) term.coef[l](i, j) += red.Z(id, l);
    }
  return term;
}

bool term_is_pd(const ReducedTerm& term, const Eigen::VectorXd& w) {
  Eigen::MatrixXd s = term.base;
  for (int j = 0; j < term.vars(); ++j) s += w(j) * term.coef[j];
  return Eigen::LLT<Eigen::MatrixXd>(s).info() == Eigen::Success;
}

struct CenterSpec {
  const std::vector<ReducedTerm>* barriers = nullptr;
  const ReducedTerm* logdet_objective = nullptr;  // weighted by t
  Eigen::VectorXd linear_objective;               // weighted by t; empty = none
  double t = 1.0;
};

enum class CenterOutcome { kCentered, kEarlyExit, kIterationLimit, kNumericalTrouble };

struct CenterResult {
  CenterOutcome outcome = CenterOutcome::kNumericalTrouble;
  int newton_steps = 0;
  std::string message;
};

struct PhiEval {
  bool feasible = false;
  double value = 0.0;
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;
};

PhiEval eval_phi(const CenterSpec& spec, const Eigen::VectorXd& w, bool need_derivatives) {
  PhiEval out;
  const int r = static_cast<int>(w.size());
  out.value = 0.0;
  if (need_derivatives) {
    out.grad = Eigen::VectorXd::Zero(r);
    out.hess = Eigen::MatrixXd::Zero(r, r);
  }
  if (spec.linear_objective.size() > 0) {
    out.value += spec.t * spec.linear_objective.dot(w);
    if (need_derivatives) out.grad += spec.t * spec.linear_objective;
  }
  if (spec.logdet_objective != nullptr) {
    const BarrierEval be = eval_barrier(*spec.logdet_objective, w, need_derivatives);
    if (!be.feasible) return out;
    out.value += spec.t * be.value;
    if (need_derivatives) {
      out.grad += spec.t * be.grad;
      out.hess += spec.t * be.hess;
    }
  }
  for (const auto& term : *spec.barriers) {
    const BarrierEval be = eval_barrier(term, w, need_derivatives);
    if (!be.feasible) return out;
    out.value += be.value;
    if (need_derivatives) {
      out.grad += be.grad;
      out.hess += be.hess;
    }
  }
  out.feasible = true;
  return out;
}

CenterResult center(const CenterSpec& spec, Eigen::VectorXd& w, const SolverOptions& options,
                    const std::function<bool(const Eigen::VectorXd&)>& early_exit = {}) {
  CenterResult result;
  int floored_steps = 0;  // consecutive steps with progress below roundoff
  for (int step = 0; step < options.max_newton; ++step) {
    const PhiEval phi = eval_phi(spec, w, true);
    if (!phi.feasible || !phi.grad.allFinite() || !phi.hess.allFinite()) {
      result.outcome = CenterOutcome::kNumericalTrouble;
      result.message = "barrier evaluation failed at current iterate";
      return result;
    }

    // Newton direction with bounded regularization fallback; the shift is
    // relative to the Hessian scale so it stays meaningful when barrier
    // curvature is large near the boundary.
    const double hessian_scale = 1.0 + phi.hess.diagonal().cwiseAbs().maxCoeff();
    Eigen::VectorXd direction;
    bool factored = false;
    double reg = 0.0;
    for (int attempt = 0; attempt <= 3; ++attempt) {
      Eigen::MatrixXd h = phi.hess;
      if (attempt > 0) {
        reg = (attempt == 1) ? 1e-12 * hessian_scale : reg * 10.0;
        h += reg * Eigen::MatrixXd::Identity(h.rows(), h.cols());
      }
      Eigen::LLT<Eigen::MatrixXd> llt(h);
      if (llt.info() == Eigen::Success) {
        direction = llt.solve(-phi.grad);
        factored = true;
        break;
      }
    }
    if (!factored || !direction.allFinite()) {
      result.outcome = CenterOutcome::kNumericalTrouble;
      result.message = "Hessian factorization failed after regularization";
      return result;
    }

    const double decrement_sq = -phi.grad.dot(direction);
    if (0.5 * decrement_sq <= options.newton_tol) {
      result.outcome = CenterOutcome::kCentered;
      return result;
    }

    // Backtracking line search, feasibility-guarded.
    const double slope = phi.grad.dot(direction);
    double alpha = 1.0;
    bool accepted = false;
    double achieved = 0.0;
    while (alpha > 1e-18) {
      const Eigen::VectorXd trial = w + alpha * direction;
      const PhiEval phi_trial = eval_phi(spec, trial, false);
      if (phi_trial.feasible &&
          phi_trial.value <= phi.value + options.ls_slope * alpha * slope) {
        achieved = phi.value - phi_trial.value;
        w = trial;
        accepted = true;
        break;
      }
      alpha *= options.ls_shrink;
    }
    ++result.newton_steps;
    if (!accepted) {
      if (0.5 * decrement_sq <= 1e-6) {
        // Progress exhausted by roundoff but already essentially centered.
        result.outcome = CenterOutcome::kCentered;
        return result;
      }
      result.outcome = CenterOutcome::kNumericalTrouble;
      result.message = "line search stalled";
      return result;
    }
    // Objective progress below the representable precision of phi means the
    // decrement is measuring rounding noise; the iterate is centered.
    if (achieved <= 1e-14 * (1.0 + std::abs(phi.value))) {
      if (++floored_steps >= 2) {
        result.outcome = CenterOutcome::kCentered;
        return result;
      }
    } else {
      floored_steps = 0;
    }
    if (early_exit && early_exit(w)) {
      result.outcome = CenterOutcome::kEarlyExit;
      return result;
    }
  }
  result.outcome = CenterOutcome::kIterationLimit;
  result.message = "Newton iteration limit reached";
  return result;
}

struct PreparedProblem {
  Reduction red;
  std::vector<ReducedTerm> main_terms;   // shifted constraints, must be PD
  std::vector<double> sigmas;
  ReducedTerm objective;                 // P(w)
  int reduced_dim = 0;
  int constraint_rows = 0;               // declared constraint rows only
};

PreparedProblem prepare(const MaxDetProblem& problem, const SolverOptions& options) {
  PreparedProblem prep;
  prep.red = reduce_equalities(problem);
  prep.reduced_dim = static_cast<int>(prep.red.Z.cols());
  for (const auto& form : problem.constraints) {
    const double sigma = options.margin_scale * form.strict_margin();
    prep.sigmas.push_back(sigma);
    prep.main_terms.push_back(reduce_form(form, prep.red, sigma));
    prep.constraint_rows += form.dim();
  }
  prep.objective = reduce_objective(problem, prep.red);
  return prep;
}

bool strictly_feasible(const PreparedProblem& prep, const Eigen::VectorXd& w) {
  for (const auto& term : prep.main_terms)
    if (!term_is_pd(term, w)) return false;
  return term_is_pd(prep.objective, w);
}

double worst_constraint_margin(const MaxDetProblem& problem, const Eigen::VectorXd& values) {
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& form : problem.constraints) {
    const Eigen::MatrixXd m = form.evaluate(values);
    const double lam =
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m).eigenvalues().maxCoeff();
    worst = std::max(worst, lam);
  }
  return worst;
}

struct Phase1Internal {
  bool feasible = false;
  SolveStatus status = SolveStatus::kInfeasible;
  Eigen::VectorXd w;  // reduced point (without the slack variable)
  double optimum_s = 0.0;
  std::vector<TraceRow> trace;
  std::string message;
};

// min s  s.t.  M_j(v) <= s I  (and objective block P >= -s I), equalities.
Phase1Internal run_phase1(const PreparedProblem& prep, const SolverOptions& options) {
  Phase1Internal out;
  const int r = prep.reduced_dim;

  // Slacked terms in (w, s): base and coefficients of the main terms with the
  // strict shift removed; the slack enters every term with coefficient +I.
  std::vector<ReducedTerm> slacked;
  auto append_slacked = [&](const ReducedTerm& term, double sigma) {
    ReducedTerm ext;
    const int dim = term.dim();
    ext.base = term.base + sigma * Eigen::MatrixXd::Identity(dim, dim);
    ext.coef = term.coef;
    ext.coef.push_back(Eigen::MatrixXd::Identity(dim, dim));
    slacked.push_back(std::move(ext));
  };
  for (std::size_t j = 0; j < prep.main_terms.size(); ++j)
    append_slacked(prep.main_terms[j], prep.sigmas[j]);
  append_slacked(prep.objective, 0.0);  // domain guard: P + s I > 0

  int slack_rows = 0;
  for (const auto& term : slacked) slack_rows += term.dim();

  // Analytic strictly feasible start: w = 0, s = 1 + worst eigenvalue.
  Eigen::VectorXd w0 = Eigen::VectorXd::Zero(r);
  double s0 = -std::numeric_limits<double>::infinity();
  for (const auto& term : slacked) {
    // term.base = -F_j(v0); need max eigenvalue of F_j(v0) = -lambda_min(base).
    const double lam_min =
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(term.base).eigenvalues().minCoeff();
    s0 = std::max(s0, -lam_min);
  }
  s0 += 1.0;

  Eigen::VectorXd wext(r + 1);
  wext.head(r) = w0;
  wext(r) = s0;

  CenterSpec spec;
  spec.barriers = &slacked;
  spec.linear_objective = Eigen::VectorXd::Zero(r + 1);
  spec.linear_objective(r) = 1.0;

  // Exit once the slack is meaningfully negative, not merely below the
  // strictness margins: points hugging the boundary make poor centering
  // starts for the main phase.
  double sigma_max = 0.0;
  for (double sigma : prep.sigmas) sigma_max = std::max(sigma_max, sigma);
  auto exit_when_strict = [&](const Eigen::VectorXd& candidate) {
    return candidate(r) <= -10.0 * sigma_max && strictly_feasible(prep, candidate.head(r));
  };

  double t = options.t_init;
  for (int outer = 0; outer < options.max_outer; ++outer) {
    spec.t = t;
    const CenterResult res = center(spec, wext, options, exit_when_strict);
    if (options.collect_trace)
      out.trace.push_back({outer, t, wext(r), wext(r), res.newton_steps, true});
    if (res.outcome == CenterOutcome::kEarlyExit) {
      out.feasible = true;
      out.status = SolveStatus::kOptimal;
      out.w = wext.head(r);
      out.optimum_s = wext(r);
      return out;
    }
    if (res.outcome == CenterOutcome::kNumericalTrouble) {
      out.status = SolveStatus::kNumericalTrouble;
      out.message = "phase 1: " + res.message;
      return out;
    }
    // A centering that exhausts its Newton budget still yields a feasible
    // barrier iterate; path-following continues with approximate centering
    // and the final margins decide feasibility.
    if (static_cast<double>(slack_rows) / t < options.gap_tol) break;
    t *= options.t_growth;
  }

  // Converged without reaching strict feasibility: infeasible (the slack
  // optimum stayed above the strictness margin).
  if (strictly_feasible(prep, wext.head(r))) {
    out.feasible = true;
    out.status = SolveStatus::kOptimal;
    out.w = wext.head(r);
    out.optimum_s = wext(r);
    return out;
  }
  out.feasible = false;
  out.status = SolveStatus::kInfeasible;
  out.w = wext.head(r);
  out.optimum_s = wext(r);
  out.message = "phase 1 optimum above strictness margin";
  return out;
}

}  // namespace

Phase1Result phase1(const MaxDetProblem& problem, const SolverOptions& options) {
  options.validate();
  problem.validate();
  Phase1Result result;
  const PreparedProblem prep = prepare(problem, options);
  if (!prep.red.consistent) {
    result.feasible = false;
    result.status = SolveStatus::kInfeasible;
    result.message = "inconsistent equality constraints, residual " +
                     std::to_string(prep.red.eq_residual);
    return result;
  }
  if (strictly_feasible(prep, Eigen::VectorXd::Zero(prep.reduced_dim))) {
    result.feasible = true;
    result.status = SolveStatus::kOptimal;
    result.point = prep.red.v0;
    result.optimum_s = worst_constraint_margin(problem, result.point);
    return result;
  }
  Phase1Internal internal = run_phase1(prep, options);
  result.feasible = internal.feasible;
  result.status = internal.status;
  result.optimum_s = internal.optimum_s;
  result.trace = std::move(internal.trace);
  result.message = std::move(internal.message);
  if (internal.w.size() > 0) result.point = prep.red.v0 + prep.red.Z * internal.w;
  return result;
}

Solution solve(const MaxDetProblem& problem, const SolverOptions& options) {
  options.validate();
  problem.validate();

  Solution solution;
  const PreparedProblem prep = prepare(problem, options);
  if (!prep.red.consistent) {
    solution.status = SolveStatus::kInfeasible;
    solution.eq_residual = prep.red.eq_residual;
    solution.message = "inconsistent equality constraints, residual " +
                       std::to_string(prep.red.eq_residual);
    return solution;
  }

  // Strictly feasible start: w = 0 when it already qualifies, else phase 1.
  Eigen::VectorXd w = Eigen::VectorXd::Zero(prep.reduced_dim);
  if (!strictly_feasible(prep, w)) {
    Phase1Internal p1 = run_phase1(prep, options);
    solution.trace = std::move(p1.trace);
    if (!p1.feasible) {
      solution.status = p1.status;
      solution.message = p1.message;
      if (p1.w.size() > 0) {
        solution.values = prep.red.v0 + prep.red.Z * p1.w;
        const SolutionCheck check = check_solution(problem, solution.values);
        solution.margins = check.margins;
        solution.eq_residual = check.eq_residual;
      }
      return solution;
    }
    w = p1.w;
  }

  CenterSpec spec;
  spec.barriers = &prep.main_terms;
  spec.logdet_objective = &prep.objective;

  double t = options.t_init;
  bool converged = false;
  for (int outer = 0; outer < options.max_outer; ++outer) {
    spec.t = t;
    const CenterResult res = center(spec, w, options);

    const BarrierEval obj = eval_barrier(prep.objective, w, false);
    const double objective = obj.feasible ? obj.value : std::numeric_limits<double>::quiet_NaN();

    // det(P) growing past ~1e150 means the volume objective has no finite
    // optimum over this feasible set (nothing pins the scale of P).
    if (objective < -345.0) {
      solution.status = SolveStatus::kNumericalTrouble;
      solution.message = "objective unbounded below: det(P) grows without bound";
      solution.values = prep.red.v0 + prep.red.Z * w;
      const SolutionCheck check = check_solution(problem, solution.values);
      solution.margins = check.margins;
      solution.eq_residual = check.eq_residual;
      solution.objective = objective;
      return solution;
    }
    if (res.outcome == CenterOutcome::kNumericalTrouble) {
      solution.status = SolveStatus::kNumericalTrouble;
      solution.message = res.message;
      solution.values = prep.red.v0 + prep.red.Z * w;
      const SolutionCheck check = check_solution(problem, solution.values);
      solution.margins = check.margins;
      solution.eq_residual = check.eq_residual;
      solution.objective = objective;
      return solution;
    }
    solution.outer_objectives.push_back(objective);
    if (options.collect_trace) {
      const Eigen::VectorXd values = prep.red.v0 + prep.red.Z * w;
      solution.trace.push_back(
          {outer, t, objective, worst_constraint_margin(problem, values), res.newton_steps,
           false});
    }
    if (static_cast<double>(prep.constraint_rows) / t < options.gap_tol) {
      // An exhausted Newton budget at the final barrier parameter leaves an
      // uncertified center; earlier caps are tolerable approximate centering
      // along the path.
      converged = res.outcome == CenterOutcome::kCentered;
      break;
    }
    t *= options.t_growth;
  }

  solution.values = prep.red.v0 + prep.red.Z * w;
  const SolutionCheck check = check_solution(problem, solution.values);
  solution.margins = check.margins;
  solution.eq_residual = check.eq_residual;
  const BarrierEval obj = eval_barrier(prep.objective, w, false);
  solution.objective = obj.feasible ? obj.value : std::numeric_limits<double>::quiet_NaN();
  solution.status = converged ? SolveStatus::kOptimal : SolveStatus::kIterationLimit;
  if (!converged) solution.message = "outer iteration limit reached";

  // Postcondition guard: an Optimal verdict promises margins at or below
  // half the strictness shift and a tight equality residual.
  if (solution.status == SolveStatus::kOptimal) {
    for (std::size_t i = 0; i < solution.margins.size(); ++i)
      if (solution.margins[i].eig_max > -0.5 * prep.sigmas[i]) {
        solution.status = SolveStatus::kNumericalTrouble;
        solution.message = "final point violates the strictness margin on constraint " +
                           problem.constraints[i].name();
        return solution;
      }
    // The null-space parametrization satisfies the equalities exactly in
    // exact arithmetic; what remains is representation roundoff, which
    // scales with the solution magnitude.
    const double roundoff = 64.0 * std::numeric_limits<double>::epsilon() *
                            problem.eq_lhs.norm() * (1.0 + solution.values.norm());
    if (solution.eq_residual > kEqualityTol * (1.0 + problem.eq_rhs.norm()) + roundoff) {
      solution.status = SolveStatus::kNumericalTrouble;
      solution.message = "final point violates the equality residual bound";
    }
  }
  return solution;
}

SolutionCheck check_solution(const MaxDetProblem& problem, const Eigen::VectorXd& values) {
  if (values.size() != problem.num_vars())
    throw std::invalid_argument("check_solution: assignment must cover all variables");
  SolutionCheck check;
  for (const auto& form : problem.constraints) {
    const Eigen::MatrixXd m = form.evaluate(values);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
    check.margins.push_back({eig.eigenvalues().minCoeff(), eig.eigenvalues().maxCoeff()});
  }
  check.eq_residual =
      problem.eq_lhs.rows() > 0 ? (problem.eq_lhs * values - problem.eq_rhs).norm() : 0.0;
  return check;
}

}  // namespace bilstab
