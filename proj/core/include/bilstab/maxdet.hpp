#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "bilstab/affine_form.hpp"

namespace bilstab {

enum class SolveStatus { kOptimal, kInfeasible, kNumericalTrouble, kIterationLimit };

const char* to_string(SolveStatus status);

struct SolverOptions {
  double margin_scale = 1.0;  // multiplies each form's strict margin
  double t_init = 1.0;        // initial barrier parameter
  double t_growth = 10.0;
  double newton_tol = 1e-10;  // stop centering when lambda^2 / 2 <= tol
  double gap_tol = 1e-7;      // stop outer loop when constraint rows / t < tol
  int max_outer = 60;
  int max_newton = 100;       // Newton steps per centering
  double ls_slope = 0.25;     // Armijo slope
  double ls_shrink = 0.5;     // backtracking factor
  bool collect_trace = true;

  void validate() const;
};

struct ConstraintMargin {
  double eig_min = 0.0;
  double eig_max = 0.0;
};

struct TraceRow {
  int outer = 0;
  double t = 0.0;
  double objective = 0.0;     // -log det P, or s during phase 1
  double worst_margin = 0.0;  // max over constraints of lambda_max
  int newton_steps = 0;
  bool phase1 = false;
};

struct Solution {
  SolveStatus status = SolveStatus::kNumericalTrouble;
  Eigen::VectorXd values;  // full variable space; empty when no point exists
  double objective = 0.0;  // -log det(P)
  std::vector<ConstraintMargin> margins;
  double eq_residual = 0.0;
  std::vector<TraceRow> trace;
  std::vector<double> outer_objectives;  // -log det P after each main centering
  std::string message;
};

struct Phase1Result {
  bool feasible = false;
  SolveStatus status = SolveStatus::kInfeasible;
  Eigen::VectorXd point;  // full variable space when available
  double optimum_s = 0.0;
  std::vector<TraceRow> trace;
  std::string message;
};

// Strictly feasible point search: minimizes s subject to every constraint
// form <= s*I (plus positivity of the objective block, which the barrier
// objective requires) and the equality constraints, starting from the
// analytically feasible point (equality-consistent assignment,
// s = 1 + worst eigenvalue). Succeeds when a point with every constraint
// margin below its strict margin is reached.
Phase1Result phase1(const MaxDetProblem& problem, const SolverOptions& options = {});

// Barrier path-following for: minimize -log det(P) subject to the problem's
// affine symmetric forms < 0 and linear equalities. Equalities are eliminated
// by null-space reparametrization before Newton iterations; phase1 supplies
// the strictly feasible start.
Solution solve(const MaxDetProblem& problem, const SolverOptions& options = {});

// Exact evaluation of all constraints and equalities at an assignment:
// eigenvalue range per constraint plus the equality residual norm.
struct SolutionCheck {
  std::vector<ConstraintMargin> margins;
  double eq_residual = 0.0;
};
SolutionCheck check_solution(const MaxDetProblem& problem, const Eigen::VectorXd& values);

namespace maxdet_detail {

// S(w) = base + sum_j w(j) * coef[j]; barrier term -log det(S(w)).
// Exposed for the finite-difference tests of the barrier calculus.
struct ReducedTerm {
  Eigen::MatrixXd base;
  std::vector<Eigen::MatrixXd> coef;

  int dim() const { return static_cast<int>(base.rows()); }
  int vars() const { return static_cast<int>(coef.size()); }
};

struct BarrierEval {
  bool feasible = false;   // Cholesky of S succeeded
  double value = 0.0;      // -log det S
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;
};

BarrierEval eval_barrier(const ReducedTerm& term, const Eigen::VectorXd& w, bool need_derivatives);

}  // namespace maxdet_detail

}  // namespace bilstab
