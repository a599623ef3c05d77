#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace bilstab {

// Named block partition of a symmetric matrix; used so that audits and error
// messages can point at a specific block of a structured inequality.
struct BlockLayout {
  std::vector<std::string> names;
  std::vector<int> sizes;

  int blocks() const { return static_cast<int>(sizes.size()); }
  int offset(int block) const;
  int dim() const;
};

// Symmetric matrix-valued function, affine in scalar decision variables:
//   M(v) = constant + sum_i v[id_i] * coefficient_i.
// Every coefficient is symmetric, so M(v) is symmetric for any assignment.
class AffineSymmetricForm {
 public:
  AffineSymmetricForm() = default;
  explicit AffineSymmetricForm(int dim, std::string name = {});
  AffineSymmetricForm(BlockLayout layout, std::string name);

  int dim() const { return static_cast<int>(constant_.rows()); }
  const std::string& name() const { return name_; }
  const BlockLayout& layout() const { return layout_; }
  const Eigen::MatrixXd& constant() const { return constant_; }
  const std::map<int, Eigen::MatrixXd>& coefficients() const { return coefficients_; }

  // Accumulates m into block (bi, bj) of the constant term; for bi != bj the
  // transpose lands in (bj, bi) so the result stays symmetric.
  void add_constant_block(int bi, int bj, const Eigen::MatrixXd& m);
  void add_coefficient_block(int var, int bi, int bj, const Eigen::MatrixXd& m);

  // Whole-matrix accumulation (m must be symmetric).
  void add_constant(const Eigen::MatrixXd& m);
  void add_coefficient(int var, const Eigen::MatrixXd& m);

  Eigen::MatrixXd evaluate(const Eigen::VectorXd& vars) const;

  // Strict "< 0" is realized as "<= -margin * I"; by default the margin is
  // 1e-7 * (1 + largest absolute entry of the constant term).
  double strict_margin() const;
  void set_strict_margin(double margin) { explicit_margin_ = margin; }

  // Largest |asymmetry| over constant and coefficients; 0 when well-formed.
  double asymmetry() const;

 private:
  Eigen::MatrixXd& coefficient_slot(int var);

  std::string name_;
  BlockLayout layout_;
  Eigen::MatrixXd constant_;
  std::map<int, Eigen::MatrixXd> coefficients_;
  double explicit_margin_ = -1.0;  // < 0 means "derive from constant term"
};

// Determinant-maximization problem over named scalar variables:
//   minimize    -log det(P(v))
//   subject to  constraint_k(v) < 0 for all k,  eq_lhs * v = eq_rhs,
// where P(v) is the symmetric matrix picked out by objective_block (entries
// are variable ids; -1 marks a structural zero).
struct MaxDetProblem {
  std::vector<std::string> var_names;
  std::vector<AffineSymmetricForm> constraints;
  Eigen::MatrixXd eq_lhs;  // k x num_vars (k may be 0)
  Eigen::VectorXd eq_rhs;  // k
  Eigen::MatrixXi objective_block;  // d x d, symmetric pattern of variable ids

  int num_vars() const { return static_cast<int>(var_names.size()); }
  int total_constraint_rows() const;
  int var(const std::string& name) const;  // throws NotFoundError when absent

  // P at an assignment of all variables.
  Eigen::MatrixXd objective_matrix(const Eigen::VectorXd& vars) const;

  // Sanity checks (ids in range, symmetric pattern, coefficient symmetry).
  void validate() const;

  // Dense dump for cross-checking against external solvers; schema described
  // in the repository README.
  std::string debug_json() const;
};

// Variable registration helpers. Symmetric matrices are parametrized by their
// upper triangle so every constraint stays affine in free scalars.
Eigen::MatrixXi add_symmetric_variable(MaxDetProblem& problem, const std::string& base, int n);
Eigen::MatrixXi add_matrix_variable(MaxDetProblem& problem, const std::string& base, int rows,
                                    int cols);
int add_scalar_variable(MaxDetProblem& problem, const std::string& name);

// Symmetric basis matrix for entry (i,j): e_i e_i' on the diagonal,
// e_i e_j' + e_j e_i' off it.
Eigen::MatrixXd symmetric_basis(int n, int i, int j);

}  // namespace bilstab
