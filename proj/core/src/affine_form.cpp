#include "bilstab/affine_form.hpp"

#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "bilstab/errors.hpp"
#include "bilstab/matrix_io.hpp"

namespace bilstab {

using nlohmann::json;

int BlockLayout::offset(int block) const {
  int off = 0;
  for (int b = 0; b < block; ++b) off += sizes[b];
  return off;
}

int BlockLayout::dim() const { return std::accumulate(sizes.begin(), sizes.end(), 0); }

AffineSymmetricForm::AffineSymmetricForm(int dim, std::string name) : name_(std::move(name)) {
  if (dim < 1) throw std::invalid_argument("AffineSymmetricForm: dim must be >= 1");
  layout_ = BlockLayout{{name_.empty() ? std::string("m") : name_}, {dim}};
  constant_ = Eigen::MatrixXd::Zero(dim, dim);
}

AffineSymmetricForm::AffineSymmetricForm(BlockLayout layout, std::string name)
    : name_(std::move(name)), layout_(std::move(layout)) {
  const int dim = layout_.dim();
  if (dim < 1) throw std::invalid_argument("AffineSymmetricForm: empty layout");
  constant_ = Eigen::MatrixXd::Zero(dim, dim);
}

Eigen::MatrixXd& AffineSymmetricForm::coefficient_slot(int var) {
  auto it = coefficients_.find(var);
  if (it == coefficients_.end())
    it = coefficients_.emplace(var, Eigen::MatrixXd::Zero(dim(), dim())).first;
  return it->second;
}

namespace {

void write_block(Eigen::MatrixXd& target, const BlockLayout& layout, int bi, int bj,
                 const Eigen::MatrixXd& m) {
  if (bi < 0 || bj < 0 || bi >= layout.blocks() || bj >= layout.blocks())
    throw std::invalid_argument("block index out of range");
  const int ri = layout.offset(bi), rj = layout.offset(bj);
  const int si = layout.sizes[bi], sj = layout.sizes[bj];
  if (m.rows() != si || m.cols() != sj)
    throw std::invalid_argument("block (" + layout.names[bi] + "," + layout.names[bj] +
                                ") expects " + std::to_string(si) + "x" + std::to_string(sj));
  target.block(ri, rj, si, sj) += m;
  if (bi != bj) {
    target.block(rj, ri, sj, si) += m.transpose();
  } else {
    // Diagonal blocks must be symmetric on their own.
    if ((m - m.transpose()).cwiseAbs().maxCoeff() >
        1e-12 * (1.0 + m.cwiseAbs().maxCoeff()))
      throw std::invalid_argument("diagonal block " + layout.names[bi] + " is not symmetric");
  }
}

}  // namespace

void AffineSymmetricForm::add_constant_block(int bi, int bj, const Eigen::MatrixXd& m) {
  write_block(constant_, layout_, bi, bj, m);
}

void AffineSymmetricForm::add_coefficient_block(int var, int bi, int bj,
                                                const Eigen::MatrixXd& m) {
  write_block(coefficient_slot(var), layout_, bi, bj, m);
}

void AffineSymmetricForm::add_constant(const Eigen::MatrixXd& m) {
  if (m.rows() != dim() || m.cols() != dim())
    throw std::invalid_argument("add_constant: wrong dimension");
  constant_ += m;
}

void AffineSymmetricForm::add_coefficient(int var, const Eigen::MatrixXd& m) {
  if (m.rows() != dim() || m.cols() != dim())
    throw std::invalid_argument("add_coefficient: wrong dimension");
  coefficient_slot(var) += m;
}

Eigen::MatrixXd AffineSymmetricForm::evaluate(const Eigen::VectorXd& vars) const {
  Eigen::MatrixXd value = constant_;
  for (const auto& [var, coef] : coefficients_) {
    if (var < 0 || var >= vars.size())
      throw std::invalid_argument("evaluate: assignment does not cover variable " +
                                  std::to_string(var));
    value += vars(var) * coef;
  }
  return value;
}

double AffineSymmetricForm::strict_margin() const {
  if (explicit_margin_ >= 0.0) return explicit_margin_;
  return 1e-7 * (1.0 + constant_.cwiseAbs().maxCoeff());
}

double AffineSymmetricForm::asymmetry() const {
  double worst = (constant_ - constant_.transpose()).cwiseAbs().maxCoeff();
  for (const auto& [var, coef] : coefficients_)
    worst = std::max(worst, (coef - coef.transpose()).cwiseAbs().maxCoeff());
  return worst;
}

int MaxDetProblem::total_constraint_rows() const {
  int rows = 0;
  for (const auto& c : constraints) rows += c.dim();
  return rows;
}

int MaxDetProblem::var(const std::string& name) const {
  for (std::size_t i = 0; i < var_names.size(); ++i)
    if (var_names[i] == name) return static_cast<int>(i);
  throw NotFoundError("no variable named " + name);
}

Eigen::MatrixXd MaxDetProblem::objective_matrix(const Eigen::VectorXd& vars) const {
  const Eigen::Index d = objective_block.rows();
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      const int id = objective_block(i, j);
      if (id >= 0) P(i, j) = vars(id);
    }
  }
  return P;
}

void MaxDetProblem::validate() const {
  const int nv = num_vars();
  if (objective_block.rows() != objective_block.cols() || objective_block.rows() < 1)
    throw std::invalid_argument("MaxDetProblem: objective block must be square and non-empty");
  for (Eigen::Index i = 0; i < objective_block.rows(); ++i)
    for (Eigen::Index j = 0; j < objective_block.cols(); ++j) {
      if (objective_block(i, j) != objective_block(j, i))
        throw std::invalid_argument("MaxDetProblem: objective block pattern not symmetric");
      if (objective_block(i, j) >= nv)
        throw std::invalid_argument("MaxDetProblem: objective block id out of range");
    }
  for (const auto& c : constraints) {
    if (c.asymmetry() > 0.0)
      throw std::invalid_argument("MaxDetProblem: constraint " + c.name() + " not symmetric");
    for (const auto& [var, coef] : c.coefficients())
      if (var < 0 || var >= nv)
        throw std::invalid_argument("MaxDetProblem: constraint references unknown variable");
  }
  if (eq_lhs.rows() != eq_rhs.size())
    throw std::invalid_argument("MaxDetProblem: equality sizes disagree");
  if (eq_lhs.rows() > 0 && eq_lhs.cols() != nv)
    throw std::invalid_argument("MaxDetProblem: equality width must equal num_vars");
}

std::string MaxDetProblem::debug_json() const {
  json j;
  j["variables"] = var_names;
  json cons = json::array();
  for (const auto& c : constraints) {
    json jc;
    jc["name"] = c.name();
    jc["dim"] = c.dim();
    jc["strict_margin"] = c.strict_margin();
    json blocks = json::array();
    for (int b = 0; b < c.layout().blocks(); ++b)
      blocks.push_back({{"name", c.layout().names[b]}, {"size", c.layout().sizes[b]}});
    jc["blocks"] = blocks;
    jc["constant"] = json::parse(matrix_to_json(c.constant()));
    json coefs = json::array();
    for (const auto& [var, coef] : c.coefficients())
      coefs.push_back({{"var", var_names[var]}, {"matrix", json::parse(matrix_to_json(coef))}});
    jc["coefficients"] = coefs;
    cons.push_back(std::move(jc));
  }
  j["constraints"] = cons;
  json eqs = json::array();
  for (Eigen::Index r = 0; r < eq_lhs.rows(); ++r) {
    json row;
    json coeffs = json::object();
    for (Eigen::Index cidx = 0; cidx < eq_lhs.cols(); ++cidx)
      if (eq_lhs(r, cidx) != 0.0) coeffs[var_names[cidx]] = eq_lhs(r, cidx);
    row["coeffs"] = coeffs;
    row["rhs"] = eq_rhs(r);
    eqs.push_back(std::move(row));
  }
  j["equalities"] = eqs;
  json ob = json::array();
  for (Eigen::Index i = 0; i < objective_block.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index jj = 0; jj < objective_block.cols(); ++jj) {
      const int id = objective_block(i, jj);
      row.push_back(id >= 0 ? json(var_names[id]) : json(nullptr));
    }
    ob.push_back(std::move(row));
  }
  j["objective_block"] = ob;
  j["objective"] = "-log det(objective_block)";
  return j.dump(2);
}

Eigen::MatrixXi add_symmetric_variable(MaxDetProblem& problem, const std::string& base, int n) {
  Eigen::MatrixXi ids(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      const int id = static_cast<int>(problem.var_names.size());
      problem.var_names.push_back(base + "(" + std::to_string(i) + "," + std::to_string(j) + ")");
      ids(i, j) = id;
      ids(j, i) = id;
    }
  }
  return ids;
}

Eigen::MatrixXi add_matrix_variable(MaxDetProblem& problem, const std::string& base, int rows,
                                    int cols) {
  Eigen::MatrixXi ids(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) {
      ids(i, j) = static_cast<int>(problem.var_names.size());
      problem.var_names.push_back(base + "(" + std::to_string(i) + "," + std::to_string(j) + ")");
    }
  return ids;
}

int add_scalar_variable(MaxDetProblem& problem, const std::string& name) {
  problem.var_names.push_back(name);
  return static_cast<int>(problem.var_names.size()) - 1;
}

Eigen::MatrixXd symmetric_basis(int n, int i, int j) {
  Eigen::MatrixXd basis = Eigen::MatrixXd::Zero(n, n);
  basis(i, j) += 1.0;
  basis(j, i) += (i == j) ? 0.0 : 1.0;
  return basis;
}

}  // namespace bilstab
