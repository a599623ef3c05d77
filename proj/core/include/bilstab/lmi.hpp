#pragma once

#include <Eigen/Core>

#include "bilstab/affine_form.hpp"
#include "bilstab/closed_loop.hpp"
#include "bilstab/data_record.hpp"
#include "bilstab/system.hpp"

namespace bilstab {

// Scalars fixed before the semidefinite solve.
//   delta: known norm bound ||D|| <= delta,
//   eps1:  scalar fixed to make the remaining problem an LMI,
//   mu:    contraction factor in (0,1]; mu = 1 is the plain asymptotic case,
//          mu < 1 additionally enforces V(x+) < mu V(x).
struct DesignIneqInputs {
  double delta = 0.0;
  double eps1 = 0.0;
  double mu = 1.0;

  void validate() const;
};

// Numeric 4-block matrix (sizes n,n,1,n; total 3n+1) whose negative
// definiteness certifies the Lyapunov decrease on the ellipsoid for one
// specific D:
//   [ -Q        0      Kc'      (Ac + F D H)' ]
//   [  0      -tau Q   0         D'           ]
//   [  Kc       0     -1/tau     0            ]
//   [  ...      D      0        -Q^{-1}       ]
// Throws std::invalid_argument if Q is not SPD or tau <= 0.
Eigen::MatrixXd build_mi_with_D(const ClosedLoopData& cl, const Eigen::MatrixXd& Q, double tau,
                                const Eigen::MatrixXd& D);

// Numeric 5-block matrix (sizes n,n,1,n,n; total 4n+1) that certifies the
// previous inequality uniformly over all ||D|| <= delta: bordered with
// delta*H', delta*I rows, -eps2*I corner, and -Q^{-1} + eps2*I in block 4.
Eigen::MatrixXd build_mi_without_D(const ClosedLoopData& cl, const Eigen::MatrixXd& Q, double tau,
                                   double eps2, double delta);

// Parametric data-based design problem in the decision variables
// (P symmetric n x n, Y n x T, eps2), with eps1, delta, mu fixed:
//   minimize -log det(P)
//   s.t. the 5-block form below < 0 and P = X0 * Y' entrywise,
//   [ -mu P    0          Y U0'      Y X1'        -delta Y V0'    ]
//   [  .      -eps1 P     0          0            delta eps1 P    ]
//   [  .       .         -eps1 I     0            0               ]
//   [  .       .          .         -P + eps2 I   0               ]
//   [  .       .          .          .            -eps2 I         ]
// Rank deficiency of X0 is not rejected here; it surfaces as solver
// infeasibility through the equality constraints.
MaxDetProblem build_data_lmi(const DataRecord& data, const DesignIneqInputs& cfg);

// Parametric model-based baseline in (P symmetric n x n, y in R^n):
//   minimize -log det(P)
//   s.t. P > 0 and the 4-block form
//   [ -P          0             y             P A' + y B' ]
//   [  .         -eps1 P        0             P D'        ]
//   [  .          .            -(1/eps1) I    0           ]
//   [  .          .             .            -P           ]  < 0.
// The gain is recovered downstream as K = y' P^{-1}.
MaxDetProblem build_model_lmi(const BilinearSystem& sys, double eps1);

// Certificate block matrix [ G + e M M', N ; N', -e I ] whose negative
// definiteness for some scalar e implies
//   G + M Dh N' + N Dh' M' < 0 for all ||Dh|| <= 1.
Eigen::MatrixXd petersen_certificate_matrix(const Eigen::MatrixXd& G, const Eigen::MatrixXd& M,
                                            const Eigen::MatrixXd& N, double e);

// Left-hand side G + M Dh N' + N Dh' M' for a specific contraction Dh.
// Throws std::invalid_argument when ||Dh|| > 1 (the caller's sampling
// contract) or on dimension mismatch.
Eigen::MatrixXd petersen_lhs(const Eigen::MatrixXd& G, const Eigen::MatrixXd& M,
                             const Eigen::MatrixXd& N, const Eigen::MatrixXd& Dhat);

}  // namespace bilstab
