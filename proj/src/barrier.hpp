#pragma once

// Primal log-barrier Newton method for
//
//   maximize F(x)  subject to  A x <= c,  x >= 0
//
// with F concave and twice differentiable on the strict interior.

#include <functional>

#include <Eigen/Dense>

namespace ehrelay::detail {

struct BarrierProblem {
  Eigen::MatrixXd A;
  Eigen::VectorXd c;
  /// Returns F(x); fills gradient and Hessian when the pointers are non-null.
  std::function<double(const Eigen::VectorXd&, Eigen::VectorXd*, Eigen::MatrixXd*)> objective;
};

struct BarrierSettings {
  double t0 = 1.0;
  double growth = 10.0;
  double t_final = 1e10;
  double tol_grad = 1e-9;  ///< final stage stops at ||grad psi||_inf / t <= tol_grad
  int max_newton = 400;
};

struct BarrierResult {
  Eigen::VectorXd x;
  Eigen::VectorXd z_rows;   ///< 1 / (t s_k), multipliers of A x <= c
  Eigen::VectorXd z_lower;  ///< 1 / (t x_j), multipliers of x >= 0
  int newton_steps = 0;
  bool converged = false;
};

/// x0 must be strictly feasible.
BarrierResult maximize_with_barrier(const BarrierProblem& prob, Eigen::VectorXd x0,
                                    const BarrierSettings& cfg);

}  // namespace ehrelay::detail
