#ifndef BTGP_OPTIMIZE_HPP
#define BTGP_OPTIMIZE_HPP

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace btgp {

struct BfgsOptions {
  int max_iterations = 200;
  double gradient_tolerance = 1e-6;
  // Stop when |f_k - f_{k+1}| <= relative_tolerance * max(1, |f_k|).
  double relative_tolerance = 1e-9;
  // Sufficient decrease constant.
  double c1 = 1e-4;
  int max_line_search_steps = 40;
};

enum class OptimizerStatus {
  converged_gradient,
  converged_value,
  max_iterations,
  line_search_failed,
  diverged,
};

std::string to_string(OptimizerStatus status);

struct BfgsResult {
  Eigen::VectorXd x;
  double value = 0.0;
  Eigen::VectorXd gradient;
  int iterations = 0;
  int value_evaluations = 0;
  int gradient_evaluations = 0;
  // Skipped inverse-Hessian updates (s^T y not positive).
  int skipped_updates = 0;
  OptimizerStatus status = OptimizerStatus::max_iterations;
  // Objective value at x0 and after every accepted step.
  std::vector<double> history;
};

using ValueFunction = std::function<double(const Eigen::VectorXd &)>;
using GradientFunction =
    std::function<double(const Eigen::VectorXd &, Eigen::VectorXd &)>;

/*
 * Quasi-Newton minimisation with BFGS updates of the inverse Hessian.
 *
 * The line search evaluates only `value`: backtracking on the sufficient
 * decrease condition with safeguarded quadratic interpolation. The gradient
 * is computed once per accepted point, and the inverse Hessian is updated
 * whenever s^T y > 0 so that it stays positive definite. Non-finite values
 * are treated as failed trial steps, and the best finite iterate is always
 * returned.
 */
BfgsResult minimize_bfgs(const ValueFunction &value,
                         const GradientFunction &value_and_gradient,
                         const Eigen::VectorXd &x0, const BfgsOptions &opts = {});

} // namespace btgp

#endif // BTGP_OPTIMIZE_HPP
