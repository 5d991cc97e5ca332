#include "btgp/optimize.hpp"

#include <algorithm>
#include <cmath>

namespace btgp {

std::string to_string(OptimizerStatus status) {
  switch (status) {
  case OptimizerStatus::converged_gradient:
    return "converged_gradient";
  case OptimizerStatus::converged_value:
    return "converged_value";
  case OptimizerStatus::max_iterations:
    return "max_iterations";
  case OptimizerStatus::line_search_failed:
    return "line_search_failed";
  case OptimizerStatus::diverged:
    return "diverged";
  }
  return "unknown";
}

BfgsResult minimize_bfgs(const ValueFunction &value,
                         const GradientFunction &value_and_gradient,
                         const Eigen::VectorXd &x0, const BfgsOptions &opts) {
  const Eigen::Index dim = x0.size();
  BfgsResult result;
  result.x = x0;
  result.gradient.resize(dim);
  result.value = value_and_gradient(result.x, result.gradient);
  ++result.value_evaluations;
  ++result.gradient_evaluations;
  result.history.push_back(result.value);
  if (!std::isfinite(result.value) || !result.gradient.allFinite()) {
    result.status = OptimizerStatus::diverged;
    return result;
  }

  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(dim, dim);
  bool scaled = false;
  Eigen::VectorXd x_new(dim);
  Eigen::VectorXd g_new(dim);

  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    if (result.gradient.lpNorm<Eigen::Infinity>() <= opts.gradient_tolerance) {
      result.status = OptimizerStatus::converged_gradient;
      return result;
    }
    Eigen::VectorXd direction = -H * result.gradient;
    double slope = result.gradient.dot(direction);
    if (!(slope < 0.0)) {
      // Lost descent; restart from steepest descent.
      H.setIdentity();
      scaled = false;
      direction = -result.gradient;
      slope = -result.gradient.squaredNorm();
    }

    double step = 1.0;
    if (!scaled) {
      step = std::min(1.0, 1.0 / direction.lpNorm<Eigen::Infinity>());
    }
    bool accepted = false;
    double f_new = 0.0;
    for (int ls = 0; ls < opts.max_line_search_steps; ++ls) {
      x_new = result.x + step * direction;
      f_new = value(x_new);
      ++result.value_evaluations;
      if (std::isfinite(f_new) &&
          f_new <= result.value + opts.c1 * step * slope) {
        accepted = true;
        break;
      }
      double next = 0.5 * step;
      if (std::isfinite(f_new)) {
        // Minimiser of the quadratic through f(0), f'(0), f(step).
        const double denom = 2.0 * (f_new - result.value - slope * step);
        if (denom > 0.0) {
          next = -slope * step * step / denom;
        }
      }
      step = std::clamp(next, 0.1 * step, 0.5 * step);
    }
    if (!accepted) {
      result.status = OptimizerStatus::line_search_failed;
      return result;
    }

    const double f_grad = value_and_gradient(x_new, g_new);
    ++result.gradient_evaluations;
    ++result.value_evaluations;
    if (!std::isfinite(f_grad) || !g_new.allFinite()) {
      result.status = OptimizerStatus::diverged;
      return result;
    }
    f_new = f_grad;

    const Eigen::VectorXd s = x_new - result.x;
    const Eigen::VectorXd y = g_new - result.gradient;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (!scaled) {
        H *= sy / y.squaredNorm();
        scaled = true;
      }
      const double rho = 1.0 / sy;
      const Eigen::VectorXd Hy = H * y;
      const double yHy = y.dot(Hy);
      H += ((sy + yHy) * rho * rho) * (s * s.transpose()) -
           rho * (Hy * s.transpose() + s * Hy.transpose());
    } else {
      ++result.skipped_updates;
    }

    const double previous = result.value;
    result.x = x_new;
    result.value = f_new;
    result.gradient = g_new;
    result.iterations = iter + 1;
    result.history.push_back(f_new);
    if (std::abs(previous - f_new) <=
        opts.relative_tolerance * std::max(1.0, std::abs(previous))) {
      result.status = OptimizerStatus::converged_value;
      return result;
    }
  }
  result.status =
      result.gradient.lpNorm<Eigen::Infinity>() <= opts.gradient_tolerance
          ? OptimizerStatus::converged_gradient
          : OptimizerStatus::max_iterations;
  return result;
}

} // namespace btgp
