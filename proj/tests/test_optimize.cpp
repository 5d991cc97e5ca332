#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "btgp/optimize.hpp"

namespace btgp {

namespace {

struct Quadratic {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;

  double value(const Eigen::VectorXd &x) const { return 0.5 * x.dot(A * x) - b.dot(x); }
  double with_gradient(const Eigen::VectorXd &x, Eigen::VectorXd &g) const {
    g = A * x - b;
    return value(x);
  }
};

double rosenbrock(const Eigen::VectorXd &x) {
  return std::pow(1 - x(0), 2) + 100 * std::pow(x(1) - x(0) * x(0), 2);
}

double rosenbrock_grad(const Eigen::VectorXd &x, Eigen::VectorXd &g) {
  g.resize(2);
  g(0) = -2 * (1 - x(0)) - 400 * x(0) * (x(1) - x(0) * x(0));
  g(1) = 200 * (x(1) - x(0) * x(0));
  return rosenbrock(x);
}

} // namespace

TEST(Bfgs, ConvexQuadratic) {
  Quadratic f{(Eigen::MatrixXd(3, 3) << 4, 1, 0, 1, 3, 0.5, 0, 0.5, 2).finished(),
              Eigen::Vector3d(1, -2, 0.5)};
  const auto result =
      minimize_bfgs([&](const Eigen::VectorXd &x) { return f.value(x); },
                    [&](const Eigen::VectorXd &x, Eigen::VectorXd &g) { return f.with_gradient(x, g); },
                    Eigen::Vector3d(5, 5, 5));
  const Eigen::VectorXd solution = f.A.ldlt().solve(f.b);
  EXPECT_LE((result.x - solution).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_NE(result.status, OptimizerStatus::max_iterations);
  EXPECT_NE(result.status, OptimizerStatus::diverged);
}

TEST(Bfgs, Rosenbrock) {
  BfgsOptions opts;
  opts.max_iterations = 500;
  opts.relative_tolerance = 0.0;
  const auto result = minimize_bfgs(rosenbrock, rosenbrock_grad, Eigen::Vector2d(-1.2, 1.0), opts);
  EXPECT_EQ(result.status, OptimizerStatus::converged_gradient);
  EXPECT_NEAR(result.x(0), 1.0, 1e-5);
  EXPECT_NEAR(result.x(1), 1.0, 1e-5);
  EXPECT_EQ(result.gradient_evaluations, result.iterations + 1);
}

TEST(Bfgs, HistoryIsNonIncreasing) {
  const auto result = minimize_bfgs(rosenbrock, rosenbrock_grad, Eigen::Vector2d(-1.2, 1.0));
  ASSERT_EQ(result.history.size(), static_cast<std::size_t>(result.iterations + 1));
  for (std::size_t k = 1; k < result.history.size(); ++k) {
    EXPECT_LE(result.history[k], result.history[k - 1]);
  }
  EXPECT_EQ(result.history.back(), result.value);
}

TEST(Bfgs, IterationCap) {
  BfgsOptions opts;
  opts.max_iterations = 3;
  const auto result = minimize_bfgs(rosenbrock, rosenbrock_grad, Eigen::Vector2d(-1.2, 1.0), opts);
  EXPECT_EQ(result.status, OptimizerStatus::max_iterations);
  EXPECT_EQ(result.iterations, 3);
}

TEST(Bfgs, StartAtMinimum) {
  const auto result = minimize_bfgs(rosenbrock, rosenbrock_grad, Eigen::Vector2d(1.0, 1.0));
  EXPECT_EQ(result.status, OptimizerStatus::converged_gradient);
  EXPECT_EQ(result.iterations, 0);
  EXPECT_EQ(result.value_evaluations, 1);
}

TEST(Bfgs, BacktracksOutOfNonFiniteRegion) {
  // log barrier: undefined for x <= 0, minimum at x = 1.
  auto value = [](const Eigen::VectorXd &x) {
    return x(0) > 0 ? x(0) - std::log(x(0)) : std::numeric_limits<double>::infinity();
  };
  auto grad = [&](const Eigen::VectorXd &x, Eigen::VectorXd &g) {
    g = Eigen::VectorXd::Constant(1, 1.0 - 1.0 / x(0));
    return value(x);
  };
  const auto result = minimize_bfgs(value, grad, Eigen::VectorXd::Constant(1, 0.05));
  EXPECT_NEAR(result.x(0), 1.0, 1e-5);
  EXPECT_TRUE(std::isfinite(result.value));
}

TEST(Bfgs, NonFiniteStartIsDiverged) {
  auto value = [](const Eigen::VectorXd &) { return std::numeric_limits<double>::quiet_NaN(); };
  auto grad = [&](const Eigen::VectorXd &x, Eigen::VectorXd &g) {
    g = Eigen::VectorXd::Zero(x.size());
    return value(x);
  };
  const auto result = minimize_bfgs(value, grad, Eigen::Vector2d(0, 0));
  EXPECT_EQ(result.status, OptimizerStatus::diverged);
  EXPECT_EQ(result.x, Eigen::Vector2d(0, 0));
}

TEST(Bfgs, GradientFailureKeepsLastGoodIterate) {
  // Finite values everywhere, but the gradient breaks down past x = 0.5.
  auto value = [](const Eigen::VectorXd &x) { return (x(0) - 2.0) * (x(0) - 2.0); };
  auto grad = [&](const Eigen::VectorXd &x, Eigen::VectorXd &g) {
    g = Eigen::VectorXd::Constant(
        1, x(0) > 0.5 ? std::numeric_limits<double>::quiet_NaN() : 2.0 * (x(0) - 2.0));
    return value(x);
  };
  const auto result = minimize_bfgs(value, grad, Eigen::VectorXd::Zero(1));
  EXPECT_EQ(result.status, OptimizerStatus::diverged);
  EXPECT_LE(result.x(0), 0.5);
  EXPECT_TRUE(result.gradient.allFinite());
}

TEST(Bfgs, ValueStallStops) {
  // Flat beyond x = 1; the second step cannot change the value.
  auto value = [](const Eigen::VectorXd &x) { return x(0) < 1.0 ? (x(0) - 1.0) * (x(0) - 1.0) : 0.0; };
  auto grad = [&](const Eigen::VectorXd &x, Eigen::VectorXd &g) {
    g = Eigen::VectorXd::Constant(1, x(0) < 1.0 ? 2.0 * (x(0) - 1.0) : 0.0);
    return value(x);
  };
  const auto result = minimize_bfgs(value, grad, Eigen::VectorXd::Constant(1, -3.0));
  EXPECT_TRUE(result.status == OptimizerStatus::converged_value ||
              result.status == OptimizerStatus::converged_gradient);
  EXPECT_NEAR(value(result.x), 0.0, 1e-8);
}

TEST(Bfgs, StatusNames) {
  EXPECT_EQ(to_string(OptimizerStatus::converged_gradient), "converged_gradient");
  EXPECT_EQ(to_string(OptimizerStatus::line_search_failed), "line_search_failed");
  EXPECT_EQ(to_string(OptimizerStatus::diverged), "diverged");
}

} // namespace btgp
