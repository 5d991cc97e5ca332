#ifndef BTGP_CLI_METRICS_HPP
#define BTGP_CLI_METRICS_HPP

#include <chrono>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

namespace btgp::cli {

double rmse(const Eigen::VectorXd &a, const Eigen::VectorXd &b);

struct PredictiveMetrics {
  Eigen::Index n = 0;
  // Mean Gaussian NLL per point on the standardized scale.
  double nll = 0.0;
  double rmse_standardized = 0.0;
  double rmse = 0.0;
};

// y and mu in original units; mu_std / sigma2_std on the standardized scale.
PredictiveMetrics predictive_metrics(const Eigen::VectorXd &y_std, const Eigen::VectorXd &mu_std,
                                     const Eigen::VectorXd &sigma2_std, double scale);

// Wall-clock phases. Each mark records the phase duration and the elapsed
// time since construction, so the elapsed column is nondecreasing.
class PhaseTimer {
public:
  PhaseTimer();
  // Ends the current phase under `name`.
  void mark(const std::string &name);
  nlohmann::json to_json() const;
  const std::vector<std::pair<std::string, double>> &durations() const { return durations_; }

private:
  using Clock = std::chrono::steady_clock;
  Clock::time_point start_;
  Clock::time_point last_;
  std::vector<std::pair<std::string, double>> durations_;
  std::vector<double> elapsed_;
};

// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double> &x, const std::vector<double> &y);

} // namespace btgp::cli

#endif // BTGP_CLI_METRICS_HPP
