#include "metrics.hpp"

#include <cmath>

#include "btgp/error.hpp"
#include "btgp/gp.hpp"

namespace btgp::cli {

double rmse(const Eigen::VectorXd &a, const Eigen::VectorXd &b) {
  if (a.size() != b.size()) {
    throw DimensionError("rmse: length mismatch");
  }
  if (a.size() == 0) {
    return 0.0;
  }
  return std::sqrt((a - b).squaredNorm() / static_cast<double>(a.size()));
}

PredictiveMetrics predictive_metrics(const Eigen::VectorXd &y_std, const Eigen::VectorXd &mu_std,
                                     const Eigen::VectorXd &sigma2_std, double scale) {
  PredictiveMetrics m;
  m.n = y_std.size();
  if (m.n == 0) {
    return m;
  }
  m.nll = gaussian_nll(y_std, mu_std, sigma2_std).mean();
  m.rmse_standardized = rmse(y_std, mu_std);
  m.rmse = m.rmse_standardized * scale;
  return m;
}

PhaseTimer::PhaseTimer() : start_(Clock::now()), last_(start_) {}

void PhaseTimer::mark(const std::string &name) {
  const auto now = Clock::now();
  durations_.emplace_back(name, std::chrono::duration<double>(now - last_).count());
  elapsed_.push_back(std::chrono::duration<double>(now - start_).count());
  last_ = now;
}

nlohmann::json PhaseTimer::to_json() const {
  nlohmann::json out = nlohmann::json::array();
  for (std::size_t k = 0; k < durations_.size(); ++k) {
    out.push_back({{"phase", durations_[k].first},
                   {"seconds", durations_[k].second},
                   {"elapsed", elapsed_[k]}});
  }
  return out;
}

double loglog_slope(const std::vector<double> &x, const std::vector<double> &y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw DimensionError("loglog_slope: need at least two paired points");
  }
  const auto k = static_cast<Eigen::Index>(x.size());
  Eigen::VectorXd lx(k);
  Eigen::VectorXd ly(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    lx(i) = std::log(x[static_cast<std::size_t>(i)]);
    ly(i) = std::log(y[static_cast<std::size_t>(i)]);
  }
  const Eigen::ArrayXd cx = lx.array() - lx.mean();
  const Eigen::ArrayXd cy = ly.array() - ly.mean();
  return (cx * cy).sum() / cx.square().sum();
}

} // namespace btgp::cli
