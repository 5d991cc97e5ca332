#ifndef BTGP_GP_HPP
#define BTGP_GP_HPP

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "btgp/encoding.hpp"
#include "btgp/kernel.hpp"
#include "btgp/optimize.hpp"
#include "btgp/sros.hpp"

namespace btgp {

// Zero-mean, unit-variance target scaling. The GP prior mean is zero on the
// standardized scale.
struct Standardizer {
  double mean = 0.0;
  double scale = 1.0;

  static Standardizer fit(const Eigen::VectorXd &y);
  Eigen::VectorXd apply(const Eigen::VectorXd &y) const;
  Eigen::VectorXd invert(const Eigen::VectorXd &y) const;
};

// Training likelihood together with the pieces reused by the gradient and by
// prediction. (K + lambda I)^{-1} = lambda^{-1} I + L(P, Cinv, Uinv).
struct NllResult {
  double nll = 0.0;
  Eigen::VectorXd z; // Woodbury vector (K + lambda I)^{-1} y
  double logdet = 0.0; // log|K + lambda I|
  PartitionMatrix P;
  Eigen::MatrixXd Cinv;
  Eigen::MatrixXd Uinv;
};

/*
 * Negative log marginal likelihood of standardized targets y under the
 * binary tree kernel. `train_bits` are in base order; params.bit_order is
 * applied here. O(n q log n).
 */
NllResult nll(const KernelParams &params, const BitMatrix &train_bits,
              const Eigen::VectorXd &y);

/*
 * d nll / d w from a completed nll() evaluation, O(n q^2):
 *   0.5 * (-z^T L(P_i, 1, 1) z + n / lambda
 *          + sum_j trace_part(P_max(i,j), Cinv_j, Uinv_j)).
 */
Eigen::VectorXd nll_grad_w(const KernelParams &params, const NllResult &fit);

// nll value and d nll / d phi. When theta has ties the gradient is taken at
// phi plus a fixed-seed 1e-10 jitter; `ties` reports that event.
struct PhiObjective {
  double nll = 0.0;
  Eigen::VectorXd grad;
  bool ties = false;
};

PhiObjective nll_and_grad_phi(const Eigen::VectorXd &phi, double lambda,
                              const BitMatrix &train_bits,
                              const Eigen::VectorXd &y);

enum class TrainStatus { converged, max_iterations, diverged };

std::string to_string(TrainStatus status);

struct TrainOptions {
  // <= 0 selects 1 / n.
  double lambda = 0.0;
  BfgsOptions bfgs;
};

struct TrainedModel {
  std::optional<EncodingConfig> encoding;
  KernelParams params;
  BitMatrix train_bits; // base order
  Standardizer standardizer;
  PartitionMatrix P;
  Eigen::MatrixXd Cinv;
  Eigen::MatrixXd Uinv;
  Eigen::VectorXd z;
  double logdet = 0.0;
  double train_nll = 0.0;
  TrainStatus status = TrainStatus::converged;
  int iterations = 0;
  int tie_events = 0;
  std::vector<double> nll_history;

  Index size() const { return train_bits.rows(); }
  Index bits() const { return train_bits.cols(); }
  double train_nll_per_point() const {
    return train_nll / static_cast<double>(size());
  }
};

// Builds the cached fit for fixed parameters (no optimisation).
TrainedModel fit_model(const BitMatrix &train_bits, const Eigen::VectorXd &y,
                       const KernelParams &params);

/*
 * Minimise nll over phi with BFGS, starting at phi0. `y` are standardized
 * targets. Divergence returns the best iterate with status `diverged`.
 */
TrainedModel train(const BitMatrix &train_bits, const Eigen::VectorXd &y,
                   const Eigen::VectorXd &phi0, const TrainOptions &opts = {});

struct PredictiveOutput {
  Eigen::VectorXd mu;
  Eigen::VectorXd sigma2;
};

/*
 * Predictive mean and variance at test points (base-order bits). Outputs are
 * in original target units when the model's standardizer is set. Points
 * flagged out of box get the prior: mu = 0 and sigma2 = 1 + lambda on the
 * standardized scale.
 */
PredictiveOutput predict(const TrainedModel &model, const BitMatrix &test_bits,
                         const std::vector<bool> &out_of_box = {});

// Standardized-scale prediction (no de-standardization).
PredictiveOutput predict_standardized(const TrainedModel &model,
                                      const BitMatrix &test_bits,
                                      const std::vector<bool> &out_of_box = {});

// -log N(y; mu, sigma2), elementwise.
Eigen::VectorXd gaussian_nll(const Eigen::VectorXd &y, const Eigen::VectorXd &mu,
                             const Eigen::VectorXd &sigma2);

} // namespace btgp

#endif // BTGP_GP_HPP
