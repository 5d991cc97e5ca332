#ifndef BTGP_ENSEMBLE_HPP
#define BTGP_ENSEMBLE_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "btgp/gp.hpp"

namespace btgp {

struct EnsembleConfig {
  // Random bit orders drawn for initialisation.
  int bit_orders = 160;
  // Replace the first random order by the identity (the encoding's order).
  bool identity_first = false;
  // Weight initialisations per bit order: nullopt is uniform, a value v
  // puts weight v on the deepest bit and spreads 1 - v over the rest.
  std::vector<std::optional<double>> last_bit_weights = {std::nullopt, 0.5, 0.9};
  // Initialisations kept (Boltzmann-sampled) and trained.
  int members = 20;
  // Softmax temperature on per-point training NLL for the mixture weights.
  double temperature = 0.01;
  // Temperature on per-point NLL for sampling initialisations.
  double sampling_temperature = 0.01;
  std::uint64_t seed = 0;
  TrainOptions train;
  // Member training threads; 0 uses the hardware concurrency.
  int workers = 0;
};

struct Initialization {
  Eigen::VectorXd phi;
  double nll = 0.0;
};

// Sorted weight vector for one of the configured initial shapes.
Eigen::VectorXd initial_weights(Index q, std::optional<double> last_bit_weight);

// All bit_orders x last_bit_weights initialisations with their training NLL.
// Initialisations whose NLL cannot be evaluated get +inf.
std::vector<Initialization> ensemble_initializations(const BitMatrix &train_bits,
                                                     const Eigen::VectorXd &y,
                                                     const EnsembleConfig &cfg);

// Draw `count` distinct indices with probability proportional to
// exp(-(nll / n) / temperature), sequentially without replacement.
std::vector<std::size_t> boltzmann_sample(const std::vector<Initialization> &inits,
                                          Index n, int count, double temperature,
                                          std::uint64_t seed);

// softmax(-per_point_nll / temperature)
Eigen::VectorXd mixture_weights(const Eigen::VectorXd &per_point_nll,
                                double temperature);

struct EnsembleModel {
  std::vector<TrainedModel> members;
  Eigen::VectorXd weights;
  double temperature = 0.01;
  std::vector<std::string> warnings;

  // Member with the lowest training NLL.
  std::size_t best_member() const;
};

EnsembleModel train_ensemble(const BitMatrix &train_bits, const Eigen::VectorXd &y,
                             const EnsembleConfig &cfg);

// Recompute mixture weights from the members' training NLL.
void reweight(EnsembleModel &ensemble, double temperature);

struct MixturePrediction {
  // Mixture mean and exact mixture variance.
  PredictiveOutput mixture;
  std::vector<PredictiveOutput> members;
  Eigen::VectorXd weights;
};

MixturePrediction ensemble_predict(const EnsembleModel &ensemble,
                                   const BitMatrix &test_bits,
                                   const std::vector<bool> &out_of_box = {});

MixturePrediction ensemble_predict_standardized(const EnsembleModel &ensemble,
                                                const BitMatrix &test_bits,
                                                const std::vector<bool> &out_of_box = {});

// Mixture moments from member outputs and weights.
PredictiveOutput mix(const std::vector<PredictiveOutput> &members,
                     const Eigen::VectorXd &weights);

// -log sum_k weight_k N(y; mu_k, sigma2_k), elementwise.
Eigen::VectorXd mixture_nll(const MixturePrediction &prediction,
                            const Eigen::VectorXd &y);

} // namespace btgp

#endif // BTGP_ENSEMBLE_HPP
