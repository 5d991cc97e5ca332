#include "btgp/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <thread>

#include "btgp/error.hpp"

namespace btgp {

Eigen::VectorXd initial_weights(Index q, std::optional<double> last_bit_weight) {
  if (q < 1) {
    throw PreconditionError("initial_weights: q must be >= 1");
  }
  if (!last_bit_weight || q == 1) {
    return Eigen::VectorXd::Constant(q, 1.0 / static_cast<double>(q));
  }
  const double last = *last_bit_weight;
  if (!(last > 0.0 && last < 1.0)) {
    throw PreconditionError("initial_weights: last-bit weight must be in (0, 1)");
  }
  Eigen::VectorXd w = Eigen::VectorXd::Constant(q, (1.0 - last) / static_cast<double>(q - 1));
  w(q - 1) = last;
  return w;
}

namespace {

template <typename Task>
void run_parallel(std::size_t count, int workers, Task &&task) {
  std::size_t threads = workers > 0 ? static_cast<std::size_t>(workers)
                                    : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, count);
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) {
      task(i);
    }
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        task(i);
      }
    });
  }
}

} // namespace

std::vector<Initialization> ensemble_initializations(const BitMatrix &train_bits,
                                                     const Eigen::VectorXd &y,
                                                     const EnsembleConfig &cfg) {
  const Index q = train_bits.cols();
  const Index n = train_bits.rows();
  const double lambda =
      cfg.train.lambda > 0.0 ? cfg.train.lambda : 1.0 / static_cast<double>(n);
  std::mt19937_64 rng(cfg.seed);
  std::vector<Initialization> inits;
  inits.reserve(static_cast<std::size_t>(cfg.bit_orders) * cfg.last_bit_weights.size());
  std::vector<Index> order(static_cast<std::size_t>(q));
  for (int b = 0; b < cfg.bit_orders; ++b) {
    std::iota(order.begin(), order.end(), Index{0});
    std::shuffle(order.begin(), order.end(), rng);
    if (b == 0 && cfg.identity_first) {
      std::iota(order.begin(), order.end(), Index{0});
    }
    for (const auto &last : cfg.last_bit_weights) {
      inits.push_back({phi_from_weights(initial_weights(q, last), order), 0.0});
    }
  }
  run_parallel(inits.size(), cfg.workers, [&](std::size_t i) {
    try {
      inits[i].nll = nll(params_from_phi(inits[i].phi, lambda), train_bits, y).nll;
    } catch (const NumericalError &) {
      inits[i].nll = std::numeric_limits<double>::infinity();
    }
  });
  return inits;
}

std::vector<std::size_t> boltzmann_sample(const std::vector<Initialization> &inits,
                                          Index n, int count, double temperature,
                                          std::uint64_t seed) {
  if (!(temperature > 0.0)) {
    throw PreconditionError("boltzmann_sample: temperature must be > 0");
  }
  std::vector<std::size_t> pool;
  std::vector<double> logits;
  for (std::size_t i = 0; i < inits.size(); ++i) {
    if (std::isfinite(inits[i].nll)) {
      pool.push_back(i);
      logits.push_back(-(inits[i].nll / static_cast<double>(n)) / temperature);
    }
  }
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> chosen;
  while (static_cast<int>(chosen.size()) < count && !pool.empty()) {
    const double top = *std::max_element(logits.begin(), logits.end());
    std::vector<double> probs(logits.size());
    std::transform(logits.begin(), logits.end(), probs.begin(),
                   [top](double l) { return std::exp(l - top); });
    std::discrete_distribution<std::size_t> draw(probs.begin(), probs.end());
    const std::size_t k = draw(rng);
    chosen.push_back(pool[k]);
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(k));
    logits.erase(logits.begin() + static_cast<std::ptrdiff_t>(k));
  }
  return chosen;
}

Eigen::VectorXd mixture_weights(const Eigen::VectorXd &per_point_nll,
                                double temperature) {
  if (!(temperature > 0.0)) {
    throw PreconditionError("mixture_weights: temperature must be > 0");
  }
  if (per_point_nll.size() == 0) {
    return {};
  }
  const Eigen::ArrayXd logits = -per_point_nll.array() / temperature;
  const Eigen::ArrayXd e = (logits - logits.maxCoeff()).exp();
  return (e / e.sum()).matrix();
}

std::size_t EnsembleModel::best_member() const {
  if (members.empty()) {
    throw PreconditionError("EnsembleModel: no members");
  }
  std::size_t best = 0;
  for (std::size_t k = 1; k < members.size(); ++k) {
    if (members[k].train_nll < members[best].train_nll) {
      best = k;
    }
  }
  return best;
}

void reweight(EnsembleModel &ensemble, double temperature) {
  Eigen::VectorXd per_point(static_cast<Index>(ensemble.members.size()));
  for (std::size_t k = 0; k < ensemble.members.size(); ++k) {
    per_point(static_cast<Index>(k)) = ensemble.members[k].train_nll_per_point();
  }
  ensemble.weights = mixture_weights(per_point, temperature);
  ensemble.temperature = temperature;
}

EnsembleModel train_ensemble(const BitMatrix &train_bits, const Eigen::VectorXd &y,
                             const EnsembleConfig &cfg) {
  if (cfg.members < 1) {
    throw PreconditionError("train_ensemble: need at least one member");
  }
  const auto inits = ensemble_initializations(train_bits, y, cfg);
  const auto chosen = boltzmann_sample(inits, train_bits.rows(), cfg.members,
                                       cfg.sampling_temperature, cfg.seed);
  std::vector<std::optional<TrainedModel>> trained(chosen.size());
  std::vector<std::string> errors(chosen.size());
  run_parallel(chosen.size(), cfg.workers, [&](std::size_t k) {
    try {
      trained[k] = train(train_bits, y, inits[chosen[k]].phi, cfg.train);
    } catch (const std::exception &e) {
      errors[k] = e.what();
    }
  });

  EnsembleModel ensemble;
  for (std::size_t k = 0; k < trained.size(); ++k) {
    if (trained[k]) {
      if (trained[k]->status == TrainStatus::diverged) {
        ensemble.warnings.push_back("member " + std::to_string(k) +
                                    ": optimiser diverged, kept best iterate");
      }
      ensemble.members.push_back(std::move(*trained[k]));
    } else {
      ensemble.warnings.push_back("member " + std::to_string(k) +
                                  " skipped: " + errors[k]);
    }
  }
  if (ensemble.members.empty()) {
    throw NumericalError("train_ensemble: every member failed", -1, -1);
  }
  reweight(ensemble, cfg.temperature);
  return ensemble;
}

PredictiveOutput mix(const std::vector<PredictiveOutput> &members,
                     const Eigen::VectorXd &weights) {
  if (members.empty() || static_cast<Index>(members.size()) != weights.size()) {
    throw DimensionError("mix: member/weight count mismatch");
  }
  const Index m = members.front().mu.size();
  PredictiveOutput out;
  out.mu = Eigen::VectorXd::Zero(m);
  for (std::size_t k = 0; k < members.size(); ++k) {
    out.mu += weights(static_cast<Index>(k)) * members[k].mu;
  }
  // E[var] + Var[mean]
  out.sigma2 = Eigen::VectorXd::Zero(m);
  for (std::size_t k = 0; k < members.size(); ++k) {
    out.sigma2 += weights(static_cast<Index>(k)) *
                  (members[k].sigma2.array() + (members[k].mu - out.mu).array().square())
                      .matrix();
  }
  return out;
}

namespace {

template <typename PredictFn>
MixturePrediction predict_members(const EnsembleModel &ensemble, PredictFn &&fn) {
  MixturePrediction out;
  out.weights = ensemble.weights;
  out.members.reserve(ensemble.members.size());
  for (const auto &member : ensemble.members) {
    out.members.push_back(fn(member));
  }
  out.mixture = mix(out.members, out.weights);
  return out;
}

} // namespace

MixturePrediction ensemble_predict(const EnsembleModel &ensemble,
                                   const BitMatrix &test_bits,
                                   const std::vector<bool> &out_of_box) {
  return predict_members(ensemble, [&](const TrainedModel &member) {
    return predict(member, test_bits, out_of_box);
  });
}

MixturePrediction ensemble_predict_standardized(const EnsembleModel &ensemble,
                                                const BitMatrix &test_bits,
                                                const std::vector<bool> &out_of_box) {
  return predict_members(ensemble, [&](const TrainedModel &member) {
    return predict_standardized(member, test_bits, out_of_box);
  });
}

Eigen::VectorXd mixture_nll(const MixturePrediction &prediction,
                            const Eigen::VectorXd &y) {
  const Index m = y.size();
  const auto K = static_cast<Index>(prediction.members.size());
  Eigen::MatrixXd log_terms(m, K);
  for (Index k = 0; k < K; ++k) {
    const auto &member = prediction.members[static_cast<std::size_t>(k)];
    log_terms.col(k) = -gaussian_nll(y, member.mu, member.sigma2);
    log_terms.col(k).array() += std::log(prediction.weights(k));
  }
  Eigen::VectorXd out(m);
  for (Index j = 0; j < m; ++j) {
    const double top = log_terms.row(j).maxCoeff();
    out(j) = -(top + std::log((log_terms.row(j).array() - top).exp().sum()));
  }
  return out;
}

} // namespace btgp
