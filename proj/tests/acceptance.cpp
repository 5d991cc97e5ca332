// Acceptance suite: one line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

#include <Eigen/Eigenvalues>
#include <nlohmann/json.hpp>

#include "btgp/btgp.hpp"
#include "commands.hpp"
#include "metrics.hpp"
#include "model_file.hpp"
#include "oracle.hpp"

namespace {

using namespace btgp;
using cli::Dataset;
using cli::ModelBundle;
using cli::TrainSettings;

// Pinned tolerances and budgets.
constexpr double kMatvecTol = 1e-10;
constexpr double kResidualTol = 1e-8;
constexpr double kLogdetTol = 1e-8;
constexpr double kSharedTol = 1e-12;
constexpr double kPsdTol = -1e-10;
constexpr double kGpTol = 1e-7;
constexpr double kGradTol = 1e-4;
constexpr double kFdStep = 1e-6;
constexpr double kSlopeMax = 1.25;
constexpr double kQRatioMax = 4.5;
constexpr int kEnsembleWinsNeeded = 7;
constexpr int kPrecisionWinsNeeded = 8;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Eigen::VectorXd random_simplex(std::mt19937_64 &rng, Index q, double zero_probability = 0.0) {
  std::exponential_distribution<double> e(1.0);
  std::bernoulli_distribution zero(zero_probability);
  Eigen::VectorXd w(q);
  for (Index i = 0; i < q; ++i) {
    w(i) = zero(rng) ? 0.0 : e(rng);
  }
  if (w.sum() == 0.0) {
    w(q - 1) = 1.0;
  }
  return w / w.sum();
}

Index uniform_index(std::mt19937_64 &rng, Index lo, Index hi) {
  return std::uniform_int_distribution<Index>(lo, hi)(rng);
}

// |got - want| / max(|want|, floor)
double relative(double got, double want, double floor) {
  return std::abs(got - want) / std::max(std::abs(want), floor);
}

double worst_relative(const Eigen::VectorXd &got, const Eigen::VectorXd &want, double floor) {
  double worst = 0.0;
  for (Index j = 0; j < got.size(); ++j) {
    worst = std::max(worst, relative(got(j), want(j), floor));
  }
  return worst;
}

KernelParams identity_params(const Eigen::VectorXd &w, double lambda) {
  KernelParams params;
  params.phi = Eigen::VectorXd::Zero(w.size());
  params.theta = Eigen::VectorXd::Ones(w.size());
  params.bit_order.resize(static_cast<std::size_t>(w.size()));
  std::iota(params.bit_order.begin(), params.bit_order.end(), Index{0});
  params.w = WeightVector(w);
  params.lambda = lambda;
  return params;
}

Outcome tree_kernel_values() {
  const WeightVector w(Eigen::Vector3d(0.3, 0.5, 0.2));
  const std::uint8_t x1[] = {0, 0, 1};
  const std::uint8_t x2[] = {1, 0, 1};
  const std::uint8_t x3[] = {0, 0, 0};
  const std::uint8_t x4[] = {0, 1, 1};
  const double got[] = {kernel_value(w, x1, x1), kernel_value(w, x1, x2),
                        kernel_value(w, x1, x3), kernel_value(w, x1, x4)};
  const double want[] = {1.0, 0.0, 0.8, 0.3};
  bool exact = true;
  std::string values;
  for (int k = 0; k < 4; ++k) {
    exact = exact && got[k] == want[k];
    values += (k ? ", " : "") + fmt(got[k]);
  }
  return {exact, "k = (" + values + ") vs (1, 0, 0.8, 0.3) exact"};
}

Outcome sros_matvec_oracle() {
  std::mt19937_64 rng(1001);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const Index n = uniform_index(rng, 1, 64);
    const Index m = uniform_index(rng, 1, 64);
    const Index q = uniform_index(rng, 1, 8);
    // One labelling over all n + m points so that rows and columns share cells.
    const auto joint = oracle::prefix_partitions(oracle::random_bits(rng, n + m, q));
    const PartitionMatrix P = joint.topRows(n);
    const PartitionMatrix Pp = joint.bottomRows(m);
    const Eigen::MatrixXd U = oracle::uniform_matrix(rng, n, q);
    const Eigen::MatrixXd Up = oracle::uniform_matrix(rng, m, q);
    const Eigen::VectorXd x = oracle::uniform_matrix(rng, m, 1);
    const Eigen::VectorXd got = lin_transform(P, Pp, U, Up, x);
    const Eigen::VectorXd want = oracle::dense_sros(P, Pp, U, Up) * x;
    const double scale = std::max(want.cwiseAbs().maxCoeff(), 1e-300);
    worst = std::max(worst, (got - want).cwiseAbs().maxCoeff() / scale);
  }
  return {worst <= kMatvecTol,
          "max rel. err " + fmt(worst) + " <= " + fmt(kMatvecTol) + " over 100 instances"};
}

Outcome inversion_oracle() {
  std::mt19937_64 rng(1002);
  double residual = 0.0;
  double logdet = 0.0;
  double shared = 0.0;
  for (int t = 0; t < 100; ++t) {
    const Index n = uniform_index(rng, 1, 64);
    const Index q = uniform_index(rng, 1, 8);
    const auto P = oracle::random_nested(rng, n, q);
    const Eigen::MatrixXd C = oracle::cell_constant(rng, P, 0.01, 1.0);
    const Eigen::MatrixXd U = oracle::uniform_matrix(rng, n, q);
    const auto inv = invert(P, C, U);
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
    const Eigen::MatrixXd A = I + oracle::dense_symmetric(P, C, U);
    const Eigen::MatrixXd Ainv = I + oracle::dense_symmetric(P, inv.C, inv.U);
    residual = std::max(residual, (Ainv * A - I).cwiseAbs().maxCoeff());
    logdet = std::max(logdet, std::abs(inv.logdet - oracle::logdet_spd(A)));

    const Eigen::VectorXd u = oracle::uniform_matrix(rng, n, 1);
    const Eigen::MatrixXd Uu = u.replicate(1, q);
    const auto general = invert(P, C, Uu);
    const auto fast = invert_shared_u(P, C, u);
    shared = std::max({shared, (general.C - fast.C).cwiseAbs().maxCoeff(),
                       (general.U - fast.U).cwiseAbs().maxCoeff(),
                       relative(fast.logdet, general.logdet, 1.0)});
  }
  const bool pass = residual <= kResidualTol && logdet <= kLogdetTol && shared <= kSharedTol;
  return {pass, "residual " + fmt(residual) + " <= " + fmt(kResidualTol) + ", logdet err " +
                    fmt(logdet) + " <= " + fmt(kLogdetTol) + ", shared-u diff " + fmt(shared) +
                    " <= " + fmt(kSharedTol)};
}

Outcome kernel_psd() {
  std::mt19937_64 rng(1003);
  double min_eig = std::numeric_limits<double>::infinity();
  for (int t = 0; t < 100; ++t) {
    const Index n = uniform_index(rng, 1, 64);
    const Index q = uniform_index(rng, 1, 16);
    const auto bits = oracle::random_bits(rng, n, q, 0.3 + 0.4 * (t % 3) / 2.0);
    const WeightVector w(random_simplex(rng, q, 0.3));
    const Eigen::MatrixXd K = to_dense(assemble_kernel(bits, w));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(K, Eigen::EigenvaluesOnly);
    min_eig = std::min(min_eig, eig.eigenvalues().minCoeff());
  }
  return {min_eig >= kPsdTol, "min eigenvalue " + fmt(min_eig) + " >= " + fmt(kPsdTol)};
}

Outcome gp_oracle() {
  std::mt19937_64 rng(1004);
  double nll_err = 0.0;
  double mu_err = 0.0;
  double var_err = 0.0;
  for (int seed = 0; seed < 100; ++seed) {
    const Index n = uniform_index(rng, 2, 64);
    const Index m = uniform_index(rng, 1, 16);
    const Index q = uniform_index(rng, 1, 8);
    const auto train_bits = oracle::random_bits(rng, n, q);
    BitMatrix test_bits = oracle::random_bits(rng, m, q);
    // Some test points coincide with training points.
    for (Index j = 0; j < m; j += 3) {
      test_bits.row(j) = train_bits.row(uniform_index(rng, 0, n - 1));
    }
    const Eigen::VectorXd y = oracle::uniform_matrix(rng, n, 1, -2.0, 2.0);
    const Eigen::VectorXd phi = oracle::uniform_matrix(rng, q, 1, -3.0, 0.0);
    const double lambda = std::exp(std::uniform_real_distribution<double>(std::log(1e-3), 0.0)(rng));
    const auto params = params_from_phi(phi, lambda);

    const auto train_perm = permute_bits(train_bits, params.bit_order);
    const auto test_perm = permute_bits(test_bits, params.bit_order);
    const Eigen::VectorXd &w = params.w.values();
    const auto model = fit_model(train_bits, y, params);
    nll_err = std::max(nll_err, relative(model.train_nll,
                                         oracle::gp_nll(oracle::kernel_matrix(w, train_perm, train_perm),
                                                        y, lambda),
                                         1.0));
    const auto got = predict(model, test_bits);
    const auto want = oracle::gp_predict(w, train_perm, test_perm, y, lambda);
    mu_err = std::max(mu_err, worst_relative(got.mu, want.mu, 1.0));
    var_err = std::max(var_err, worst_relative(got.sigma2, want.sigma2, 0.0));
  }
  const bool pass = nll_err <= kGpTol && mu_err <= kGpTol && var_err <= kGpTol;
  return {pass, "rel. err nll " + fmt(nll_err) + ", mu " + fmt(mu_err) + " (floor 1), sigma2 " +
                    fmt(var_err) + " (pure) <= " + fmt(kGpTol) + " over 100 seeds"};
}

Outcome gradient_checks() {
  std::mt19937_64 rng(1005);
  double w_err = 0.0;
  double phi_err = 0.0;
  for (int seed = 0; seed < 50; ++seed) {
    const Index n = uniform_index(rng, 2, 48);
    const Index q = uniform_index(rng, 1, 8);
    const auto bits = oracle::random_bits(rng, n, q);
    const Eigen::VectorXd y = oracle::uniform_matrix(rng, n, 1, -2.0, 2.0);
    const double lambda = std::uniform_real_distribution<double>(0.02, 1.0)(rng);

    const Eigen::VectorXd w = random_simplex(rng, q);
    const auto fit = nll(identity_params(w, lambda), bits, y);
    const Eigen::VectorXd gw = nll_grad_w(identity_params(w, lambda), fit);
    auto dense_nll = [&](const Eigen::VectorXd &v) {
      return oracle::gp_nll(oracle::kernel_matrix(v, bits, bits), y, lambda);
    };
    w_err = std::max(w_err, worst_relative(gw, oracle::central_difference(dense_nll, w, kFdStep), 1.0));

    // The sorting map is smooth away from ties in theta; keep entries apart.
    Eigen::VectorXd phi(q);
    do {
      phi = oracle::uniform_matrix(rng, q, 1, -2.5, 0.0);
      std::vector<double> sorted(phi.data(), phi.data() + q);
      std::sort(sorted.begin(), sorted.end());
      bool apart = true;
      for (std::size_t k = 1; k < sorted.size(); ++k) {
        apart = apart && sorted[k] - sorted[k - 1] > 1e-3;
      }
      if (apart) break;
    } while (true);
    const auto obj = nll_and_grad_phi(phi, lambda, bits, y);
    auto phi_nll = [&](const Eigen::VectorXd &x) { return nll(params_from_phi(x, lambda), bits, y).nll; };
    phi_err = std::max(phi_err,
                       worst_relative(obj.grad, oracle::central_difference(phi_nll, phi, kFdStep), 1.0));
  }
  const bool pass = w_err <= kGradTol && phi_err <= kGradTol;
  return {pass, "rel. err (floor 1) grad_w " + fmt(w_err) + ", grad_phi " + fmt(phi_err) +
                    " <= " + fmt(kGradTol) + " vs central FD h=1e-6, 50 seeds"};
}

Outcome runtime_scaling() {
  cli::BenchOptions opts;
  opts.log2_n_min = 10;
  opts.log2_n_max = 16;
  opts.dims = 4;
  opts.precision = 4;
  opts.reps = 3;
  opts.seed = 7;
  opts.q_sweep_n = Index{1} << 14;
  const auto r = cli::run_bench(opts);
  const bool pass = r.slope_nll_predict <= kSlopeMax && r.q_ratio_grad <= kQRatioMax;
  return {pass, "nll+predict log-log slope " + fmt(r.slope_nll_predict) + " <= " + fmt(kSlopeMax) +
                    " (n = 2^10..2^16), grad time ratio q 16->32 " + fmt(r.q_ratio_grad) +
                    " <= " + fmt(kQRatioMax)};
}

struct Problem {
  Dataset train;
  Dataset test;
};

Problem make_problem(std::mt19937_64 &rng, Index n_train, Index n_test, Index relevant,
                     Index irrelevant, double noise_sd,
                     const std::function<double(const Eigen::VectorXd &)> &f) {
  const Index d = relevant + irrelevant;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, noise_sd);
  auto draw = [&](Index n) {
    Dataset data;
    data.X.resize(n, d);
    data.y.resize(n);
    for (Index j = 0; j < n; ++j) {
      for (Index k = 0; k < d; ++k) {
        data.X(j, k) = u(rng);
      }
      data.y(j) = f(data.X.row(j).head(relevant).transpose()) + noise(rng);
    }
    for (Index k = 0; k < d; ++k) {
      data.features.push_back("x" + std::to_string(k));
    }
    data.target = "y";
    return data;
  };
  Problem p;
  p.train = draw(n_train);
  p.test = draw(n_test);
  return p;
}

double test_nll(const ModelBundle &model, const Dataset &test) {
  const auto pred = cli::predict_bundle(model, test.X);
  const Eigen::VectorXd y = model.standardizer.apply(test.y);
  if (pred.mixture) {
    return mixture_nll(*pred.mixture, y).mean();
  }
  return gaussian_nll(y, pred.standardized.mu, pred.standardized.sigma2).mean();
}

Outcome ensemble_robustness() {
  int wins = 0;
  std::string margins;
  for (int seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(2000 + static_cast<std::uint64_t>(seed));
    const auto p = make_problem(rng, 300, 300, 2, 50, 0.1, [](const Eigen::VectorXd &x) {
      return std::sin(3.0 * x(0)) + x(1) * x(1);
    });
    TrainSettings settings;
    settings.members = 20;
    settings.seed = static_cast<std::uint64_t>(seed);
    settings.workers = 1;
    settings.out_of_box = cli::OutOfBoxMode::joint_rescale;
    const auto ensemble = fit_bundle(p.train, settings, p.test.X);
    ModelBundle single = ensemble;
    single.ensemble.members = {ensemble.ensemble.members[ensemble.ensemble.best_member()]};
    single.ensemble.weights = Eigen::VectorXd::Ones(1);
    const double ens = test_nll(ensemble, p.test);
    const double best = test_nll(single, p.test);
    wins += ens <= best ? 1 : 0;
    margins += (seed ? " " : "") + fmt(best - ens);
  }
  return {wins >= kEnsembleWinsNeeded,
          std::to_string(wins) + "/10 seeds ensemble test NLL <= best member's (need " +
              std::to_string(kEnsembleWinsNeeded) + "); margins " + margins};
}

Outcome precision_trend() {
  int wins = 0;
  std::string values;
  for (int seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(3000 + static_cast<std::uint64_t>(seed));
    const auto p = make_problem(rng, 400, 400, 2, 0, 0.1, [](const Eigen::VectorXd &x) {
      return std::sin(2.0 * std::numbers::pi * x(0)) * std::cos(std::numbers::pi * x(1));
    });
    double previous = std::numeric_limits<double>::infinity();
    bool monotone = true;
    for (int precision : {2, 4, 8}) {
      TrainSettings settings;
      settings.precision = precision;
      settings.seed = static_cast<std::uint64_t>(seed);
      settings.out_of_box = cli::OutOfBoxMode::joint_rescale;
      const double v = test_nll(fit_bundle(p.train, settings, p.test.X), p.test);
      monotone = monotone && v <= previous;
      previous = v;
      if (seed == 0) values += (precision == 2 ? "" : ", ") + fmt(v);
    }
    wins += monotone ? 1 : 0;
  }
  return {wins >= kPrecisionWinsNeeded,
          std::to_string(wins) + "/10 seeds test NLL nonincreasing over p = 2, 4, 8 (need " +
              std::to_string(kPrecisionWinsNeeded) + "); seed 0: " + values};
}

Outcome ecdf_uniqueness() {
  namespace fs = std::filesystem;
  const fs::path path = fs::temp_directory_path() /
                        ("btgp_acceptance_" + std::to_string(std::random_device{}()) + ".csv");
  {
    std::mt19937_64 rng(4000);
    std::lognormal_distribution<double> skew(0.0, 1.5);
    std::ofstream out(path);
    out.precision(17);
    out << "a,b,c\n";
    for (int j = 0; j < 500; ++j) {
      out << skew(rng) << ',' << skew(rng) << ',' << skew(rng) << '\n';
    }
  }
  auto eda = [&](bool ecdf) {
    std::vector<std::string> args = {"eda", "--data", path.string(), "--features-only", "-p", "3",
                                     "--json"};
    if (ecdf) args.emplace_back("--ecdf");
    std::ostringstream out, err;
    if (cli::run(args, out, err) != cli::kOk) {
      throw std::runtime_error("eda failed: " + err.str());
    }
    return nlohmann::json::parse(out.str())["by_precision"][0]["pct_unique_bitstrings"].get<double>();
  };
  const double plain = eda(false);
  const double ecdf = eda(true);
  fs::remove(path);
  return {ecdf > plain, "unique bit strings at p=3: " + fmt(ecdf) + "% with --ecdf > " +
                            fmt(plain) + "% without"};
}

Outcome model_round_trip() {
  namespace fs = std::filesystem;
  std::mt19937_64 rng(5000);
  const auto p = make_problem(rng, 120, 40, 3, 0, 0.1, [](const Eigen::VectorXd &x) {
    return x(0) - 2.0 * x(1) * x(2);
  });
  Dataset test = p.test;
  test.X.row(0).setConstant(5.0); // out of the box
  bool identical = true;
  for (int members : {1, 3}) {
    TrainSettings settings;
    settings.members = members;
    settings.inits = 9;
    settings.max_iterations = 50;
    settings.workers = 1;
    const auto model = fit_bundle(p.train, settings);
    const fs::path path = fs::temp_directory_path() /
                          ("btgp_acceptance_" + std::to_string(std::random_device{}()) + ".bin");
    cli::save_model(model, path);
    const auto loaded = cli::load_model(path);
    fs::remove(path);
    const auto a = cli::predict_bundle(model, test.X);
    const auto b = cli::predict_bundle(loaded, test.X);
    identical = identical && a.output.mu == b.output.mu && a.output.sigma2 == b.output.sigma2 &&
                a.out_of_box == b.out_of_box;
  }
  return {identical, std::string("predictions after save/load ") +
                         (identical ? "bit-identical" : "differ") + " (single and 3-member)"};
}

struct Criterion {
  const char *name;
  double budget_seconds;
  Outcome (*check)();
};

} // namespace

int main() {
  const Criterion criteria[] = {
      {"tree_kernel_values", 0.001, tree_kernel_values},
      {"sros_matvec_oracle", 5, sros_matvec_oracle},
      {"inversion_logdet_oracle", 10, inversion_oracle},
      {"kernel_psd", 10, kernel_psd},
      {"gp_oracle_equivalence", 30, gp_oracle},
      {"gradient_checks", 30, gradient_checks},
      {"runtime_scaling", 300, runtime_scaling},
      {"ensemble_robustness", 600, ensemble_robustness},
      {"precision_trend", 300, precision_trend},
      {"ecdf_uniqueness", 60, ecdf_uniqueness},
      {"model_round_trip", 1, model_round_trip},
  };
  int failed = 0;
  int number = 0;
  for (const auto &c : criteria) {
    ++number;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = c.check();
    } catch (const std::exception &e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    const double elapsed = seconds_since(t0);
    const bool in_time = elapsed <= c.budget_seconds;
    const bool pass = outcome.pass && in_time;
    failed += pass ? 0 : 1;
    std::cout << (pass ? "[PASS] " : "[FAIL] ") << number << ". " << c.name << ": "
              << outcome.detail << "; " << fmt(elapsed) << " s"
              << (in_time ? " <= " : " > ") << fmt(c.budget_seconds) << " s budget" << std::endl;
  }
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed")
            << std::endl;
  return failed == 0 ? 0 : 1;
}
