#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>
#include <set>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "btgp/btgp.hpp"
#include "metrics.hpp"

namespace btgp::cli {

using nlohmann::json;

ModelBundle fit_bundle(const Dataset &train, const TrainSettings &settings,
                       const Eigen::MatrixXd &box_rows) {
  const Index n = train.X.rows();
  const Index d = train.X.cols();
  if (n < 2) {
    throw DataError("need at least 2 training rows, got " + std::to_string(n));
  }
  if (d < 1) {
    throw DataError("dataset has no feature columns");
  }
  if (box_rows.size() > 0 && box_rows.cols() != d) {
    throw DimensionError("box rows have " + std::to_string(box_rows.cols()) +
                         " features, training data has " + std::to_string(d));
  }
  const int precision = settings.precision ? *settings.precision : default_precision(d);

  ModelBundle bundle;
  bundle.features = train.features;
  bundle.target = train.target;
  bundle.out_of_box = settings.out_of_box;
  if (settings.out_of_box == OutOfBoxMode::joint_rescale && box_rows.rows() > 0) {
    Eigen::MatrixXd all(n + box_rows.rows(), d);
    all << train.X, box_rows;
    bundle.encoding = fit_encoding(all, precision, settings.ecdf);
  } else {
    bundle.encoding = fit_encoding(train.X, precision, settings.ecdf);
  }
  const auto bits = encode(train.X, bundle.encoding).bits;
  bundle.standardizer = Standardizer::fit(train.y);
  const Eigen::VectorXd y = bundle.standardizer.apply(train.y);

  EnsembleConfig cfg;
  cfg.members = std::max(1, settings.members);
  const int inits = settings.inits > 0 ? settings.inits : (cfg.members == 1 ? 3 : 480);
  const auto shapes = static_cast<int>(cfg.last_bit_weights.size());
  cfg.bit_orders = (inits + shapes - 1) / shapes;
  cfg.identity_first = cfg.members == 1;
  cfg.temperature = settings.temperature;
  cfg.sampling_temperature = settings.sampling_temperature;
  cfg.seed = settings.seed;
  cfg.workers = settings.workers;
  cfg.train.lambda = settings.lambda;
  cfg.train.bfgs.max_iterations = settings.max_iterations;
  bundle.ensemble = train_ensemble(bits, y, cfg);
  for (auto &member : bundle.ensemble.members) {
    member.encoding = bundle.encoding;
    member.standardizer = bundle.standardizer;
  }
  return bundle;
}

EdaReport uniqueness_report(const Eigen::MatrixXd &X, const std::vector<int> &precisions,
                            bool ecdf, double threshold) {
  EdaReport report;
  report.rows = X.rows();
  report.ecdf = ecdf;
  if (X.rows() == 0) {
    return report;
  }
  for (int p : precisions) {
    const auto cfg = fit_encoding(X, p, ecdf);
    const auto stats = uniqueness_stats(X, encode(X, cfg).bits);
    report.pct_unique_rows = stats.pct_unique_rows;
    report.by_precision.push_back(
        {p, stats.pct_unique_bitstrings,
         stats.pct_unique_rows - stats.pct_unique_bitstrings > threshold});
  }
  return report;
}

namespace {

using Clock = std::chrono::steady_clock;

template <typename F> double best_time(int reps, F &&f) {
  double best = std::numeric_limits<double>::infinity();
  for (int r = 0; r < std::max(1, reps); ++r) {
    const auto t0 = Clock::now();
    f();
    best = std::min(best, std::chrono::duration<double>(Clock::now() - t0).count());
  }
  return best;
}

BenchRow bench_point(Index n, Index dims, int precision, int reps, std::uint64_t seed) {
  std::mt19937_64 rng(seed + static_cast<std::uint64_t>(n) * 131 +
                      static_cast<std::uint64_t>(precision));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 0.1);
  const Index m = std::max<Index>(1, n / 8);
  Eigen::MatrixXd X(n + m, dims);
  for (Index j = 0; j < X.size(); ++j) X.data()[j] = unif(rng);
  Eigen::VectorXd y(n);
  for (Index j = 0; j < n; ++j) y(j) = std::sin(4.0 * X.row(j).sum()) + noise(rng);
  y = Standardizer::fit(y).apply(y);

  const Eigen::MatrixXd X_train = X.topRows(n);
  const auto cfg = fit_encoding(X_train, precision, false);
  Eigen::VectorXd phi(cfg.bits());
  for (Index i = 0; i < phi.size(); ++i) phi(i) = -2.0 * unif(rng);
  const auto params = params_from_phi(phi, 1.0 / static_cast<double>(n));

  BenchRow row;
  row.n = n;
  row.q = cfg.bits();
  BitMatrix bits;
  row.build = best_time(reps, [&] {
    bits = encode(X_train, cfg).bits;
    build_partitions(permute_bits(bits, params.bit_order));
  });
  NllResult fit;
  row.nll = best_time(reps, [&] { fit = nll(params, bits, y); });
  row.grad = best_time(reps, [&] { nll_grad_w(params, fit); });
  const auto model = fit_model(bits, y, params);
  const auto test = encode(Eigen::MatrixXd(X.bottomRows(m)), cfg);
  row.predict =
      best_time(reps, [&] { predict_standardized(model, test.bits, test.out_of_box); });
  return row;
}

} // namespace

BenchResult run_bench(const BenchOptions &options) {
  if (options.log2_n_min < 1 || options.log2_n_max < options.log2_n_min ||
      options.log2_n_max > 30) {
    throw PreconditionError("bench: need 1 <= log2 n min <= log2 n max <= 30");
  }
  BenchResult result;
  std::vector<double> ns, build, nll_t, grad, predict, nll_predict;
  for (int e = options.log2_n_min; e <= options.log2_n_max; ++e) {
    const auto row = bench_point(Index{1} << e, options.dims, options.precision, options.reps,
                                 options.seed);
    result.n_sweep.push_back(row);
    ns.push_back(static_cast<double>(row.n));
    build.push_back(row.build);
    nll_t.push_back(row.nll);
    grad.push_back(row.grad);
    predict.push_back(row.predict);
    nll_predict.push_back(row.nll + row.predict);
  }
  if (ns.size() >= 2) {
    result.slope_build = loglog_slope(ns, build);
    result.slope_nll = loglog_slope(ns, nll_t);
    result.slope_grad = loglog_slope(ns, grad);
    result.slope_predict = loglog_slope(ns, predict);
    result.slope_nll_predict = loglog_slope(ns, nll_predict);
  }
  if (options.q_sweep_n > 0) {
    for (int p : {options.precision, 2 * options.precision}) {
      result.q_sweep.push_back(
          bench_point(options.q_sweep_n, options.dims, p, options.reps, options.seed));
    }
    result.q_ratio_nll = result.q_sweep[1].nll / result.q_sweep[0].nll;
    result.q_ratio_grad = result.q_sweep[1].grad / result.q_sweep[0].grad;
  }
  return result;
}

namespace {

json split_json(const std::optional<double> &fraction, std::uint64_t seed, Index train_rows,
                Index test_rows) {
  if (!fraction) {
    return nullptr;
  }
  return {{"train_fraction", *fraction},
          {"seed", seed},
          {"train_rows", train_rows},
          {"test_rows", test_rows}};
}

Table drop_column(const Table &table, const std::string &name) {
  const auto it = std::find(table.header.begin(), table.header.end(), name);
  if (it == table.header.end()) {
    return table;
  }
  const auto col = static_cast<Index>(it - table.header.begin());
  Table out;
  out.header = table.header;
  out.header.erase(out.header.begin() + col);
  out.values.resize(table.values.rows(), table.values.cols() - 1);
  out.values << table.values.leftCols(col), table.values.rightCols(table.values.cols() - col - 1);
  return out;
}

void print_timings(std::ostream &out, const PhaseTimer &timer) {
  out << "timings:";
  for (const auto &[name, seconds] : timer.durations()) {
    out << ' ' << name << ' ' << std::setprecision(3) << seconds << 's';
  }
  out << '\n';
}

struct TrainArgs {
  std::string data;
  std::string target;
  std::string out;
  std::string split;
  std::string box_data;
  std::string out_of_box = "zero";
  int precision = 0;
  bool json = false;
  TrainSettings settings;
};

int cmd_train(const TrainArgs &args, std::ostream &out, std::ostream &err) {
  PhaseTimer timer;
  auto settings = args.settings;
  if (args.precision != 0) {
    settings.precision = args.precision;
  }
  settings.out_of_box =
      args.out_of_box == "joint-rescale" ? OutOfBoxMode::joint_rescale : OutOfBoxMode::zero;
  const auto table = read_csv(std::filesystem::path(args.data));
  auto data = split_target(table, args.target.empty() ? std::nullopt
                                                      : std::optional<std::string>(args.target));
  std::optional<double> fraction;
  Index test_rows = 0;
  Eigen::MatrixXd box_rows;
  if (!args.split.empty()) {
    fraction = parse_split(args.split);
    const auto split = make_split(data.X.rows(), *fraction, settings.seed);
    test_rows = static_cast<Index>(split.test.size());
    box_rows = data.X(split.test, Eigen::all);
    data = take_rows(data, split.train);
  }
  if (!args.box_data.empty()) {
    const auto extra = select_features(
        drop_column(read_csv(std::filesystem::path(args.box_data)), data.target), data.features);
    Eigen::MatrixXd all(box_rows.rows() + extra.rows(), data.X.cols());
    all << box_rows, extra;
    box_rows = std::move(all);
  }
  timer.mark("load");

  const auto bundle = fit_bundle(data, settings, box_rows);
  timer.mark("train");
  save_model(bundle, std::filesystem::path(args.out));
  timer.mark("save");

  for (const auto &w : bundle.ensemble.warnings) {
    err << "warning: " << w << '\n';
  }
  if (bundle.encoding.has_degenerate()) {
    err << "warning: constant feature column(s) carry no information:";
    for (std::size_t d = 0; d < bundle.encoding.degenerate.size(); ++d) {
      if (bundle.encoding.degenerate[d]) err << ' ' << bundle.features[d];
    }
    err << '\n';
  }
  const auto &best = bundle.ensemble.members[bundle.ensemble.best_member()];
  const Index n = data.X.rows();
  if (args.json) {
    json record = {{"command", "train"},
                   {"n", n},
                   {"d", bundle.encoding.dims},
                   {"precision", bundle.encoding.precision},
                   {"bits", bundle.encoding.bits()},
                   {"ecdf", bundle.encoding.use_ecdf},
                   {"lambda", best.params.lambda},
                   {"members", bundle.ensemble.members.size()},
                   {"train_nll", best.train_nll},
                   {"train_nll_per_point", best.train_nll_per_point()},
                   {"status", to_string(best.status)},
                   {"iterations", best.iterations},
                   {"seed", settings.seed},
                   {"split", split_json(fraction, settings.seed, n, test_rows)},
                   {"model", args.out},
                   {"timings", timer.to_json()}};
    out << record.dump() << '\n';
  } else {
    out << std::setprecision(10);
    out << "model: "
        << (bundle.is_ensemble()
                ? "ensemble of " + std::to_string(bundle.ensemble.members.size()) + " members"
                : std::string("single"))
        << '\n';
    out << "rows: " << n << "  features: " << bundle.encoding.dims
        << "  precision: " << bundle.encoding.precision << "  bits: " << bundle.encoding.bits()
        << "  lambda: " << best.params.lambda << '\n';
    out << "train NLL: " << best.train_nll << " (" << best.train_nll_per_point()
        << " per point)\n";
    out << "status: " << to_string(best.status) << "  iterations: " << best.iterations << '\n';
    print_timings(out, timer);
    out << "saved: " << args.out << '\n';
  }
  return kOk;
}

int cmd_predict(const std::string &model_path, const std::string &data_path,
                const std::string &out_path, std::ostream &out) {
  const auto model = load_model(std::filesystem::path(model_path));
  const auto table = read_csv(std::filesystem::path(data_path));
  const auto X = select_features(drop_column(table, model.target), model.features);
  const auto pred = predict_bundle(model, X);

  std::ofstream file;
  if (!out_path.empty()) {
    file.open(out_path);
    if (!file) {
      throw DataError("cannot write " + out_path);
    }
  }
  std::ostream &dst = out_path.empty() ? out : file;
  dst << std::setprecision(17);
  dst << "mu,sigma2,out_of_box\n";
  for (Index j = 0; j < X.rows(); ++j) {
    dst << pred.output.mu(j) << ',' << pred.output.sigma2(j) << ','
        << (pred.out_of_box[static_cast<std::size_t>(j)] ? "true" : "false") << '\n';
  }
  return kOk;
}

struct EvalArgs {
  std::string model;
  std::string data;
  std::string target;
  std::string split;
  std::uint64_t seed = 0;
  bool json = false;
};

int cmd_eval(const EvalArgs &args, std::ostream &out) {
  PhaseTimer timer;
  const auto model = load_model(std::filesystem::path(args.model));
  const auto table = read_csv(std::filesystem::path(args.data));
  const std::string target = args.target.empty() ? model.target : args.target;
  if (std::find(table.header.begin(), table.header.end(), target) == table.header.end()) {
    throw DataError("target column '" + target + "' missing from " + args.data);
  }
  Dataset data;
  data.target = target;
  data.features = model.features;
  data.y = table.values.col(
      std::find(table.header.begin(), table.header.end(), target) - table.header.begin());
  data.X = select_features(drop_column(table, target), model.features);
  std::optional<double> fraction;
  Index train_rows = 0;
  if (!args.split.empty()) {
    fraction = parse_split(args.split);
    const auto split = make_split(data.X.rows(), *fraction, args.seed);
    train_rows = static_cast<Index>(split.train.size());
    data = take_rows(data, split.test);
  }
  timer.mark("load");

  const auto pred = predict_bundle(model, data.X);
  timer.mark("predict");
  const Eigen::VectorXd y_std = model.standardizer.apply(data.y);
  auto metrics = predictive_metrics(y_std, pred.standardized.mu, pred.standardized.sigma2,
                                    model.standardizer.scale);
  // An ensemble predicts a Gaussian mixture; score its density directly.
  if (pred.mixture && metrics.n > 0) {
    metrics.nll = mixture_nll(*pred.mixture, y_std).mean();
  }
  // Marginal likelihood of the evaluation targets under the best member.
  double marginal = std::numeric_limits<double>::quiet_NaN();
  if (data.X.rows() > 0) {
    const auto &best = model.ensemble.members[model.ensemble.best_member()];
    const auto bits = encode(data.X, model.encoding).bits;
    marginal = nll(best.params, bits, y_std).nll / static_cast<double>(data.X.rows());
  }
  timer.mark("metrics");
  const auto oob = std::count(pred.out_of_box.begin(), pred.out_of_box.end(), true);

  if (args.json) {
    json record = {{"command", "eval"},
                   {"n", metrics.n},
                   {"nll", metrics.nll},
                   {"rmse_standardized", metrics.rmse_standardized},
                   {"rmse", metrics.rmse},
                   {"marginal_nll_per_point", marginal},
                   {"out_of_box", oob},
                   {"members", model.ensemble.members.size()},
                   {"split", split_json(fraction, args.seed, train_rows, metrics.n)},
                   {"timings", timer.to_json()}};
    out << record.dump() << '\n';
  } else {
    out << std::setprecision(10);
    out << "rows: " << metrics.n << "  out of box: " << oob << '\n';
    out << "NLL (per point, standardized): " << metrics.nll << '\n';
    out << "RMSE (standardized): " << metrics.rmse_standardized << '\n';
    out << "RMSE (original units): " << metrics.rmse << '\n';
    out << "marginal NLL (per point): " << marginal << '\n';
    print_timings(out, timer);
  }
  return kOk;
}

struct EdaArgs {
  std::string data;
  std::string target;
  bool features_only = false;
  std::vector<int> precisions;
  bool ecdf = false;
  double threshold = 5.0;
  bool json = false;
};

int cmd_eda(const EdaArgs &args, std::ostream &out) {
  const auto table = read_csv(std::filesystem::path(args.data));
  Eigen::MatrixXd X;
  if (args.features_only) {
    X = table.values;
  } else {
    X = split_target(table, args.target.empty() ? std::nullopt
                                                : std::optional<std::string>(args.target))
            .X;
  }
  std::vector<int> precisions = args.precisions;
  if (precisions.empty()) {
    std::set<int> candidates{2, 4, 8};
    if (X.cols() > 0) candidates.insert(default_precision(X.cols()));
    precisions.assign(candidates.begin(), candidates.end());
  }
  const auto report = uniqueness_report(X, precisions, args.ecdf, args.threshold);

  if (args.json) {
    json rows = json::array();
    for (const auto &r : report.by_precision) {
      rows.push_back({{"precision", r.precision},
                      {"pct_unique_bitstrings", r.pct_unique_bitstrings},
                      {"advisory", r.advisory}});
    }
    out << json{{"command", "eda"},
                {"rows", report.rows},
                {"ecdf", report.ecdf},
                {"pct_unique_rows", report.pct_unique_rows},
                {"by_precision", rows}}
               .dump()
        << '\n';
    return kOk;
  }
  out << std::fixed << std::setprecision(2);
  out << "rows: " << report.rows << "  unique rows: " << report.pct_unique_rows << "%"
      << (report.ecdf ? "  (ecdf)" : "") << '\n';
  for (const auto &r : report.by_precision) {
    out << "p=" << r.precision << "  unique bit strings: " << r.pct_unique_bitstrings << "%";
    if (r.advisory) {
      out << "  advisory: " << report.pct_unique_rows - r.pct_unique_bitstrings
          << " points below row uniqueness; try "
          << (report.ecdf ? "a larger --precision" : "--ecdf or a larger --precision");
    }
    out << '\n';
  }
  return kOk;
}

int cmd_bench(const BenchOptions &options, bool as_json, std::ostream &out) {
  const auto result = run_bench(options);
  auto row_json = [](const BenchRow &r) {
    return json{{"n", r.n},        {"q", r.q},
                {"build", r.build}, {"nll", r.nll},
                {"grad", r.grad},   {"predict", r.predict}};
  };
  if (as_json) {
    json n_rows = json::array();
    json q_rows = json::array();
    for (const auto &r : result.n_sweep) n_rows.push_back(row_json(r));
    for (const auto &r : result.q_sweep) q_rows.push_back(row_json(r));
    out << json{{"command", "bench"},
                {"n_sweep", n_rows},
                {"q_sweep", q_rows},
                {"slopes",
                 {{"build", result.slope_build},
                  {"nll", result.slope_nll},
                  {"grad", result.slope_grad},
                  {"predict", result.slope_predict},
                  {"nll_predict", result.slope_nll_predict}}},
                {"q_ratio", {{"nll", result.q_ratio_nll}, {"grad", result.q_ratio_grad}}}}
               .dump()
        << '\n';
    return kOk;
  }
  out << std::setw(10) << "n" << std::setw(6) << "q" << std::setw(12) << "build"
      << std::setw(12) << "nll" << std::setw(12) << "grad" << std::setw(12) << "predict"
      << '\n';
  out << std::scientific << std::setprecision(3);
  auto print_row = [&](const BenchRow &r) {
    out << std::setw(10) << r.n << std::setw(6) << r.q << std::setw(12) << r.build
        << std::setw(12) << r.nll << std::setw(12) << r.grad << std::setw(12) << r.predict
        << '\n';
  };
  for (const auto &r : result.n_sweep) print_row(r);
  out << std::fixed << std::setprecision(3);
  out << "log-log slope vs n: build " << result.slope_build << ", nll " << result.slope_nll
      << ", grad " << result.slope_grad << ", predict " << result.slope_predict
      << ", nll+predict " << result.slope_nll_predict << '\n';
  if (!result.q_sweep.empty()) {
    out << std::scientific << std::setprecision(3);
    for (const auto &r : result.q_sweep) print_row(r);
    out << std::fixed << std::setprecision(3);
    out << "q doubling time ratio: nll " << result.q_ratio_nll << ", grad "
        << result.q_ratio_grad << '\n';
  }
  return kOk;
}

} // namespace

int run(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
  CLI::App app{"Binary tree kernel Gaussian process regression"};
  app.name("btgp");
  app.require_subcommand(1);

  TrainArgs train_args;
  auto *train = app.add_subcommand("train", "Fit a model (or ensemble) and save it");
  train->add_option("--data", train_args.data, "Training CSV (header required)")->required();
  train->add_option("--target", train_args.target, "Target column (default: last)");
  train->add_option("--out", train_args.out, "Model file to write")->required();
  train->add_option("--precision,-p", train_args.precision, "Bits per dimension")
      ->check(CLI::Range(1, 32));
  train->add_option("--lambda", train_args.settings.lambda, "Noise variance (default 1/n)")
      ->check(CLI::PositiveNumber);
  train->add_flag("--ecdf", train_args.settings.ecdf, "ECDF-transform features before encoding");
  train->add_option("--ensemble", train_args.settings.members, "Ensemble members")
      ->check(CLI::Range(1, 100000));
  train->add_option("--inits", train_args.settings.inits,
                    "Initialisations evaluated before sampling (default 3, or 480 for ensembles)")
      ->check(CLI::Range(1, 10000000));
  train->add_option("--temperature", train_args.settings.temperature,
                    "Mixture-weight temperature on per-point training NLL")
      ->check(CLI::PositiveNumber);
  train->add_option("--sampling-temperature", train_args.settings.sampling_temperature,
                    "Temperature for sampling initialisations")
      ->check(CLI::PositiveNumber);
  train->add_option("--seed", train_args.settings.seed, "Random seed");
  train->add_option("--max-iters", train_args.settings.max_iterations, "BFGS iteration cap")
      ->check(CLI::Range(0, 1000000));
  train->add_option("--out-of-box", train_args.out_of_box,
                    "Test points outside the training box: zero or joint-rescale")
      ->check(CLI::IsMember({"zero", "joint-rescale"}));
  train->add_option("--box-data", train_args.box_data,
                    "With joint-rescale: CSV whose feature rows widen the encoding box");
  train->add_option("--split", train_args.split,
                    "Train on a seeded split, e.g. 0.9 or 9:1 (the rest is held out)");
  train->add_option("--workers", train_args.settings.workers,
                    "Threads for ensemble training (0: hardware)")
      ->check(CLI::Range(0, 1024));
  train->add_flag("--json", train_args.json, "Emit one JSON record");

  std::string predict_model, predict_data, predict_out;
  auto *predict = app.add_subcommand("predict", "Predict mean and variance for a feature CSV");
  predict->add_option("--model", predict_model, "Model file")->required();
  predict->add_option("--data", predict_data, "Feature CSV")->required();
  predict->add_option("--out", predict_out, "Output CSV (default: stdout)");

  EvalArgs eval_args;
  auto *eval = app.add_subcommand("eval", "Score a model on a labelled CSV");
  eval->add_option("--model", eval_args.model, "Model file")->required();
  eval->add_option("--data", eval_args.data, "Labelled CSV")->required();
  eval->add_option("--target", eval_args.target, "Target column (default: the model's)");
  eval->add_option("--split", eval_args.split,
                   "Evaluate the held-out part of this seeded split");
  eval->add_option("--seed", eval_args.seed, "Seed of the split");
  eval->add_flag("--json", eval_args.json, "Emit one JSON record");

  EdaArgs eda_args;
  auto *eda = app.add_subcommand("eda", "Row and bit-string uniqueness report");
  eda->add_option("--data", eda_args.data, "CSV (header required)")->required();
  eda->add_option("--target", eda_args.target, "Target column to exclude (default: last)");
  eda->add_flag("--features-only", eda_args.features_only, "Every column is a feature");
  eda->add_option("--precision,-p", eda_args.precisions, "Candidate precisions")
      ->delimiter(',')
      ->check(CLI::Range(1, 32));
  eda->add_flag("--ecdf", eda_args.ecdf, "ECDF-transform features before encoding");
  eda->add_option("--threshold", eda_args.threshold,
                  "Advisory when bit-string uniqueness trails row uniqueness by more "
                  "than this many percentage points")
      ->check(CLI::NonNegativeNumber);
  eda->add_flag("--json", eda_args.json, "Emit one JSON record");

  BenchOptions bench_options;
  bool bench_json = false;
  auto *bench = app.add_subcommand("bench", "Time encode, nll, gradient and predict vs n and q");
  bench->add_option("--log2-n-min", bench_options.log2_n_min)->check(CLI::Range(1, 30));
  bench->add_option("--log2-n-max", bench_options.log2_n_max)->check(CLI::Range(1, 30));
  bench->add_option("--dims", bench_options.dims)->check(CLI::Range(1, 10000));
  bench->add_option("--precision,-p", bench_options.precision)->check(CLI::Range(1, 16));
  bench->add_option("--reps", bench_options.reps)->check(CLI::Range(1, 1000));
  bench->add_option("--seed", bench_options.seed);
  bench->add_option("--q-sweep-n", bench_options.q_sweep_n,
                    "n for the q-doubling comparison (0 skips it)")
      ->check(CLI::NonNegativeNumber);
  bench->add_flag("--json", bench_json, "Emit one JSON record");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*train) return cmd_train(train_args, out, err);
    if (*predict) return cmd_predict(predict_model, predict_data, predict_out, out);
    if (*eval) return cmd_eval(eval_args, out);
    if (*eda) return cmd_eda(eda_args, out);
    if (*bench) return cmd_bench(bench_options, bench_json, out);
  } catch (const PreconditionError &e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const NumericalError &e) {
    err << "numerical error: " << e.what() << '\n';
    return kNumericalError;
  } catch (const std::exception &e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  }
  return kUsage;
}

int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
  std::vector<const char *> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("btgp");
  for (const auto &a : args) {
    argv.push_back(a.c_str());
  }
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

} // namespace btgp::cli
