#ifndef BTGP_CLI_COMMANDS_HPP
#define BTGP_CLI_COMMANDS_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "csv.hpp"
#include "model_file.hpp"

namespace btgp::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kDataError = 2, kNumericalError = 3 };

struct TrainSettings {
  // nullopt selects min(8, floor(150 / d) + 1).
  std::optional<int> precision;
  // <= 0 selects 1 / n.
  double lambda = 0.0;
  bool ecdf = false;
  int members = 1;
  // Initialisations evaluated before sampling; rounded up to a multiple of
  // the three weight shapes. 0 picks 3 for a single model, 480 otherwise.
  int inits = 0;
  double temperature = 0.01;
  double sampling_temperature = 0.01;
  std::uint64_t seed = 0;
  int max_iterations = 200;
  OutOfBoxMode out_of_box = OutOfBoxMode::zero;
  int workers = 0;
};

/*
 * Fit the encoding, standardize targets and train. With joint_rescale the
 * encoding box also covers `box_rows` (features only).
 */
ModelBundle fit_bundle(const Dataset &train, const TrainSettings &settings,
                       const Eigen::MatrixXd &box_rows = Eigen::MatrixXd());

struct EdaRow {
  int precision = 0;
  double pct_unique_bitstrings = 0.0;
  bool advisory = false;
};

struct EdaReport {
  Eigen::Index rows = 0;
  double pct_unique_rows = 0.0;
  bool ecdf = false;
  std::vector<EdaRow> by_precision;
};

// Uniqueness of the feature rows and of their bit strings at each precision.
// An advisory is raised when the gap exceeds `threshold` percentage points.
EdaReport uniqueness_report(const Eigen::MatrixXd &X, const std::vector<int> &precisions,
                            bool ecdf, double threshold);

struct BenchOptions {
  int log2_n_min = 10;
  int log2_n_max = 17;
  Eigen::Index dims = 4;
  int precision = 4;
  int reps = 3;
  std::uint64_t seed = 0;
  // q-doubling comparison at this n; 0 skips it.
  Eigen::Index q_sweep_n = Eigen::Index{1} << 14;
};

struct BenchRow {
  Eigen::Index n = 0;
  Eigen::Index q = 0;
  // Seconds, best of the repetitions.
  double build = 0.0;
  double nll = 0.0;
  double grad = 0.0;
  double predict = 0.0;
};

struct BenchResult {
  std::vector<BenchRow> n_sweep;
  std::vector<BenchRow> q_sweep;
  double slope_build = 0.0;
  double slope_nll = 0.0;
  double slope_grad = 0.0;
  double slope_predict = 0.0;
  double slope_nll_predict = 0.0;
  double q_ratio_nll = 0.0;
  double q_ratio_grad = 0.0;
};

BenchResult run_bench(const BenchOptions &options);

// Entry point for the btgp tool; returns the process exit code.
int run(int argc, const char *const *argv, std::ostream &out, std::ostream &err);
int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

} // namespace btgp::cli

#endif // BTGP_CLI_COMMANDS_HPP
