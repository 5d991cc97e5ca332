#ifndef BTGP_CLI_CSV_HPP
#define BTGP_CLI_CSV_HPP

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace btgp::cli {

struct Table {
  std::vector<std::string> header;
  Eigen::MatrixXd values; // rows x header.size()
};

/*
 * Comma-separated table with a header line. Every cell must parse as a
 * finite number; the first offending cell is reported with its data row
 * (1-based) and column name. A completely empty input is an empty table.
 */
Table read_csv(std::istream &in, const std::string &source = "<stream>");
Table read_csv(const std::filesystem::path &path);

struct Dataset {
  std::vector<std::string> features;
  std::string target;
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
};

// Splits off the target column, by name or the last column when unnamed.
Dataset split_target(const Table &table, const std::optional<std::string> &target);

// Feature matrix in the order of `features`. Columns are matched by name
// when the header contains all of them, otherwise by position when the
// column count equals features.size().
Eigen::MatrixXd select_features(const Table &table, const std::vector<std::string> &features);

struct Split {
  std::vector<Eigen::Index> train;
  std::vector<Eigen::Index> test;
};

// Seeded shuffle, then the first round(fraction * n) rows train.
Split make_split(Eigen::Index n, double train_fraction, std::uint64_t seed);

// "0.8" or "4:1" -> training fraction in (0, 1].
double parse_split(const std::string &text);

Dataset take_rows(const Dataset &data, const std::vector<Eigen::Index> &rows);

} // namespace btgp::cli

#endif // BTGP_CLI_CSV_HPP
