#include "csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "btgp/error.hpp"

namespace btgp::cli {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) {
    return {};
  }
  const auto last = s.find_last_not_of(" \t\r");
  s = s.substr(first, last - first + 1);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') {
    s = s.substr(1, s.size() - 2);
  }
  return s;
}

std::vector<std::string_view> split_line(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    cells.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) {
      break;
    }
    start = comma + 1;
  }
  return cells;
}

bool blank(std::string_view line) { return trim(line).empty(); }

} // namespace

Table read_csv(std::istream &in, const std::string &source) {
  Table table;
  std::string line;
  while (std::getline(in, line) && blank(line)) {
  }
  if (!in && line.empty()) {
    return table;
  }
  for (auto cell : split_line(line)) {
    table.header.emplace_back(cell);
  }
  const auto cols = static_cast<Eigen::Index>(table.header.size());

  std::vector<double> data;
  Eigen::Index row = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) {
      continue;
    }
    ++row;
    const auto cells = split_line(line);
    if (static_cast<Eigen::Index>(cells.size()) != cols) {
      throw DataError(source + ": row " + std::to_string(row) + " (line " +
                      std::to_string(line_no) + ") has " + std::to_string(cells.size()) +
                      " fields, header has " + std::to_string(cols));
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      const auto cell = cells[static_cast<std::size_t>(c)];
      double v = 0.0;
      const auto [end, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (cell.empty() || ec != std::errc() || end != cell.data() + cell.size() ||
          !std::isfinite(v)) {
        throw DataError(source + ": row " + std::to_string(row) + " (line " +
                        std::to_string(line_no) + "), column '" +
                        table.header[static_cast<std::size_t>(c)] +
                        "': not a finite number: '" + std::string(cell) + "'");
      }
      data.push_back(v);
    }
  }
  table.values = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      data.data(), row, cols);
  return table;
}

Table read_csv(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot open " + path.string());
  }
  return read_csv(in, path.string());
}

Dataset split_target(const Table &table, const std::optional<std::string> &target) {
  if (table.header.empty()) {
    throw DataError("dataset has no columns");
  }
  std::size_t col = table.header.size() - 1;
  if (target) {
    const auto it = std::find(table.header.begin(), table.header.end(), *target);
    if (it == table.header.end()) {
      throw DataError("target column '" + *target + "' not found");
    }
    col = static_cast<std::size_t>(it - table.header.begin());
  }
  if (table.header.size() < 2) {
    throw DataError("dataset needs at least one feature column besides the target");
  }
  Dataset out;
  out.target = table.header[col];
  out.y = table.values.col(static_cast<Eigen::Index>(col));
  out.X.resize(table.values.rows(), table.values.cols() - 1);
  Eigen::Index k = 0;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (c == col) {
      continue;
    }
    out.features.push_back(table.header[c]);
    out.X.col(k++) = table.values.col(static_cast<Eigen::Index>(c));
  }
  return out;
}

Eigen::MatrixXd select_features(const Table &table, const std::vector<std::string> &features) {
  const auto d = static_cast<Eigen::Index>(features.size());
  if (table.header.empty()) {
    return Eigen::MatrixXd(0, d);
  }
  std::vector<Eigen::Index> cols;
  for (const auto &name : features) {
    const auto it = std::find(table.header.begin(), table.header.end(), name);
    if (it == table.header.end()) {
      cols.clear();
      break;
    }
    cols.push_back(it - table.header.begin());
  }
  if (cols.empty()) {
    if (static_cast<Eigen::Index>(table.header.size()) != d) {
      throw DimensionError("feature file has " + std::to_string(table.header.size()) +
                           " columns, model expects " + std::to_string(d) + " features");
    }
    cols.resize(static_cast<std::size_t>(d));
    std::iota(cols.begin(), cols.end(), Eigen::Index{0});
  }
  Eigen::MatrixXd X(table.values.rows(), d);
  for (Eigen::Index k = 0; k < d; ++k) {
    X.col(k) = table.values.col(cols[static_cast<std::size_t>(k)]);
  }
  return X;
}

Split make_split(Eigen::Index n, double train_fraction, std::uint64_t seed) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
  Split split;
  split.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  split.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  return split;
}

double parse_split(const std::string &text) {
  const auto colon = text.find(':');
  double fraction = 0.0;
  try {
    std::size_t used = 0;
    if (colon == std::string::npos) {
      fraction = std::stod(text, &used);
      if (used != text.size()) throw std::invalid_argument(text);
    } else {
      const std::string left = text.substr(0, colon);
      const std::string right = text.substr(colon + 1);
      const double a = std::stod(left, &used);
      if (used != left.size()) throw std::invalid_argument(text);
      const double b = std::stod(right, &used);
      if (used != right.size() || a < 0.0 || b < 0.0) throw std::invalid_argument(text);
      fraction = a / (a + b);
    }
  } catch (const std::exception &) {
    throw PreconditionError("--split: expected a fraction like 0.8 or a ratio like 4:1, got '" +
                            text + "'");
  }
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw PreconditionError("--split: training fraction must be in (0, 1]");
  }
  return fraction;
}

Dataset take_rows(const Dataset &data, const std::vector<Eigen::Index> &rows) {
  Dataset out;
  out.features = data.features;
  out.target = data.target;
  out.X = data.X(rows, Eigen::all);
  out.y = data.y(rows);
  return out;
}

} // namespace btgp::cli
