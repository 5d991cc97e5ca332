#include "btgp/encoding.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <string>

#include "btgp/error.hpp"

namespace btgp {

bool EncodingConfig::has_degenerate() const {
  return std::any_of(degenerate.begin(), degenerate.end(),
                     [](bool b) { return b; });
}

int default_precision(Index dims) {
  if (dims < 1) {
    throw PreconditionError("default_precision: dims must be >= 1");
  }
  return static_cast<int>(std::min<Index>(8, 150 / dims + 1));
}

std::vector<Index> interleaved_bit_order(Index dims, int precision) {
  std::vector<Index> order;
  order.reserve(static_cast<std::size_t>(dims * precision));
  for (int t = 0; t < precision; ++t) {
    for (Index d = 0; d < dims; ++d) {
      order.push_back(d * precision + t);
    }
  }
  return order;
}

namespace {

// Percentile with linear interpolation between order statistics; `sorted` is
// ascending and non-empty.
double percentile(const std::vector<double> &sorted, double fraction) {
  const double pos = fraction * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double t = pos - static_cast<double>(lo);
  return sorted[lo] + t * (sorted[hi] - sorted[lo]);
}

} // namespace

EncodingConfig fit_encoding(const Eigen::MatrixXd &X, int precision,
                            bool use_ecdf) {
  if (X.rows() < 1 || X.cols() < 1) {
    throw DataError("fit_encoding: empty dataset");
  }
  if (precision < 1 || precision > 32) {
    throw PreconditionError("fit_encoding: precision must be in [1, 32], got " +
                            std::to_string(precision));
  }
  if (!X.allFinite()) {
    throw DataError("fit_encoding: non-finite feature value");
  }
  EncodingConfig cfg;
  cfg.dims = X.cols();
  cfg.precision = precision;
  cfg.bit_order = interleaved_bit_order(cfg.dims, precision);
  cfg.lower = X.colwise().minCoeff().transpose();
  cfg.upper = X.colwise().maxCoeff().transpose();
  cfg.degenerate.resize(static_cast<std::size_t>(cfg.dims));
  for (Index d = 0; d < cfg.dims; ++d) {
    cfg.degenerate[static_cast<std::size_t>(d)] = !(cfg.lower(d) < cfg.upper(d));
  }
  cfg.use_ecdf = use_ecdf;
  if (use_ecdf) {
    cfg.ecdf_knots.resize(cfg.dims, kEcdfKnots);
    std::vector<double> column(static_cast<std::size_t>(X.rows()));
    for (Index d = 0; d < cfg.dims; ++d) {
      for (Index j = 0; j < X.rows(); ++j) {
        column[static_cast<std::size_t>(j)] = X(j, d);
      }
      std::sort(column.begin(), column.end());
      for (int k = 0; k < kEcdfKnots; ++k) {
        cfg.ecdf_knots(d, k) = percentile(column, k / 10.0);
      }
    }
  }
  return cfg;
}

double ecdf_transform(const Eigen::Ref<const Eigen::VectorXd> &knots, double v) {
  const double *begin = knots.data();
  const double *end = begin + knots.size();
  const auto a = std::lower_bound(begin, end, v) - begin;
  const auto b = std::upper_bound(begin, end, v) - begin;
  const double last = static_cast<double>(knots.size() - 1);
  if (a < b) {
    // v coincides with a run of tied knots a..b-1; use the middle of the run.
    return 0.5 * static_cast<double>(a + b - 1) / last;
  }
  if (a == 0) {
    return 0.0;
  }
  if (a == knots.size()) {
    return 1.0;
  }
  const double x0 = knots(a - 1);
  const double x1 = knots(a);
  return (static_cast<double>(a - 1) + (v - x0) / (x1 - x0)) / last;
}

double rescale(const EncodingConfig &cfg, Index dim, double x) {
  const double lo = cfg.lower(dim);
  const double hi = cfg.upper(dim);
  if (x < lo) {
    return -1.0;
  }
  if (x > hi) {
    return 2.0;
  }
  if (cfg.degenerate[static_cast<std::size_t>(dim)]) {
    return 0.5;
  }
  if (cfg.use_ecdf) {
    return ecdf_transform(cfg.ecdf_knots.row(dim).transpose(), x);
  }
  return (x - lo) / (hi - lo);
}

namespace {

void encode_into(const Eigen::Ref<const Eigen::VectorXd> &x,
                 const EncodingConfig &cfg, std::uint8_t *raw,
                 std::uint8_t *out, bool &out_of_box) {
  if (x.size() != cfg.dims) {
    throw DimensionError("encode: point has " + std::to_string(x.size()) +
                         " features, encoding expects " +
                         std::to_string(cfg.dims));
  }
  if (!x.allFinite()) {
    throw DataError("encode: non-finite feature value");
  }
  const int p = cfg.precision;
  const std::uint64_t cells = std::uint64_t{1} << p;
  out_of_box = false;
  for (Index d = 0; d < cfg.dims; ++d) {
    double v = rescale(cfg, d, x(d));
    if (v < 0.0 || v > 1.0) {
      out_of_box = true;
      v = std::clamp(v, 0.0, 1.0);
    }
    // floor(v 2^p), with v = 1 mapped onto the last cell (all ones).
    const auto code = std::min(
        static_cast<std::uint64_t>(std::floor(std::ldexp(v, p))), cells - 1);
    for (int t = 0; t < p; ++t) {
      raw[d * p + t] = static_cast<std::uint8_t>((code >> (p - 1 - t)) & 1u);
    }
  }
  const auto q = static_cast<std::size_t>(cfg.bits());
  for (std::size_t k = 0; k < q; ++k) {
    out[k] = raw[cfg.bit_order[k]];
  }
}

} // namespace

EncodedPoint encode_point(const Eigen::Ref<const Eigen::VectorXd> &x,
                          const EncodingConfig &cfg) {
  EncodedPoint out;
  out.bits.resize(cfg.bits());
  std::vector<std::uint8_t> raw(static_cast<std::size_t>(cfg.bits()));
  encode_into(x, cfg, raw.data(), out.bits.data(), out.out_of_box);
  return out;
}

EncodedDataset encode(const Eigen::MatrixXd &X, const EncodingConfig &cfg) {
  EncodedDataset out;
  out.bits.resize(X.rows(), cfg.bits());
  out.out_of_box.assign(static_cast<std::size_t>(X.rows()), false);
  std::vector<std::uint8_t> raw(static_cast<std::size_t>(cfg.bits()));
  Eigen::VectorXd row(X.cols());
  for (Index j = 0; j < X.rows(); ++j) {
    row = X.row(j).transpose();
    bool oob = false;
    encode_into(row, cfg, raw.data(), out.bits.row(j).data(), oob);
    out.out_of_box[static_cast<std::size_t>(j)] = oob;
  }
  return out;
}

BitMatrix permute_bits(const BitMatrix &bits, const std::vector<Index> &order) {
  if (static_cast<Index>(order.size()) != bits.cols()) {
    throw DimensionError("permute_bits: order has " +
                         std::to_string(order.size()) + " entries for " +
                         std::to_string(bits.cols()) + " bits");
  }
  BitMatrix out(bits.rows(), bits.cols());
  for (Index k = 0; k < bits.cols(); ++k) {
    out.col(k) = bits.col(order[static_cast<std::size_t>(k)]);
  }
  return out;
}

PartitionBuild build_partitions(const BitMatrix &bits) {
  const Index n = bits.rows();
  const Index q = bits.cols();
  PartitionBuild out;
  out.sort_order.resize(static_cast<std::size_t>(n));
  std::iota(out.sort_order.begin(), out.sort_order.end(), Index{0});
  const auto width = static_cast<std::size_t>(q);
  auto row = [&](Index j) { return bits.data() + j * q; };
  std::stable_sort(out.sort_order.begin(), out.sort_order.end(),
                   [&](Index a, Index b) {
                     return std::memcmp(row(a), row(b), width) < 0;
                   });

  out.P.resize(n, q);
  if (n == 0) {
    return out;
  }
  // Sorted rows j-1 and j share their first `lcp` bits; a new cell opens in
  // every column i >= lcp (prefix length i + 1 > lcp).
  std::vector<PartitionId> next(static_cast<std::size_t>(q), 0);
  const Index first = out.sort_order[0];
  for (Index i = 0; i < q; ++i) {
    out.P(first, i) = 0;
  }
  for (Index j = 1; j < n; ++j) {
    const Index cur = out.sort_order[static_cast<std::size_t>(j)];
    const Index prev = out.sort_order[static_cast<std::size_t>(j - 1)];
    const std::uint8_t *a = row(prev);
    const std::uint8_t *b = row(cur);
    Index lcp = 0;
    while (lcp < q && a[lcp] == b[lcp]) {
      ++lcp;
    }
    for (Index i = 0; i < q; ++i) {
      if (i >= lcp) {
        ++next[static_cast<std::size_t>(i)];
      }
      out.P(cur, i) = next[static_cast<std::size_t>(i)];
    }
  }
  return out;
}

double pct_unique_bitstrings(const BitMatrix &bits) {
  const Index n = bits.rows();
  if (n == 0) {
    return 0.0;
  }
  const auto build = build_partitions(bits);
  if (bits.cols() == 0) {
    return 100.0 / static_cast<double>(n);
  }
  const Index distinct = build.P.col(bits.cols() - 1).maxCoeff() + 1;
  return 100.0 * static_cast<double>(distinct) / static_cast<double>(n);
}

UniquenessStats uniqueness_stats(const Eigen::MatrixXd &X, const BitMatrix &bits) {
  if (X.rows() != bits.rows()) {
    throw DimensionError("uniqueness_stats: " + std::to_string(X.rows()) +
                         " feature rows vs " + std::to_string(bits.rows()) +
                         " bit rows");
  }
  const Index n = X.rows();
  UniquenessStats out;
  if (n == 0) {
    return out;
  }
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  auto less = [&](Index a, Index b) {
    for (Index d = 0; d < X.cols(); ++d) {
      if (X(a, d) != X(b, d)) {
        return X(a, d) < X(b, d);
      }
    }
    return false;
  };
  std::sort(order.begin(), order.end(), less);
  Index distinct = 1;
  for (std::size_t j = 1; j < order.size(); ++j) {
    if (less(order[j - 1], order[j])) {
      ++distinct;
    }
  }
  out.pct_unique_rows = 100.0 * static_cast<double>(distinct) / static_cast<double>(n);
  out.pct_unique_bitstrings = pct_unique_bitstrings(bits);
  return out;
}

} // namespace btgp
