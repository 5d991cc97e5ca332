#ifndef BTGP_ENCODING_HPP
#define BTGP_ENCODING_HPP

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "btgp/sros.hpp"

namespace btgp {

// One bit per byte, rows are points. Row-major so that a row compares
// lexicographically with memcmp.
using BitMatrix =
    Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using BitVector = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, 1>;

constexpr int kEcdfKnots = 11;

struct EncodingConfig {
  Index dims = 0;
  int precision = 0;
  // bit_order[k] is the raw bit feeding encoded position k. Raw bit t of
  // dimension d has index d * precision + t (t = 0 is the leading bit).
  std::vector<Index> bit_order;
  // Per-dimension extents of the fitting data, in raw feature units.
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  std::vector<bool> degenerate;
  bool use_ecdf = false;
  // dims x 11: the 0th, 10th, ..., 100th percentile of each dimension.
  Eigen::MatrixXd ecdf_knots;

  Index bits() const { return dims * precision; }
  bool has_degenerate() const;
};

// min(8, floor(150 / d) + 1)
int default_precision(Index dims);

// Leading bit of every dimension, then the second bit of every dimension, ...
std::vector<Index> interleaved_bit_order(Index dims, int precision);

/*
 * Fit per-dimension extents (and ECDF knots when requested) on X (n x d).
 * Throws DataError for empty or non-finite input, PreconditionError for
 * precision outside [1, 32].
 */
EncodingConfig fit_encoding(const Eigen::MatrixXd &X, int precision,
                            bool use_ecdf);

// Piecewise-linear map sending the 10k-th percentile knot to k / 10.
double ecdf_transform(const Eigen::Ref<const Eigen::VectorXd> &knots, double v);

// Coordinate of x in dimension `dim` after ECDF / min-max rescaling. Not
// clamped: values outside [0, 1] lie outside the fitted box.
double rescale(const EncodingConfig &cfg, Index dim, double x);

struct EncodedPoint {
  BitVector bits;
  bool out_of_box = false;
};

struct EncodedDataset {
  BitMatrix bits;
  std::vector<bool> out_of_box;
};

EncodedPoint encode_point(const Eigen::Ref<const Eigen::VectorXd> &x,
                          const EncodingConfig &cfg);

EncodedDataset encode(const Eigen::MatrixXd &X, const EncodingConfig &cfg);

// Columns of `bits` reordered so that column k of the result is column
// order[k] of the input.
BitMatrix permute_bits(const BitMatrix &bits, const std::vector<Index> &order);

struct PartitionBuild {
  // n x q, column i groups rows by their first i + 1 bits. Ids are assigned in
  // lexical order of the prefixes, starting at 0.
  PartitionMatrix P;
  // sort_order[j] is the input row at sorted position j.
  std::vector<Index> sort_order;
};

PartitionBuild build_partitions(const BitMatrix &bits);

struct UniquenessStats {
  double pct_unique_rows = 0.0;
  double pct_unique_bitstrings = 0.0;
};

UniquenessStats uniqueness_stats(const Eigen::MatrixXd &X, const BitMatrix &bits);

double pct_unique_bitstrings(const BitMatrix &bits);

} // namespace btgp

#endif // BTGP_ENCODING_HPP
