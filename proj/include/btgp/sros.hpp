#ifndef BTGP_SROS_HPP
#define BTGP_SROS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "btgp/error.hpp"

/*
 * Sparse rank-one sum (SROS) linear operators.
 *
 * A column p of a partition matrix P assigns each of n points a cell id.
 * Given value vectors u (rows) and u' (columns) the simple operator is
 *
 *   L(p, p', u, u') = sum_l u^{p=l} (u'^{p'=l})^T
 *
 * where u^{p=l} zeroes every entry outside cell l.  A full SROS operator sums
 * the simple operators of its q columns.  The symmetric shorthand
 * L(P, C, U) = L(P, P, U, C .* U) requires C to be constant within each cell.
 *
 * Cell ids are non-negative integers.  They need not be contiguous, but the
 * accumulators used below are sized by the largest id, so ids should stay
 * below the number of points (canonicalize() guarantees that).
 */

namespace btgp {

using Index = Eigen::Index;
using PartitionId = std::int32_t;
using Partition = Eigen::Matrix<PartitionId, Eigen::Dynamic, 1>;
// Column-major: column i is the i-th partition of the point set.
using PartitionMatrix =
    Eigen::Matrix<PartitionId, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar = double> struct SrosSymmetric {
  PartitionMatrix P;
  Matrix<Scalar> C;
  Matrix<Scalar> U;

  Index rows() const { return P.rows(); }
  Index depth() const { return P.cols(); }
};

// An n x m operator; P/U index rows, Pp/Up index columns.
template <typename Scalar = double> struct SrosRect {
  PartitionMatrix P;
  PartitionMatrix Pp;
  Matrix<Scalar> U;
  Matrix<Scalar> Up;

  Index rows() const { return P.rows(); }
  Index cols() const { return Pp.rows(); }
  Index depth() const { return P.cols(); }
};

// I + L(P, C, U) is the inverse of the input operator I + L(P, C_in, U_in).
template <typename Scalar = double> struct InverseResult {
  Matrix<Scalar> C;
  Matrix<Scalar> U;
  Scalar logdet = Scalar(0);
};

struct InvertOptions {
  // Run the nestedness and cell-constant checks before inverting.
  bool check_preconditions = true;
  // Smallest admissible Sherman-Morrison pivot 1 + z.
  double pd_tolerance = 1e-12;
};

namespace detail {

template <typename Derived>
inline PartitionId max_id(const Eigen::MatrixBase<Derived> &p) {
  if (p.size() == 0) {
    return -1;
  }
  if (p.minCoeff() < 0) {
    throw PreconditionError("sros: negative partition id");
  }
  return p.maxCoeff();
}

inline std::string shape(Index r, Index c) {
  return std::to_string(r) + "x" + std::to_string(c);
}

template <typename DerivedP, typename DerivedC>
bool cell_constant(const Eigen::MatrixBase<DerivedP> &p,
                   const Eigen::MatrixBase<DerivedC> &c) {
  using Scalar = typename DerivedC::Scalar;
  const auto r = static_cast<std::size_t>(max_id(p) + 1);
  std::vector<Scalar> seen(r);
  std::vector<char> has(r, 0);
  for (Index j = 0; j < p.size(); ++j) {
    const auto l = static_cast<std::size_t>(p(j));
    if (!has[l]) {
      has[l] = 1;
      seen[l] = c(j);
    } else if (seen[l] != c(j)) {
      return false;
    }
  }
  return true;
}

} // namespace detail

/*
 * Relabel a partition to first-occurrence order starting at 0.
 */
template <typename Derived>
Partition canonicalize(const Eigen::MatrixBase<Derived> &p) {
  Partition out(p.size());
  std::unordered_map<PartitionId, PartitionId> relabel;
  relabel.reserve(static_cast<std::size_t>(p.size()));
  for (Index j = 0; j < p.size(); ++j) {
    auto it = relabel.try_emplace(p(j), static_cast<PartitionId>(relabel.size()));
    out(j) = it.first->second;
  }
  return out;
}

inline PartitionMatrix canonicalize_columns(const PartitionMatrix &P) {
  PartitionMatrix out(P.rows(), P.cols());
  for (Index i = 0; i < P.cols(); ++i) {
    out.col(i) = canonicalize(P.col(i));
  }
  return out;
}

/*
 * True iff fine[a] == fine[b] implies coarse[a] == coarse[b].
 */
template <typename DerivedF, typename DerivedC>
bool refines(const Eigen::MatrixBase<DerivedF> &fine,
             const Eigen::MatrixBase<DerivedC> &coarse) {
  if (fine.size() != coarse.size()) {
    throw DimensionError("refines: partitions of length " +
                         std::to_string(fine.size()) + " and " +
                         std::to_string(coarse.size()));
  }
  std::unordered_map<PartitionId, PartitionId> parent;
  parent.reserve(static_cast<std::size_t>(fine.size()));
  for (Index j = 0; j < fine.size(); ++j) {
    auto [it, inserted] = parent.try_emplace(fine(j), coarse(j));
    if (!inserted && it->second != coarse(j)) {
      return false;
    }
  }
  return true;
}

// Columns ordered coarse to fine. Refinement is transitive, so adjacent
// columns suffice.
inline bool is_nested(const PartitionMatrix &P) {
  for (Index i = 1; i < P.cols(); ++i) {
    if (!refines(P.col(i), P.col(i - 1))) {
      return false;
    }
  }
  return true;
}

/*
 * y = L(P, Pp, U, Up) x in O((n + m) q).
 *
 * Per column: scatter-add Up_j x_j into the cell accumulator of Pp_j, then
 * gather the accumulator of P_j scaled by U_j.
 */
template <typename DerivedU, typename DerivedUp, typename DerivedX>
Vector<typename DerivedX::Scalar>
lin_transform(const PartitionMatrix &P, const PartitionMatrix &Pp,
              const Eigen::MatrixBase<DerivedU> &U,
              const Eigen::MatrixBase<DerivedUp> &Up,
              const Eigen::MatrixBase<DerivedX> &x) {
  using Scalar = typename DerivedX::Scalar;
  const Index n = P.rows();
  const Index m = Pp.rows();
  const Index q = P.cols();
  if (Pp.cols() != q || U.rows() != n || U.cols() != q || Up.rows() != m ||
      Up.cols() != q) {
    throw DimensionError("lin_transform: P " + detail::shape(n, q) + ", Pp " +
                         detail::shape(m, Pp.cols()) + ", U " +
                         detail::shape(U.rows(), U.cols()) + ", Up " +
                         detail::shape(Up.rows(), Up.cols()));
  }
  if (x.size() != m) {
    throw DimensionError("lin_transform: x has length " +
                         std::to_string(x.size()) + ", expected " +
                         std::to_string(m));
  }
  Vector<Scalar> y = Vector<Scalar>::Zero(n);
  std::vector<Scalar> acc;
  for (Index i = 0; i < q; ++i) {
    const auto r = std::max(detail::max_id(P.col(i)), detail::max_id(Pp.col(i))) + 1;
    if (r > n + m) {
      throw PreconditionError("lin_transform: cell id " + std::to_string(r - 1) +
                              " out of range in column " + std::to_string(i));
    }
    acc.assign(static_cast<std::size_t>(r), Scalar(0));
    for (Index j = 0; j < m; ++j) {
      acc[static_cast<std::size_t>(Pp(j, i))] += Up(j, i) * x(j);
    }
    for (Index j = 0; j < n; ++j) {
      y(j) += acc[static_cast<std::size_t>(P(j, i))] * U(j, i);
    }
  }
  return y;
}

template <typename Scalar, typename DerivedX>
Vector<Scalar> lin_transform(const SrosRect<Scalar> &op,
                             const Eigen::MatrixBase<DerivedX> &x) {
  return lin_transform(op.P, op.Pp, op.U, op.Up, x);
}

// L(P, C, U) x
template <typename Scalar, typename DerivedX>
Vector<Scalar> lin_transform(const SrosSymmetric<Scalar> &op,
                             const Eigen::MatrixBase<DerivedX> &x) {
  return lin_transform(op.P, op.P, op.U, op.C.cwiseProduct(op.U), x);
}

/*
 * Materialize L(P, Pp, U, Up) as a dense n x m matrix. O(n m q); intended for
 * verification at small sizes.
 */
template <typename DerivedU, typename DerivedUp>
Matrix<typename DerivedU::Scalar>
to_dense(const PartitionMatrix &P, const PartitionMatrix &Pp,
         const Eigen::MatrixBase<DerivedU> &U,
         const Eigen::MatrixBase<DerivedUp> &Up) {
  using Scalar = typename DerivedU::Scalar;
  const Index n = P.rows();
  const Index m = Pp.rows();
  const Index q = P.cols();
  if (Pp.cols() != q || U.rows() != n || U.cols() != q || Up.rows() != m ||
      Up.cols() != q) {
    throw DimensionError("to_dense: inconsistent SROS array shapes");
  }
  Matrix<Scalar> out = Matrix<Scalar>::Zero(n, m);
  for (Index i = 0; i < q; ++i) {
    for (Index b = 0; b < m; ++b) {
      for (Index a = 0; a < n; ++a) {
        if (P(a, i) == Pp(b, i)) {
          out(a, b) += U(a, i) * Up(b, i);
        }
      }
    }
  }
  return out;
}

template <typename Scalar>
Matrix<Scalar> to_dense(const SrosRect<Scalar> &op) {
  return to_dense(op.P, op.Pp, op.U, op.Up);
}

template <typename Scalar>
Matrix<Scalar> to_dense(const SrosSymmetric<Scalar> &op) {
  const Matrix<Scalar> CU = op.C.cwiseProduct(op.U);
  return to_dense(op.P, op.P, op.U, CU);
}

/*
 * Checks the hypotheses of the fast inversion: matching shapes, columns of P
 * nested coarse to fine, and each column of C constant within its cells.
 */
template <typename DerivedC, typename DerivedU>
void check_symmetric(const PartitionMatrix &P, const Eigen::MatrixBase<DerivedC> &C,
                     const Eigen::MatrixBase<DerivedU> &U) {
  const Index n = P.rows();
  const Index q = P.cols();
  if (C.rows() != n || C.cols() != q || U.rows() != n || U.cols() != q) {
    throw DimensionError("sros: P " + detail::shape(n, q) + ", C " +
                         detail::shape(C.rows(), C.cols()) + ", U " +
                         detail::shape(U.rows(), U.cols()));
  }
  for (Index i = 0; i < q; ++i) {
    if (detail::max_id(P.col(i)) >= std::max<Index>(n, 1)) {
      throw PreconditionError("sros: cell id >= n in column " +
                              std::to_string(i) + "; canonicalize first");
    }
    if (i > 0 && !refines(P.col(i), P.col(i - 1))) {
      throw PreconditionError("sros: column " + std::to_string(i) +
                              " does not refine column " + std::to_string(i - 1));
    }
    if (!detail::cell_constant(P.col(i), C.col(i))) {
      throw PreconditionError("sros: C column " + std::to_string(i) +
                              " is not constant within cells");
    }
  }
}

namespace detail {

// Shared part of both inversion routines for column i: writes C'(:, i) and
// accumulates log(1 + z_l) into logdet. `z` is scratch of size r.
template <typename Scalar, typename DerivedU>
void sherman_morrison_column(const PartitionMatrix &P, const Matrix<Scalar> &C,
                             const Eigen::MatrixBase<DerivedU> &u, Index i,
                             Index r, const InvertOptions &opts,
                             InverseResult<Scalar> &out, std::vector<Scalar> &z) {
  const Index n = P.rows();
  z.assign(static_cast<std::size_t>(r), Scalar(0));
  for (Index j = 0; j < n; ++j) {
    z[static_cast<std::size_t>(P(j, i))] += C(j, i) * out.U(j, i) * u(j);
  }
  for (Index l = 0; l < r; ++l) {
    const Scalar pivot = Scalar(1) + z[static_cast<std::size_t>(l)];
    if (!(pivot > Scalar(opts.pd_tolerance))) {
      throw NumericalError("sros invert: pivot 1 + z = " +
                               std::to_string(static_cast<double>(pivot)) +
                               " at column " + std::to_string(i) + ", cell " +
                               std::to_string(l),
                           static_cast<long>(i), static_cast<long>(l));
    }
    out.logdet += std::log(pivot);
  }
  for (Index j = 0; j < n; ++j) {
    out.C(j, i) = -C(j, i) / (Scalar(1) + z[static_cast<std::size_t>(P(j, i))]);
  }
}

inline Index cells_in_column(const PartitionMatrix &P, Index i) {
  return static_cast<Index>(max_id(P.col(i))) + 1;
}

} // namespace detail

/*
 * (I + L(P, C, U))^{-1} = I + L(P, C', U') and log|I + L(P, C, U)| in
 * O(n q^2).
 *
 * Adds the cell outer products one column at a time, finest column first,
 * updating the inverse with Sherman-Morrison. Before column i is added, U'(:, i)
 * already holds A^{-1} U(:, i) restricted to each cell, where A is the sum of
 * the finer columns. After C'(:, i) is known, every coarser column k < i
 * receives the contribution of column i to its own A^{-1} U(:, k).
 */
template <typename Scalar>
InverseResult<Scalar> invert(const PartitionMatrix &P, const Matrix<Scalar> &C,
                             const Matrix<Scalar> &U,
                             const InvertOptions &opts = {}) {
  if (opts.check_preconditions) {
    check_symmetric(P, C, U);
  }
  const Index n = P.rows();
  const Index q = P.cols();
  InverseResult<Scalar> out;
  out.C = Matrix<Scalar>::Zero(n, q);
  out.U = U;
  std::vector<Scalar> z;
  std::vector<Scalar> y;
  for (Index i = q - 1; i >= 0; --i) {
    const Index r = detail::cells_in_column(P, i);
    detail::sherman_morrison_column(P, C, U.col(i), i, r, opts, out, z);
    for (Index k = 0; k < i; ++k) {
      y.assign(static_cast<std::size_t>(r), Scalar(0));
      for (Index j = 0; j < n; ++j) {
        y[static_cast<std::size_t>(P(j, i))] += out.U(j, i) * U(j, k);
      }
      for (Index j = 0; j < n; ++j) {
        out.U(j, k) +=
            out.C(j, i) * out.U(j, i) * y[static_cast<std::size_t>(P(j, i))];
      }
    }
  }
  return out;
}

/*
 * invert() specialised to U = u 1^T in O(n q).
 *
 * With identical columns every coarser column receives the same update, so
 * U'(:, i-1) equals U'(:, i) plus the single update contributed by column i.
 */
template <typename Scalar, typename DerivedU>
InverseResult<Scalar> invert_shared_u(const PartitionMatrix &P,
                                      const Matrix<Scalar> &C,
                                      const Eigen::MatrixBase<DerivedU> &u,
                                      const InvertOptions &opts = {}) {
  const Index n = P.rows();
  const Index q = P.cols();
  if (u.size() != n) {
    throw DimensionError("invert_shared_u: u has length " +
                         std::to_string(u.size()) + ", expected " +
                         std::to_string(n));
  }
  InverseResult<Scalar> out;
  out.U = u.derived().replicate(1, q);
  if (opts.check_preconditions) {
    check_symmetric(P, C, out.U);
  }
  out.C = Matrix<Scalar>::Zero(n, q);
  std::vector<Scalar> z;
  std::vector<Scalar> y;
  for (Index i = q - 1; i >= 0; --i) {
    const Index r = detail::cells_in_column(P, i);
    detail::sherman_morrison_column(P, C, u, i, r, opts, out, z);
    if (i > 0) {
      y.assign(static_cast<std::size_t>(r), Scalar(0));
      out.U.col(i - 1) = out.U.col(i);
      for (Index j = 0; j < n; ++j) {
        y[static_cast<std::size_t>(P(j, i))] += out.U(j, i) * u(j);
      }
      for (Index j = 0; j < n; ++j) {
        out.U(j, i - 1) +=
            out.C(j, i) * out.U(j, i) * y[static_cast<std::size_t>(P(j, i))];
      }
    }
  }
  return out;
}

/*
 * sum_l c^(l) (sum_{j in cell l} u_j)^2, i.e. the sum of all entries of
 * L(p, c, u). Accumulates signed cell sums so negative c needs no complex
 * arithmetic.
 */
template <typename DerivedP, typename DerivedC, typename DerivedU>
typename DerivedU::Scalar trace_part(const Eigen::MatrixBase<DerivedP> &p,
                                     const Eigen::MatrixBase<DerivedC> &c,
                                     const Eigen::MatrixBase<DerivedU> &u,
                                     bool check = true) {
  using Scalar = typename DerivedU::Scalar;
  const Index n = p.size();
  if (c.size() != n || u.size() != n) {
    throw DimensionError("trace_part: lengths " + std::to_string(n) + ", " +
                         std::to_string(c.size()) + ", " +
                         std::to_string(u.size()));
  }
  if (check && !detail::cell_constant(p, c)) {
    throw PreconditionError("trace_part: c is not constant within cells");
  }
  const auto r = static_cast<std::size_t>(detail::max_id(p) + 1);
  std::vector<Scalar> sums(r, Scalar(0));
  std::vector<Scalar> cell_c(r, Scalar(0));
  for (Index j = 0; j < n; ++j) {
    const auto l = static_cast<std::size_t>(p(j));
    sums[l] += u(j);
    cell_c[l] = c(j);
  }
  Scalar total(0);
  for (std::size_t l = 0; l < r; ++l) {
    total += cell_c[l] * sums[l] * sums[l];
  }
  return total;
}

} // namespace btgp

#endif // BTGP_SROS_HPP
