#include "btgp/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "btgp/error.hpp"

namespace btgp {

WeightVector::WeightVector(Eigen::VectorXd w) : w_(std::move(w)) {
  if (!w_.allFinite() || (w_.size() > 0 && w_.minCoeff() < 0.0)) {
    throw PreconditionError("WeightVector: weights must be finite and >= 0");
  }
  if (std::abs(w_.sum() - 1.0) > 1e-9) {
    throw PreconditionError("WeightVector: weights sum to " +
                            std::to_string(w_.sum()) + ", expected 1");
  }
}

WeightVector WeightVector::uniform(Index q) {
  return WeightVector(Eigen::VectorXd::Constant(q, 1.0 / static_cast<double>(q)));
}

Index common_prefix(std::span<const std::uint8_t> a,
                    std::span<const std::uint8_t> b) {
  const auto q = std::min(a.size(), b.size());
  std::size_t l = 0;
  while (l < q && a[l] == b[l]) {
    ++l;
  }
  return static_cast<Index>(l);
}

double kernel_value(const WeightVector &w, std::span<const std::uint8_t> a,
                    std::span<const std::uint8_t> b) {
  if (a.size() != b.size() || static_cast<Index>(a.size()) != w.size()) {
    throw DimensionError("kernel_value: bit strings of length " +
                         std::to_string(a.size()) + " and " +
                         std::to_string(b.size()) + " with " +
                         std::to_string(w.size()) + " weights");
  }
  return w.values().head(common_prefix(a, b)).sum();
}

Eigen::MatrixXd broadcast_weights(Index n, const WeightVector &w) {
  return Eigen::VectorXd::Ones(n) * w.values().transpose();
}

SrosSymmetric<double> assemble_kernel(const BitMatrix &bits,
                                      const WeightVector &w) {
  if (bits.cols() != w.size()) {
    throw DimensionError("assemble_kernel: " + std::to_string(bits.cols()) +
                         " bits vs " + std::to_string(w.size()) + " weights");
  }
  SrosSymmetric<double> K;
  K.P = build_partitions(bits).P;
  K.C = broadcast_weights(bits.rows(), w);
  K.U = Eigen::MatrixXd::Ones(bits.rows(), bits.cols());
  return K;
}

SrosSymmetric<double> JointKernelParts::train() const {
  return {PartitionMatrix(train_P()), broadcast_weights(n, w),
          Eigen::MatrixXd::Ones(n, joint_P.cols())};
}

SrosRect<double> JointKernelParts::cross() const {
  return {PartitionMatrix(train_P()), PartitionMatrix(test_P()),
          broadcast_weights(n, w), Eigen::MatrixXd::Ones(m, joint_P.cols())};
}

SrosRect<double> JointKernelParts::cross_transposed() const {
  return {PartitionMatrix(test_P()), PartitionMatrix(train_P()),
          Eigen::MatrixXd::Ones(m, joint_P.cols()), broadcast_weights(n, w)};
}

SrosSymmetric<double> JointKernelParts::joint() const {
  return {joint_P, broadcast_weights(n + m, w),
          Eigen::MatrixXd::Ones(n + m, joint_P.cols())};
}

JointKernelParts assemble_joint(const BitMatrix &train_bits,
                                const BitMatrix &test_bits,
                                const WeightVector &w) {
  if (train_bits.cols() != w.size() || test_bits.cols() != w.size()) {
    throw DimensionError("assemble_joint: bit widths " +
                         std::to_string(train_bits.cols()) + "/" +
                         std::to_string(test_bits.cols()) + " vs " +
                         std::to_string(w.size()) + " weights");
  }
  BitMatrix all(train_bits.rows() + test_bits.rows(), w.size());
  all << train_bits, test_bits;
  JointKernelParts parts;
  parts.joint_P = build_partitions(all).P;
  parts.n = train_bits.rows();
  parts.m = test_bits.rows();
  parts.w = w;
  return parts;
}

KernelParams params_from_phi(const Eigen::VectorXd &phi, double lambda) {
  if (!phi.allFinite()) {
    throw DataError("params_from_phi: non-finite phi");
  }
  if (!(lambda > 0.0)) {
    throw PreconditionError("params_from_phi: lambda must be > 0");
  }
  const Index q = phi.size();
  KernelParams params;
  params.phi = phi;
  params.lambda = lambda;
  params.theta = (phi.array() - phi.maxCoeff()).exp().matrix();
  params.bit_order.resize(static_cast<std::size_t>(q));
  std::iota(params.bit_order.begin(), params.bit_order.end(), Index{0});
  std::stable_sort(params.bit_order.begin(), params.bit_order.end(),
                   [&](Index a, Index b) {
                     return params.theta(a) > params.theta(b);
                   });
  Eigen::VectorXd w(q);
  for (Index k = 0; k < q; ++k) {
    const double here = params.theta(params.bit_order[static_cast<std::size_t>(k)]);
    const double next =
        k + 1 < q ? params.theta(params.bit_order[static_cast<std::size_t>(k + 1)])
                  : 0.0;
    w(k) = here - next;
  }
  // Telescoping sum is theta_max = 1 up to rounding.
  w /= w.sum();
  params.w = WeightVector(std::move(w));
  return params;
}

Eigen::VectorXd phi_from_weights(const Eigen::VectorXd &sorted_weights,
                                 const std::vector<Index> &order) {
  const Index q = sorted_weights.size();
  if (static_cast<Index>(order.size()) != q) {
    throw DimensionError("phi_from_weights: order/weights length mismatch");
  }
  if (q > 0 && !(sorted_weights.minCoeff() > 0.0)) {
    throw PreconditionError("phi_from_weights: weights must be > 0");
  }
  Eigen::VectorXd phi(q);
  double tail = 0.0;
  const double total = sorted_weights.sum();
  for (Index k = q - 1; k >= 0; --k) {
    tail += sorted_weights(k);
    phi(order[static_cast<std::size_t>(k)]) = std::log(tail / total);
  }
  return phi;
}

bool has_theta_ties(const Eigen::VectorXd &theta, double tol) {
  std::vector<double> sorted(theta.data(), theta.data() + theta.size());
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t k = 1; k < sorted.size(); ++k) {
    if (sorted[k] - sorted[k - 1] <= tol) {
      return true;
    }
  }
  return false;
}

PhiGradient grad_w_to_phi(const Eigen::VectorXd &grad_w,
                          const KernelParams &params) {
  const Index q = params.phi.size();
  if (grad_w.size() != q) {
    throw DimensionError("grad_w_to_phi: gradient has length " +
                         std::to_string(grad_w.size()) + ", expected " +
                         std::to_string(q));
  }
  PhiGradient out;
  out.ties = has_theta_ties(params.theta);
  // d nll / d theta in original coordinates.
  Eigen::VectorXd g_theta(q);
  for (Index k = 0; k < q; ++k) {
    const double prev = k > 0 ? grad_w(k - 1) : 0.0;
    g_theta(params.bit_order[static_cast<std::size_t>(k)]) = grad_w(k) - prev;
  }
  out.grad = Eigen::VectorXd::Zero(q);
  if (q == 0) {
    return out;
  }
  const Index top = params.bit_order.front();
  double through_max = 0.0;
  for (Index j = 0; j < q; ++j) {
    if (j == top) {
      continue;
    }
    const double contribution = g_theta(j) * params.theta(j);
    out.grad(j) = contribution;
    through_max -= contribution;
  }
  out.grad(top) = through_max;
  return out;
}

} // namespace btgp
