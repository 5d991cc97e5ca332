#ifndef BTGP_KERNEL_HPP
#define BTGP_KERNEL_HPP

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "btgp/encoding.hpp"
#include "btgp/sros.hpp"

namespace btgp {

/*
 * Nonnegative weights summing to one. Entry i weighs agreement on the first
 * i + 1 bits.
 */
class WeightVector {
public:
  WeightVector() = default;
  explicit WeightVector(Eigen::VectorXd w);

  static WeightVector uniform(Index q);

  const Eigen::VectorXd &values() const { return w_; }
  Index size() const { return w_.size(); }
  double operator[](Index i) const { return w_(i); }

private:
  Eigen::VectorXd w_;
};

// k_w(a, b) = sum of w over the common leading prefix of a and b.
double kernel_value(const WeightVector &w, std::span<const std::uint8_t> a,
                    std::span<const std::uint8_t> b);

// Length of the common leading prefix.
Index common_prefix(std::span<const std::uint8_t> a,
                    std::span<const std::uint8_t> b);

// K_XX = L(P, 1 w^T, 1) with P from build_partitions.
SrosSymmetric<double> assemble_kernel(const BitMatrix &bits,
                                      const WeightVector &w);

// C = 1 w^T for n rows.
Eigen::MatrixXd broadcast_weights(Index n, const WeightVector &w);

/*
 * Kernel pieces over the concatenation of n training and m test points.
 */
struct JointKernelParts {
  PartitionMatrix joint_P; // (n + m) x q
  Index n = 0;
  Index m = 0;
  WeightVector w;

  auto train_P() const { return joint_P.topRows(n); }
  auto test_P() const { return joint_P.bottomRows(m); }

  // K_XX
  SrosSymmetric<double> train() const;
  // K_XX', n x m
  SrosRect<double> cross() const;
  // K_X'X, m x n
  SrosRect<double> cross_transposed() const;
  // K over all n + m points
  SrosSymmetric<double> joint() const;
};

JointKernelParts assemble_joint(const BitMatrix &train_bits,
                                const BitMatrix &test_bits,
                                const WeightVector &w);

/*
 * Bit order and weights derived from one unconstrained vector phi:
 * theta = exp(phi) / max(exp(phi)); sorting theta descending gives the bit
 * order, adjacent differences of the sorted theta (with a trailing 0) give w.
 */
struct KernelParams {
  Eigen::VectorXd phi;
  Eigen::VectorXd theta;
  // Encoded position k of the trained kernel reads base position bit_order[k].
  std::vector<Index> bit_order;
  WeightVector w;
  double lambda = 1.0;
};

KernelParams params_from_phi(const Eigen::VectorXd &phi, double lambda);

// Inverse of params_from_phi up to the shift invariance of phi: the returned
// phi has max 0, sorts to `order`, and yields `sorted_weights`. All weights
// must be strictly positive so that theta has no ties.
Eigen::VectorXd phi_from_weights(const Eigen::VectorXd &sorted_weights,
                                 const std::vector<Index> &order);

// True when two theta entries are within `tol` of each other.
bool has_theta_ties(const Eigen::VectorXd &theta, double tol = 1e-12);

struct PhiGradient {
  Eigen::VectorXd grad;
  bool ties = false;
};

/*
 * Chain rule from d nll / d w to d nll / d phi:
 *   d nll / d theta_(k) = g_k - g_{k-1}          (sorted coordinates)
 *   d theta_j / d phi_j = theta_j,  d theta_j / d phi_max = -theta_j  (j != max)
 * and theta_max = 1 is constant. Valid where theta has no ties; ties are
 * reported but the one-sided value is still returned.
 */
PhiGradient grad_w_to_phi(const Eigen::VectorXd &grad_w,
                          const KernelParams &params);

} // namespace btgp

#endif // BTGP_KERNEL_HPP
