#include "btgp/gp.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include "btgp/error.hpp"

namespace btgp {

Standardizer Standardizer::fit(const Eigen::VectorXd &y) {
  Standardizer s;
  if (y.size() == 0) {
    return s;
  }
  if (!y.allFinite()) {
    throw DataError("Standardizer: non-finite target");
  }
  s.mean = y.mean();
  const double var = (y.array() - s.mean).square().mean();
  s.scale = var > 0.0 ? std::sqrt(var) : 1.0;
  return s;
}

Eigen::VectorXd Standardizer::apply(const Eigen::VectorXd &y) const {
  return ((y.array() - mean) / scale).matrix();
}

Eigen::VectorXd Standardizer::invert(const Eigen::VectorXd &y) const {
  return (y.array() * scale + mean).matrix();
}

namespace {

constexpr InvertOptions kTrusted{.check_preconditions = false,
                                 .pd_tolerance = 1e-12};

} // namespace

NllResult nll(const KernelParams &params, const BitMatrix &train_bits,
              const Eigen::VectorXd &y) {
  const Index n = train_bits.rows();
  const Index q = train_bits.cols();
  if (y.size() != n) {
    throw DimensionError("nll: " + std::to_string(y.size()) + " targets for " +
                         std::to_string(n) + " points");
  }
  if (q != params.w.size()) {
    throw DimensionError("nll: bit width " + std::to_string(q) +
                         " vs parameter length " + std::to_string(params.w.size()));
  }
  if (!y.allFinite()) {
    throw DataError("nll: non-finite target");
  }
  const double lambda = params.lambda;
  NllResult out;
  out.P = build_partitions(permute_bits(train_bits, params.bit_order)).P;

  // (K + lambda I) = lambda (I + L(P, C / lambda, 1)).
  const Eigen::MatrixXd C_scaled = broadcast_weights(n, params.w) / lambda;
  auto inv = invert_shared_u(out.P, C_scaled, Eigen::VectorXd::Ones(n), kTrusted);
  out.Cinv = inv.C / lambda;
  out.Uinv = std::move(inv.U);
  out.logdet = inv.logdet + static_cast<double>(n) * std::log(lambda);
  out.z = lin_transform(out.P, out.P, out.Uinv, out.Cinv.cwiseProduct(out.Uinv), y) +
          y / lambda;
  out.nll = 0.5 * (y.dot(out.z) + out.logdet +
                   static_cast<double>(n) * std::log(2.0 * std::numbers::pi));
  return out;
}

Eigen::VectorXd nll_grad_w(const KernelParams &params, const NllResult &fit) {
  const Index n = fit.P.rows();
  const Index q = fit.P.cols();
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);

  // Terms with j > i use the partition of column j and do not depend on i.
  Eigen::VectorXd own(q);
  for (Index j = 0; j < q; ++j) {
    own(j) = trace_part(fit.P.col(j), fit.Cinv.col(j), fit.Uinv.col(j), false);
  }
  Eigen::VectorXd finer_tail = Eigen::VectorXd::Zero(q + 1);
  for (Index j = q - 1; j >= 0; --j) {
    finer_tail(j) = finer_tail(j + 1) + own(j);
  }

  // Column i refines every column j <= i, so Cinv(:, j) is constant on the
  // cells of column i. A singleton cell {k} contributes Cinv(k, j) Uinv(k, j)^2
  // for every j <= i, which `diag` accumulates per point; only points in
  // shared cells need the cell sums.
  Eigen::VectorXd grad(q);
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  std::vector<Index> size;
  std::vector<double> sums;
  std::vector<double> cell_c;
  std::vector<Index> shared_points;
  std::vector<PartitionId> shared_cells;
  for (Index i = 0; i < q; ++i) {
    diag += fit.Cinv.col(i).cwiseProduct(fit.Uinv.col(i).cwiseAbs2());
    const double quad = trace_part(fit.P.col(i), ones, fit.z, false);
    double trace = static_cast<double>(n) / params.lambda + finer_tail(i + 1);

    const PartitionId *p = fit.P.col(i).data();
    const auto r = static_cast<std::size_t>(fit.P.col(i).maxCoeff()) + 1;
    size.assign(r, 0);
    for (Index k = 0; k < n; ++k) {
      ++size[static_cast<std::size_t>(p[k])];
    }
    shared_points.clear();
    shared_cells.clear();
    for (Index k = 0; k < n; ++k) {
      auto &count = size[static_cast<std::size_t>(p[k])];
      if (count == 1) {
        trace += diag(k);
      } else {
        shared_points.push_back(k);
        if (count > 1) {
          shared_cells.push_back(p[k]);
          count = -count; // mark the cell as listed
        }
      }
    }
    if (!shared_points.empty()) {
      sums.assign(r, 0.0);
      cell_c.assign(r, 0.0);
      for (Index j = 0; j <= i; ++j) {
        const double *u = fit.Uinv.col(j).data();
        const double *c = fit.Cinv.col(j).data();
        for (const Index k : shared_points) {
          sums[static_cast<std::size_t>(p[k])] += u[k];
          cell_c[static_cast<std::size_t>(p[k])] = c[k];
        }
        for (const PartitionId l : shared_cells) {
          auto &total = sums[static_cast<std::size_t>(l)];
          trace += cell_c[static_cast<std::size_t>(l)] * total * total;
          total = 0.0;
        }
      }
    }
    grad(i) = 0.5 * (trace - quad);
  }
  return grad;
}

PhiObjective nll_and_grad_phi(const Eigen::VectorXd &phi, double lambda,
                              const BitMatrix &train_bits,
                              const Eigen::VectorXd &y) {
  PhiObjective out;
  auto params = params_from_phi(phi, lambda);
  auto fit = nll(params, train_bits, y);
  out.nll = fit.nll;
  out.ties = has_theta_ties(params.theta);
  if (out.ties) {
    std::mt19937_64 rng(0x5eedULL);
    std::uniform_int_distribution<int> sign(0, 1);
    Eigen::VectorXd jittered = phi;
    for (Index k = 0; k < jittered.size(); ++k) {
      jittered(k) += sign(rng) ? 1e-10 : -1e-10;
    }
    params = params_from_phi(jittered, lambda);
    fit = nll(params, train_bits, y);
  }
  out.grad = grad_w_to_phi(nll_grad_w(params, fit), params).grad;
  return out;
}

std::string to_string(TrainStatus status) {
  switch (status) {
  case TrainStatus::converged:
    return "converged";
  case TrainStatus::max_iterations:
    return "max_iterations";
  case TrainStatus::diverged:
    return "diverged";
  }
  return "unknown";
}

TrainedModel fit_model(const BitMatrix &train_bits, const Eigen::VectorXd &y,
                       const KernelParams &params) {
  auto fit = nll(params, train_bits, y);
  TrainedModel model;
  model.params = params;
  model.train_bits = train_bits;
  model.P = std::move(fit.P);
  model.Cinv = std::move(fit.Cinv);
  model.Uinv = std::move(fit.Uinv);
  model.z = std::move(fit.z);
  model.logdet = fit.logdet;
  model.train_nll = fit.nll;
  return model;
}

TrainedModel train(const BitMatrix &train_bits, const Eigen::VectorXd &y,
                   const Eigen::VectorXd &phi0, const TrainOptions &opts) {
  const Index n = train_bits.rows();
  if (n < 1) {
    throw DataError("train: no training points");
  }
  if (phi0.size() != train_bits.cols()) {
    throw DimensionError("train: phi0 has length " + std::to_string(phi0.size()) +
                         ", expected " + std::to_string(train_bits.cols()));
  }
  if (!phi0.allFinite() || !y.allFinite()) {
    throw DataError("train: non-finite input");
  }
  const double lambda = opts.lambda > 0.0 ? opts.lambda : 1.0 / static_cast<double>(n);
  constexpr double inf = std::numeric_limits<double>::infinity();
  int tie_events = 0;

  auto value = [&](const Eigen::VectorXd &phi) {
    if (!phi.allFinite()) {
      return inf;
    }
    try {
      return nll(params_from_phi(phi, lambda), train_bits, y).nll;
    } catch (const NumericalError &) {
      return inf;
    }
  };
  auto value_and_gradient = [&](const Eigen::VectorXd &phi, Eigen::VectorXd &grad) {
    try {
      auto obj = nll_and_grad_phi(phi, lambda, train_bits, y);
      tie_events += obj.ties ? 1 : 0;
      grad = std::move(obj.grad);
      return obj.nll;
    } catch (const NumericalError &) {
      grad = Eigen::VectorXd::Constant(phi.size(), std::numeric_limits<double>::quiet_NaN());
      return inf;
    }
  };

  const auto result = minimize_bfgs(value, value_and_gradient, phi0, opts.bfgs);
  TrainedModel model = fit_model(train_bits, y, params_from_phi(result.x, lambda));
  switch (result.status) {
  case OptimizerStatus::converged_gradient:
  case OptimizerStatus::converged_value:
  case OptimizerStatus::line_search_failed:
    // A failed loss-only line search means no further decrease is resolvable
    // along the quasi-Newton direction.
    model.status = TrainStatus::converged;
    break;
  case OptimizerStatus::max_iterations:
    model.status = TrainStatus::max_iterations;
    break;
  case OptimizerStatus::diverged:
    model.status = TrainStatus::diverged;
    break;
  }
  model.iterations = result.iterations;
  model.tie_events = tie_events;
  model.nll_history = result.history;
  return model;
}

PredictiveOutput predict_standardized(const TrainedModel &model,
                                      const BitMatrix &test_bits,
                                      const std::vector<bool> &out_of_box) {
  const Index m = test_bits.rows();
  const Index q = model.bits();
  if (test_bits.cols() != q) {
    throw DimensionError("predict: test points have " +
                         std::to_string(test_bits.cols()) +
                         " bits, model expects " + std::to_string(q));
  }
  if (!out_of_box.empty() && static_cast<Index>(out_of_box.size()) != m) {
    throw DimensionError("predict: out_of_box flags do not match test rows");
  }
  const double lambda = model.params.lambda;
  PredictiveOutput out;
  out.mu = Eigen::VectorXd::Zero(m);
  // Prior at points with a zeroed cross-kernel row: k(x, x) + lambda.
  out.sigma2 = Eigen::VectorXd::Constant(m, 1.0 + lambda);

  std::vector<Index> inside;
  inside.reserve(static_cast<std::size_t>(m));
  for (Index j = 0; j < m; ++j) {
    if (out_of_box.empty() || !out_of_box[static_cast<std::size_t>(j)]) {
      inside.push_back(j);
    }
  }
  if (inside.empty()) {
    return out;
  }
  const auto m_in = static_cast<Index>(inside.size());
  BitMatrix test_in(m_in, q);
  for (Index k = 0; k < m_in; ++k) {
    test_in.row(k) = test_bits.row(inside[static_cast<std::size_t>(k)]);
  }
  const auto &order = model.params.bit_order;
  const auto parts = assemble_joint(permute_bits(model.train_bits, order),
                                    permute_bits(test_in, order), model.params.w);

  // mu = K_X'X z
  const Eigen::VectorXd mu_in = lin_transform(parts.cross_transposed(), model.z);

  // Predictive covariance as the inverse of the test block of
  // (K_joint + lambda I)^{-1} = lambda^{-1} (I + L(P, C', U')).
  const Index total = parts.n + parts.m;
  const Eigen::MatrixXd C_scaled = broadcast_weights(total, parts.w) / lambda;
  const auto joint_inv =
      invert_shared_u(parts.joint_P, C_scaled, Eigen::VectorXd::Ones(total), kTrusted);
  const PartitionMatrix test_P = canonicalize_columns(PartitionMatrix(parts.test_P()));
  const Eigen::MatrixXd C_prec = joint_inv.C.bottomRows(m_in);
  const Eigen::MatrixXd U_prec = joint_inv.U.bottomRows(m_in);
  const auto cov = invert(test_P, C_prec, U_prec, kTrusted);
  const Eigen::VectorXd sigma2_in =
      lambda * (1.0 + (cov.C.array() * cov.U.array().square()).rowwise().sum());

  for (Index k = 0; k < m_in; ++k) {
    const Index j = inside[static_cast<std::size_t>(k)];
    out.mu(j) = mu_in(k);
    out.sigma2(j) = sigma2_in(k);
  }
  return out;
}

PredictiveOutput predict(const TrainedModel &model, const BitMatrix &test_bits,
                         const std::vector<bool> &out_of_box) {
  auto out = predict_standardized(model, test_bits, out_of_box);
  const auto &s = model.standardizer;
  out.mu = s.invert(out.mu);
  out.sigma2 *= s.scale * s.scale;
  return out;
}

Eigen::VectorXd gaussian_nll(const Eigen::VectorXd &y, const Eigen::VectorXd &mu,
                             const Eigen::VectorXd &sigma2) {
  if (y.size() != mu.size() || y.size() != sigma2.size()) {
    throw DimensionError("gaussian_nll: length mismatch");
  }
  return (0.5 * ((2.0 * std::numbers::pi * sigma2.array()).log() +
                 (y - mu).array().square() / sigma2.array()))
      .matrix();
}

} // namespace btgp
