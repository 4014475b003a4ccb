#pragma once

// Linear Gaussian state-space engine.
//
//   X_{t+1} = T_t X_t + eta_t,   eta_t ~ N(0, Q)
//   Y_t     = Z X_t + eps_t,     eps_t ~ N(0, H)
//   X_1     ~ N(a1, P1)
//
// Observations are processed one row at a time after decorrelating H on the
// rows observed at step t (H_o = P^T L D L^T P, y* = L^{-1} P y). The unit
// triangular transform has Jacobian one, so the scalar updates reproduce the
// multivariate predict/update recursion and its exact log-likelihood, while
// staying well conditioned under large ("Big K") initial variances.

#include <cmath>
#include <concepts>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ebmss/errors.hpp"
#include "ebmss/linalg.hpp"
#include "ebmss/panel.hpp"

namespace ebmss {

/// Transition entry that changes with t: T_t(row, col) = values(t).
template <typename Scalar>
struct VaryingEntry {
  Index row = 0;
  Index col = 0;
  Vector<Scalar> values;
};

template <typename Scalar>
struct SystemMatrices {
  Matrix<Scalar> transition;   // m x m base matrix
  Matrix<Scalar> measurement;  // p x m
  Matrix<Scalar> state_cov;    // Q, m x m
  Matrix<Scalar> obs_cov;      // H, p x p
  Vector<Scalar> init_mean;    // a1
  Matrix<Scalar> init_cov;     // P1
  std::optional<VaryingEntry<Scalar>> varying;

  Index state_dim() const { return transition.rows(); }
  Index obs_dim() const { return measurement.rows(); }

  /// T_t, the matrix mapping X_t to X_{t+1} (t is zero-based).
  Matrix<Scalar> transition_at(Index t) const {
    Matrix<Scalar> out = transition;
    if (varying) out(varying->row, varying->col) = varying->values(t);
    return out;
  }

  /// Dimension and covariance checks. `steps` is the number of time points the
  /// model will be run over; the varying entry must cover steps - 1 transitions.
  void validate(Index steps) const {
    const Index m = state_dim();
    const Index p = obs_dim();
    if (transition.cols() != m || state_cov.rows() != m || state_cov.cols() != m ||
        init_mean.size() != m || init_cov.rows() != m || init_cov.cols() != m ||
        measurement.cols() != m || obs_cov.rows() != p || obs_cov.cols() != p)
      throw input_error("system matrices: inconsistent dimensions");
    if (varying) {
      if (varying->row < 0 || varying->row >= m || varying->col < 0 || varying->col >= m)
        throw input_error("system matrices: varying entry outside the transition matrix");
      if (varying->values.size() < steps - 1)
        throw input_error("system matrices: varying transition entry does not cover the sample");
    }
    check_psd(state_cov, "state covariance Q");
    check_psd(obs_cov, "observation covariance H");
    check_psd(init_cov, "initial covariance P1");
  }

 private:
  static void check_psd(const Matrix<Scalar>& a, const char* what) {
    if (a.rows() == 0) return;
    const Scalar scale = std::max(Scalar(1), a.cwiseAbs().maxCoeff());
    if (max_asymmetry(a) > Scalar(1e-10) * scale)
      throw input_error(std::string(what) + " is not symmetric");
    if (min_eigenvalue(a) < -Scalar(1e-10) * scale)
      throw input_error(std::string(what) + " is not positive semidefinite");
  }
};

template <typename Scalar>
struct FilterResult {
  std::vector<Vector<Scalar>> pred_mean;  // a_{t|t-1}
  std::vector<Matrix<Scalar>> pred_cov;   // P_{t|t-1}
  std::vector<Vector<Scalar>> filt_mean;  // a_{t|t}
  std::vector<Matrix<Scalar>> filt_cov;   // P_{t|t}
  /// v_t and F_t on the rows observed at t, listed in `observed_rows[t]`.
  std::vector<Vector<Scalar>> innovations;
  std::vector<Matrix<Scalar>> innovation_cov;
  std::vector<std::vector<Index>> observed_rows;
  Vector<Scalar> loglik_terms;
  Scalar loglik = 0;
  Index n_series = 0;

  Index n_steps() const { return static_cast<Index>(filt_mean.size()); }
};

template <typename Scalar>
struct SmootherResult {
  std::vector<Vector<Scalar>> smooth_mean;
  std::vector<Matrix<Scalar>> smooth_cov;
};

namespace detail {

/// Observation block for one missing-data pattern, decorrelated.
template <typename Scalar>
struct DecorrelatedBlock {
  std::vector<Index> rows;
  Matrix<Scalar> z;       // W Z_o
  Vector<Scalar> d;       // diagonal of the decorrelated H
  Matrix<Scalar> w;       // W = L^{-1} P, unused when `diagonal`
  bool diagonal = false;
};

template <typename Scalar>
DecorrelatedBlock<Scalar> decorrelate(const SystemMatrices<Scalar>& model, std::vector<Index> rows) {
  DecorrelatedBlock<Scalar> block;
  const auto k = static_cast<Index>(rows.size());
  const Index m = model.state_dim();
  Matrix<Scalar> h(k, k);
  Matrix<Scalar> z(k, m);
  for (Index a = 0; a < k; ++a) {
    z.row(a) = model.measurement.row(rows[a]);
    for (Index b = 0; b < k; ++b) h(a, b) = model.obs_cov(rows[a], rows[b]);
  }
  block.rows = std::move(rows);
  block.diagonal = h.isDiagonal(Scalar(0));
  if (block.diagonal) {
    block.z = std::move(z);
    block.d = h.diagonal();
  } else {
    Eigen::LDLT<Matrix<Scalar>> ldlt(h);
    if (ldlt.info() != Eigen::Success) throw numerical_error("observation covariance H: LDLT failed");
    Matrix<Scalar> w = ldlt.transpositionsP() * Matrix<Scalar>::Identity(k, k);
    ldlt.matrixL().solveInPlace(w);
    block.w = std::move(w);
    block.z = block.w * z;
    block.d = ldlt.vectorD();
  }
  for (Index a = 0; a < k; ++a)
    if (!(block.d(a) >= Scalar(0))) throw numerical_error("observation covariance H is not positive semidefinite");
  return block;
}

/// Shared recursion behind kalman_filter and log_likelihood. When `out` is null
/// nothing but the log-likelihood is produced.
template <typename Scalar>
Scalar run_filter(const SystemMatrices<Scalar>& model, const ObservationPanel& panel,
                  FilterResult<Scalar>* out) {
  const Index m = model.state_dim();
  const Index p = model.obs_dim();
  const Index n = panel.n_steps();
  if (panel.n_series() != p) throw input_error("kalman filter: panel rows do not match measurement matrix");
  if (n == 0) throw input_error("kalman filter: empty panel");
  model.validate(n);

  const Scalar log2pi = std::log(Scalar(2) * std::numbers::pi_v<Scalar>);
  std::vector<DecorrelatedBlock<Scalar>> blocks;
  std::vector<Index> rows;
  rows.reserve(static_cast<std::size_t>(p));

  Matrix<Scalar> trans = model.transition;
  Vector<Scalar> a = model.init_mean;
  Matrix<Scalar> cov = model.init_cov;
  Vector<Scalar> y_star;
  Vector<Scalar> pz(m);
  Scalar total = 0;

  if (out) {
    *out = FilterResult<Scalar>{};
    out->n_series = p;
    out->loglik_terms = Vector<Scalar>::Zero(n);
  }

  for (Index t = 0; t < n; ++t) {
    rows.clear();
    for (Index i = 0; i < p; ++i)
      if (panel.observed(i, t)) rows.push_back(i);

    if (out) {
      out->pred_mean.push_back(a);
      out->pred_cov.push_back(cov);
      const auto k = static_cast<Index>(rows.size());
      Vector<Scalar> v(k);
      Matrix<Scalar> zo(k, m);
      Matrix<Scalar> f(k, k);
      for (Index r = 0; r < k; ++r) {
        zo.row(r) = model.measurement.row(rows[r]);
        v(r) = static_cast<Scalar>(panel.values(rows[r], t));
      }
      v.noalias() -= zo * a;
      f.noalias() = zo * cov * zo.transpose();
      for (Index r = 0; r < k; ++r)
        for (Index c = 0; c < k; ++c) f(r, c) += model.obs_cov(rows[r], rows[c]);
      symmetrize(f);
      out->innovations.push_back(std::move(v));
      out->innovation_cov.push_back(std::move(f));
      out->observed_rows.push_back(rows);
    }

    Scalar step_ll = 0;
    if (!rows.empty()) {
      const DecorrelatedBlock<Scalar>* block = nullptr;
      for (const auto& b : blocks)
        if (b.rows == rows) block = &b;
      if (!block) {
        blocks.push_back(decorrelate(model, rows));
        block = &blocks.back();
      }
      const auto k = static_cast<Index>(rows.size());
      y_star.resize(k);
      for (Index r = 0; r < k; ++r) y_star(r) = static_cast<Scalar>(panel.values(rows[r], t));
      if (!block->diagonal) y_star = (block->w * y_star).eval();

      for (Index r = 0; r < k; ++r) {
        const auto z = block->z.row(r);
        pz.noalias() = cov * z.transpose();
        const Scalar f = z.dot(pz) + block->d(r);
        Scalar scale = block->d(r);
        for (Index j = 0; j < m; ++j) scale += z(j) * z(j) * std::abs(cov(j, j));
        if (!std::isfinite(f) || !(f > Scalar(1e-13) * scale) || !(f > Scalar(0)))
          throw numerical_error("kalman filter: innovation variance not positive at step " +
                                std::to_string(t));
        const Scalar v = y_star(r) - z.dot(a);
        a.noalias() += pz * (v / f);
        cov.noalias() -= (pz / f) * pz.transpose();
        step_ll -= Scalar(0.5) * (log2pi + std::log(f) + v * v / f);
      }
      symmetrize(cov);
    }
    total += step_ll;

    if (out) {
      out->loglik_terms(t) = step_ll;
      out->filt_mean.push_back(a);
      out->filt_cov.push_back(cov);
    }

    if (t + 1 < n) {
      if (model.varying) trans(model.varying->row, model.varying->col) = model.varying->values(t);
      a = (trans * a).eval();
      cov = (trans * cov * trans.transpose()).eval();
      cov += model.state_cov;
      symmetrize(cov);
    }
  }
  if (!std::isfinite(total)) throw numerical_error("kalman filter: log-likelihood is not finite");
  if (out) out->loglik = total;
  return total;
}

}  // namespace detail

/// Kalman filter with missing-data row deletion. Stores predicted and filtered
/// moments, innovations and per-step log-likelihood contributions.
template <typename Scalar>
FilterResult<Scalar> kalman_filter(const SystemMatrices<Scalar>& model, const ObservationPanel& panel) {
  FilterResult<Scalar> out;
  detail::run_filter(model, panel, &out);
  return out;
}

/// Exact Gaussian log-likelihood of the observed cells; same recursion as
/// kalman_filter without storing intermediate moments.
template <typename Scalar>
Scalar log_likelihood(const SystemMatrices<Scalar>& model, const ObservationPanel& panel) {
  return detail::run_filter<Scalar>(model, panel, nullptr);
}

/// Fixed-interval (Rauch-Tung-Striebel) smoother. The gain uses the
/// pseudo-inverse of P_{t+1|t}, so deterministic states with zero predicted
/// variance are handled without regularization.
template <typename Scalar>
SmootherResult<Scalar> kalman_smoother(const SystemMatrices<Scalar>& model, const FilterResult<Scalar>& filt) {
  const Index n = filt.n_steps();
  if (n == 0 || static_cast<Index>(filt.pred_mean.size()) != n ||
      static_cast<Index>(filt.pred_cov.size()) != n || static_cast<Index>(filt.filt_cov.size()) != n)
    throw input_error("kalman smoother: filter result has mismatched lengths");
  if (filt.filt_mean.front().size() != model.state_dim())
    throw input_error("kalman smoother: filter result does not match the model");
  if (model.varying && model.varying->values.size() < n - 1)
    throw input_error("kalman smoother: varying transition entry does not cover the sample");

  SmootherResult<Scalar> out;
  out.smooth_mean.resize(static_cast<std::size_t>(n));
  out.smooth_cov.resize(static_cast<std::size_t>(n));
  const auto last = static_cast<std::size_t>(n - 1);
  out.smooth_mean[last] = filt.filt_mean[last];
  out.smooth_cov[last] = filt.filt_cov[last];

  for (Index t = n - 2; t >= 0; --t) {
    const auto s = static_cast<std::size_t>(t);
    const Matrix<Scalar> trans = model.transition_at(t);
    const Matrix<Scalar> gain = filt.filt_cov[s] * trans.transpose() * pinv_symmetric(filt.pred_cov[s + 1]);
    out.smooth_mean[s] = filt.filt_mean[s] + gain * (out.smooth_mean[s + 1] - filt.pred_mean[s + 1]);
    Matrix<Scalar> c = filt.filt_cov[s] + gain * (out.smooth_cov[s + 1] - filt.pred_cov[s + 1]) * gain.transpose();
    symmetrize(c);
    out.smooth_cov[s] = std::move(c);
  }
  return out;
}

/// One-step prediction errors scaled by F_t^{-1/2} (symmetric square root).
/// Returns a p x n matrix; cells that were missing, or that fall in the first
/// `skip_steps` steps, are NaN.
template <typename Scalar>
Matrix<Scalar> standardized_innovations(const FilterResult<Scalar>& filt, Index skip_steps = 0) {
  const Index n = filt.n_steps();
  Matrix<Scalar> out = Matrix<Scalar>::Constant(filt.n_series, n, std::numeric_limits<Scalar>::quiet_NaN());
  for (Index t = skip_steps; t < n; ++t) {
    const auto s = static_cast<std::size_t>(t);
    const auto& rows = filt.observed_rows[s];
    if (rows.empty()) continue;
    Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(filt.innovation_cov[s]);
    const auto& ev = es.eigenvalues();
    if (!(ev.minCoeff() > Scalar(0)))
      throw numerical_error("standardized innovations: F_t not positive definite at step " + std::to_string(t));
    const Matrix<Scalar> inv_root =
        es.eigenvectors() * ev.cwiseSqrt().cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
    const Vector<Scalar> e = inv_root * filt.innovations[s];
    for (std::size_t r = 0; r < rows.size(); ++r) out(rows[r], t) = e(static_cast<Index>(r));
  }
  return out;
}

template <typename Scalar>
struct SimulatedPath {
  Matrix<Scalar> states;   // m x n
  ObservationPanel panel;  // p x n, fully observed
};

/// Unconditional draw of states and observations. Normals are consumed in a
/// fixed order (X_1, then per step: measurement noise, state noise) so a given
/// engine state always yields the same path.
template <typename Scalar, std::uniform_random_bit_generator Engine>
SimulatedPath<Scalar> simulate_ssm(const SystemMatrices<Scalar>& model, Index horizon, Engine& rng,
                                   int first_year = 1) {
  if (horizon < 1) throw input_error("simulate_ssm: horizon must be positive");
  model.validate(horizon);
  const Index m = model.state_dim();
  const Index p = model.obs_dim();
  const Matrix<Scalar> p1_root = psd_factor<Scalar>(model.init_cov, "initial covariance P1");
  const Matrix<Scalar> q_root = psd_factor<Scalar>(model.state_cov, "state covariance Q");
  const Matrix<Scalar> h_root = psd_factor<Scalar>(model.obs_cov, "observation covariance H");
  const bool q_zero = model.state_cov.isZero(0);
  const bool h_zero = model.obs_cov.isZero(0);

  std::normal_distribution<double> normal;
  auto draw = [&](Index k) {
    Vector<Scalar> z(k);
    for (Index i = 0; i < k; ++i) z(i) = static_cast<Scalar>(normal(rng));
    return z;
  };

  SimulatedPath<Scalar> out;
  out.states.resize(m, horizon);
  Eigen::MatrixXd obs(p, horizon);
  Matrix<Scalar> trans = model.transition;
  Vector<Scalar> x = model.init_mean;
  if (!model.init_cov.isZero(0)) x += p1_root * draw(m);
  for (Index t = 0; t < horizon; ++t) {
    out.states.col(t) = x;
    Vector<Scalar> y = model.measurement * x;
    const Vector<Scalar> eps = draw(p);
    if (!h_zero) y += h_root * eps;
    obs.col(t) = y.template cast<double>();
    const Vector<Scalar> eta = draw(m);
    if (t + 1 < horizon) {
      if (model.varying) trans(model.varying->row, model.varying->col) = model.varying->values(t);
      Vector<Scalar> next = trans * x;
      if (!q_zero) next += q_root * eta;
      x = std::move(next);
    }
  }
  out.panel = ObservationPanel::unlabeled(std::move(obs), first_year);
  return out;
}

template <typename Scalar>
SimulatedPath<Scalar> simulate_ssm(const SystemMatrices<Scalar>& model, Index horizon, std::uint64_t seed,
                                   int first_year = 1) {
  std::mt19937_64 rng(seed);
  return simulate_ssm(model, horizon, rng, first_year);
}

}  // namespace ebmss
