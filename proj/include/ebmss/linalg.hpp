#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>

#include "ebmss/errors.hpp"

namespace ebmss {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Eigen::Index;

template <typename Derived>
void symmetrize(Eigen::MatrixBase<Derived>& m) {
  m = (0.5 * (m + m.transpose())).eval();
}

template <typename Derived>
typename Derived::Scalar max_asymmetry(const Eigen::MatrixBase<Derived>& m) {
  if (m.rows() == 0) return 0;
  return (m - m.transpose()).cwiseAbs().maxCoeff();
}

/// Smallest eigenvalue of a symmetric matrix (0 for empty input).
template <typename Derived>
typename Derived::Scalar min_eigenvalue(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  if (m.rows() == 0) return Scalar(0);
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(m.derived(), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

/// Factor A with A = F F^T for a symmetric PSD matrix, tolerating exact
/// singularity. Eigenvalues below -tol * max(1, |A|) are rejected.
template <typename Scalar>
Matrix<Scalar> psd_factor(const Matrix<Scalar>& a, const char* what, Scalar tol = Scalar(1e-10)) {
  if (a.rows() == 0) return a;
  if (max_asymmetry(a) > tol * std::max(Scalar(1), a.cwiseAbs().maxCoeff()))
    throw numerical_error(std::string(what) + " is not symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(a);
  const Scalar scale = std::max(Scalar(1), es.eigenvalues().cwiseAbs().maxCoeff());
  if (es.eigenvalues().minCoeff() < -tol * scale)
    throw numerical_error(std::string(what) + " is not positive semidefinite");
  Vector<Scalar> root = es.eigenvalues().cwiseMax(Scalar(0)).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal();
}

/// Moore-Penrose inverse of a symmetric matrix via its eigendecomposition.
template <typename Scalar>
Matrix<Scalar> pinv_symmetric(const Matrix<Scalar>& a) {
  if (a.rows() == 0) return a;
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(a);
  const auto& ev = es.eigenvalues();
  const Scalar cutoff = ev.cwiseAbs().maxCoeff() * Scalar(a.rows()) *
                        std::numeric_limits<Scalar>::epsilon();
  Vector<Scalar> inv(ev.size());
  for (Index i = 0; i < ev.size(); ++i) inv(i) = std::abs(ev(i)) > cutoff ? Scalar(1) / ev(i) : Scalar(0);
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace ebmss
