#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "riplab/dense.hpp"
#include "riplab/errors.hpp"

namespace riplab {

/// A full measurement ensemble on n x n matrices: one sensing matrix per
/// (i, j) cell, stored with row k = i + j n holding vec(A_k)^T. nu is the
/// scaling that puts the ensemble gram matrix inside the unit spectral box.
struct SensingOperator {
  Eigen::Index n = 0;
  Eigen::Index m = 0;
  Matrix stacked;
  std::vector<std::pair<Eigen::Index, Eigen::Index>> labels;
  double nu = 1.0;
};

inline Vector apply(const SensingOperator& op, const Matrix& mat_in) {
  if (mat_in.rows() != op.n || mat_in.cols() != op.n)
    throw ValidationError("apply: matrix must be n x n");
  return op.stacked * vectorize(mat_in);
}

/// The hard ensemble with extreme-ratio width q = r - r_star + 1: generic
/// cells are scaled rank-one probes sqrt(kappa) u_i u_j^T, while the first
/// q + 1 diagonal cells are replaced by unit-norm diagonal probes chosen so
/// that all rows stay pairwise orthogonal and the gram spectrum collapses
/// to the two values {1, kappa}, kappa = 1 + 2 sqrt(q).
inline SensingOperator example_operator(Eigen::Index n, Eigen::Index r,
                                        Eigen::Index r_star) {
  if (r_star < 1 || r_star > r || r >= n)
    throw ValidationError("example_operator: need 1 <= r_star <= r < n");
  const Eigen::Index q = r - r_star + 1;
  const double qd = static_cast<double>(q);
  const double kappa = 1.0 + 2.0 * std::sqrt(qd);

  SensingOperator op;
  op.n = n;
  op.m = n * n;
  op.stacked = Matrix::Zero(op.m, op.m);
  op.labels.reserve(op.m);
  op.nu = 2.0 / (kappa + 1.0);

  for (Eigen::Index k = 0; k < op.m; ++k) {
    const Eigen::Index i = k % n;
    const Eigen::Index j = k / n;
    op.labels.emplace_back(i, j);
    Matrix cell = Matrix::Zero(n, n);
    if (i != j) {
      cell(i, j) = std::sqrt(kappa);
    } else if (i == 0) {
      cell(0, 0) = std::sqrt(kappa / 2.0);
      for (Eigen::Index l = 1; l <= q; ++l) cell(l, l) = std::sqrt(kappa / (2.0 * qd));
    } else if (i == 1) {
      cell(0, 0) = 1.0 / std::sqrt(2.0);
      for (Eigen::Index l = 1; l <= q; ++l) cell(l, l) = -1.0 / std::sqrt(2.0 * qd);
    } else if (i <= q) {
      const double p = static_cast<double>(q - i + 1);
      cell(i - 1, i - 1) = std::sqrt(p / (p + 1.0));
      for (Eigen::Index l = i; l <= q; ++l) cell(l, l) = -1.0 / std::sqrt(p * (p + 1.0));
    } else {
      cell(i, i) = std::sqrt(kappa);
    }
    op.stacked.row(k) = vectorize(cell).transpose();
  }
  return op;
}

/// The planted pair for the hard ensemble: the ground truth occupies the
/// leading coordinate plus the shared tail, the trap point spreads weight
/// xi = 1 / sqrt(1 + sqrt(q)) over the next q coordinates.
inline FactorPair example_points(Eigen::Index n, Eigen::Index r, Eigen::Index r_star) {
  if (r_star < 1 || r_star > r || r >= n)
    throw ValidationError("example_points: need 1 <= r_star <= r < n");
  const Eigen::Index q = r - r_star + 1;
  const double xi = 1.0 / std::sqrt(1.0 + std::sqrt(static_cast<double>(q)));
  Matrix x = Matrix::Zero(n, r), z = Matrix::Zero(n, r_star);
  for (Eigen::Index l = 0; l < q; ++l) x(l + 1, l) = xi;
  for (Eigen::Index l = q; l < r; ++l) x(l + 1, l) = 1.0;
  z(0, 0) = 1.0;
  for (Eigen::Index l = 1; l < r_star; ++l) z(q + l, l) = 1.0;
  return {x, z};
}

inline double loss(const SensingOperator& op, const Matrix& x, const Vector& b) {
  if (b.size() != op.m) throw ValidationError("loss: data vector must have m entries");
  return (apply(op, x * x.transpose()) - b).squaredNorm();
}

/// Matrix gradient of the quartic loss, 2 sum_k res_k (A_k + A_k^T) X.
inline Matrix loss_gradient(const SensingOperator& op, const Matrix& x, const Vector& b) {
  if (b.size() != op.m) throw ValidationError("loss_gradient: data vector must have m entries");
  const Vector resid = apply(op, x * x.transpose()) - b;
  const Matrix weighted = materialize(op.stacked.transpose() * resid, op.n, op.n);
  return 2.0 * (weighted + weighted.transpose()) * x;
}

/// Quadratic form of the loss Hessian on vectorized n x r directions:
/// 2 J^T (A^T A) J + 4 I_r kron sym(mat(A^T res)).
inline Matrix loss_hessian(const SensingOperator& op, const Matrix& x, const Vector& b) {
  if (b.size() != op.m) throw ValidationError("loss_hessian: data vector must have m entries");
  const Eigen::Index r = x.cols();
  const Vector resid = apply(op, x * x.transpose()) - b;
  const Matrix weighted = materialize(op.stacked.transpose() * resid, op.n, op.n);
  const ErrorJacobian ej = build_error_jacobian(FactorPair{x, Matrix::Zero(x.rows(), 1)});
  const Matrix aj = op.stacked * ej.J;
  Matrix hess = 2.0 * aj.transpose() * aj +
                4.0 * kron(Matrix::Identity(r, r),
                           Matrix(0.5 * (weighted + weighted.transpose())));
  return 0.5 * (hess + hess.transpose());
}

/// Stationarity and curvature screen at one candidate. is_sosp flags a
/// spurious second-order point: gradient within tol, curvature above -tol,
/// and loss bounded away from zero.
struct SecondOrderReport {
  bool is_stationary = false;
  bool is_sosp = false;
  double grad_norm = 0.0;
  double hess_min_eig = 0.0;
  double f_value = 0.0;
};

inline SecondOrderReport verify_second_order_point(const SensingOperator& op,
                                                   const Matrix& x, const Vector& b,
                                                   double tol = 1e-9) {
  SecondOrderReport rep;
  rep.f_value = loss(op, x, b);
  rep.grad_norm = loss_gradient(op, x, b).norm();
  rep.hess_min_eig = sym_eig(loss_hessian(op, x, b)).values(0);
  rep.is_stationary = rep.grad_norm <= tol;
  rep.is_sosp = rep.is_stationary && rep.hess_min_eig >= -tol && rep.f_value > tol;
  return rep;
}

/// Spectral summary of the ensemble gram matrix, with the ranks of the
/// matrices behind its extreme eigenvalues. Rows are checked first (for
/// orthogonal ensembles every row is an eigenvector); the eigensolver's
/// vector is the fallback when no row matches.
struct RipCertificate {
  double delta_opt = 0.0;
  double kappa = 1.0;
  double nu = 1.0;
  Eigen::Index top_vector_rank = 0;
  Eigen::Index bottom_vector_rank = 0;
  double spectrum_min = 0.0;
  double spectrum_max = 0.0;
};

namespace detail {

inline Eigen::Index extremal_vector_rank(const SensingOperator& op, const Matrix& gram,
                                         const SymEig& eig, double target,
                                         Eigen::Index fallback_col) {
  const double scale = std::max(1.0, std::abs(target));
  for (Eigen::Index k = 0; k < op.m; ++k) {
    const Vector row = op.stacked.row(k).transpose();
    const double sq = row.squaredNorm();
    if (std::abs(sq - target) > 1e-9 * scale) continue;
    if ((gram * row - target * row).norm() <= 1e-8 * scale * row.norm())
      return numerical_rank(materialize(row, op.n, op.n));
  }
  return numerical_rank(materialize(eig.vectors.col(fallback_col), op.n, op.n));
}

}  // namespace detail

inline RipCertificate full_space_rip_certificate(const SensingOperator& op) {
  const Matrix gram = op.stacked.transpose() * op.stacked;
  const SymEig eig = sym_eig(0.5 * (gram + gram.transpose()));
  RipCertificate cert;
  cert.spectrum_min = eig.values(0);
  cert.spectrum_max = eig.values(eig.values.size() - 1);
  if (cert.spectrum_min <= 0.0)
    throw ValidationError("full_space_rip_certificate: ensemble gram matrix is singular");
  cert.kappa = cert.spectrum_max / cert.spectrum_min;
  cert.delta_opt = (cert.kappa - 1.0) / (cert.kappa + 1.0);
  cert.nu = 2.0 / (cert.spectrum_max + cert.spectrum_min);
  cert.top_vector_rank =
      detail::extremal_vector_rank(op, gram, eig, cert.spectrum_max, eig.values.size() - 1);
  cert.bottom_vector_rank = detail::extremal_vector_rank(op, gram, eig, cert.spectrum_min, 0);
  return cert;
}

}  // namespace riplab
