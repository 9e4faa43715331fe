#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cmath>
#include <cstddef>
#include <unsupported/Eigen/KroneckerProduct>
#include <vector>

#include "riplab/errors.hpp"

namespace riplab {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Singular values at or below rank_tolerance * sigma_max are treated as
/// zero, both for pseudoinversion and for rank decisions. Fixed so that
/// rank checks are deterministic at desk scale.
inline constexpr double rank_tolerance = 1e-9;

/// Row-major wire format used by every JSON interface. Internals run on
/// Eigen; this struct only crosses process boundaries.
struct DenseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> entries;  // row-major, rows*cols values

  static DenseMatrix from_eigen(const Matrix& m) {
    DenseMatrix out;
    out.rows = static_cast<std::size_t>(m.rows());
    out.cols = static_cast<std::size_t>(m.cols());
    out.entries.resize(out.rows * out.cols);
    for (std::size_t i = 0; i < out.rows; ++i)
      for (std::size_t j = 0; j < out.cols; ++j)
        out.entries[i * out.cols + j] = m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    return out;
  }

  Matrix to_eigen() const {
    if (entries.size() != rows * cols)
      throw ValidationError("DenseMatrix: entries.length != rows*cols");
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j) {
        const double v = entries[i * cols + j];
        if (!std::isfinite(v)) throw ValidationError("DenseMatrix: non-finite entry");
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
      }
    return m;
  }
};

/// Candidate X (n x r) and ground-truth factor Z (n x r_star), the
/// arguments of the threshold function delta(X, Z).
struct FactorPair {
  Matrix X;
  Matrix Z;

  Eigen::Index n() const { return X.rows(); }
  Eigen::Index r() const { return X.cols(); }
  Eigen::Index r_star() const { return Z.cols(); }
};

/// Shape and rank checks every consumer of a FactorPair relies on:
/// 1 <= r_star <= r <= some width, matching row counts, finite entries,
/// and Z of full column rank under the standard cutoff.
inline void validate_factor_pair(const FactorPair& fp) {
  if (fp.X.rows() == 0 || fp.X.cols() == 0) throw ValidationError("factor pair: X is empty");
  if (fp.Z.rows() != fp.X.rows())
    throw ValidationError("factor pair: X and Z row counts differ");
  if (fp.Z.cols() < 1 || fp.Z.cols() > fp.X.cols())
    throw ValidationError("factor pair: need 1 <= r_star <= r");
  if (!fp.X.allFinite() || !fp.Z.allFinite())
    throw ValidationError("factor pair: non-finite entry");
  Eigen::JacobiSVD<Matrix> svd(fp.Z);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) <= 0.0 || sv(sv.size() - 1) <= rank_tolerance * sv(0))
    throw ValidationError("factor pair: Z must have full column rank");
}

/// vec(M): column-stacking vectorization.
inline Vector vectorize(const Matrix& m) {
  return Eigen::Map<const Vector>(m.data(), m.size());
}

/// Inverse of vectorize for the given shape.
inline Matrix materialize(const Vector& v, Eigen::Index rows, Eigen::Index cols) {
  if (v.size() != rows * cols)
    throw ValidationError("materialize: vector length does not match rows*cols");
  return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

/// Kronecker product, oriented so that vec(A X B^T) = (B kron A) vec(X).
inline Matrix kron(const Matrix& a, const Matrix& b) {
  return Eigen::kroneckerProduct(a, b);
}

/// Eigendecomposition of a symmetric matrix, eigenvalues ascending. This is
/// the single spectral primitive; symmetric SVD-like queries route through
/// it so repeated runs stay bit-identical.
struct SymEig {
  Vector values;
  Matrix vectors;
};

inline SymEig sym_eig(const Matrix& s) {
  if (s.rows() != s.cols()) throw ValidationError("sym_eig: matrix not square");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(s);
  if (solver.info() != Eigen::Success) throw ValidationError("sym_eig: decomposition failed");
  return SymEig{solver.eigenvalues(), solver.eigenvectors()};
}

/// Moore-Penrose pseudoinverse with 0^+ = 0. Singular values at or below
/// rank_tolerance * sigma_max count as zero.
inline Matrix pseudoinverse(const Matrix& a) {
  if (a.size() == 0) return Matrix(a.cols(), a.rows());
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) <= 0.0) return Matrix::Zero(a.cols(), a.rows());
  const double cutoff = rank_tolerance * sv(0);
  Vector inv = Vector::Zero(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > cutoff) inv(i) = 1.0 / sv(i);
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

/// Numerical rank under the same cutoff as pseudoinverse.
inline Eigen::Index numerical_rank(const Matrix& a) {
  if (a.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(a);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) <= 0.0) return 0;
  const double cutoff = rank_tolerance * sv(0);
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > cutoff) ++rank;
  return rank;
}

/// Projection onto the positive semidefinite cone: eigenvalues clipped at
/// zero. Input must be symmetric up to sym_tol.
inline Matrix psd_project(const Matrix& s, double sym_tol = 1e-10) {
  if (s.rows() != s.cols()) throw ValidationError("psd_project: matrix not square");
  const double asym = (s - s.transpose()).norm();
  if (asym > sym_tol * std::max(1.0, s.norm()))
    throw ValidationError("psd_project: input not symmetric");
  const SymEig eig = sym_eig(0.5 * (s + s.transpose()));
  Vector clipped = eig.values.cwiseMax(0.0);
  return eig.vectors * clipped.asDiagonal() * eig.vectors.transpose();
}

/// Elementwise max{0, x}.
inline Vector positive_part(const Vector& x) { return x.cwiseMax(0.0); }

/// Error vector e = vec(XX^T - ZZ^T) together with the Jacobian J of the
/// factorization map, defined by J vec(Y) = vec(XY^T + YX^T).
struct ErrorJacobian {
  Vector e;   // length n^2
  Matrix J;   // n^2 x (n r)
  double e_norm = 0.0;
};

inline ErrorJacobian build_error_jacobian(const FactorPair& fp) {
  const Eigen::Index n = fp.n();
  const Eigen::Index r = fp.r();
  if (fp.Z.rows() != n) throw ValidationError("build_error_jacobian: X and Z row counts differ");
  // Z is implicitly padded with zero columns to width r; the padding does
  // not change XX^T - ZZ^T and J depends on X alone.
  ErrorJacobian out;
  const Matrix residual = fp.X * fp.X.transpose() - fp.Z * fp.Z.transpose();
  out.e = vectorize(residual);
  out.e_norm = residual.norm();
  out.J.resize(n * n, n * r);
  for (Eigen::Index b = 0; b < r; ++b) {
    for (Eigen::Index a = 0; a < n; ++a) {
      // Column for Y = e_a e_b^T: X Y^T + Y X^T = x_b e_a^T + e_a x_b^T.
      Matrix col = Matrix::Zero(n, n);
      col.col(a) = fp.X.col(b);
      col.row(a) += fp.X.col(b).transpose();
      out.J.col(b * n + a) = vectorize(col);
    }
  }
  return out;
}

/// (I - XX^+) kron (I - XX^+), the closed form of I - J J^+ acting on
/// vectorized symmetric matrices. The two operators agree only there:
/// range(J) consists of symmetric matrices, so I - J J^+ is the identity
/// on the antisymmetric subspace while this form is not. Every use in the
/// codebase applies it to symmetric arguments (e and friends).
inline Matrix residual_projector(const Matrix& x) {
  const Eigen::Index n = x.rows();
  const Matrix p = Matrix::Identity(n, n) - x * pseudoinverse(x);
  return kron(p, p);
}

}  // namespace riplab
