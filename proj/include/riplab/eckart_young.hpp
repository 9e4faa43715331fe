#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "riplab/dense.hpp"
#include "riplab/errors.hpp"
#include "riplab/rng.hpp"

namespace riplab {

/// Instance of min ||A - Y Y^T||_F^2 + 2 <B, Y^T Y> over n x r factors,
/// given through the spectra s (descending) of A and d (ascending) of B.
/// When built from full matrices the eigenbases are recorded so the
/// minimizer can be assembled in the original coordinates; otherwise the
/// bases are empty and the standard basis is used.
struct EyInstance {
  Vector s;
  Vector d;
  Matrix a_basis;
  Matrix b_basis;
};

struct EySolution {
  double value = 0.0;
  Matrix Y_star;
  Vector w;
};

namespace detail {

/// Flips eigenvector signs so the first appreciable entry is positive,
/// making repeated decompositions byte-for-byte reproducible.
inline void sign_normalize_columns(Matrix& m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    const double scale = m.col(j).norm();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      const double v = m(i, j);
      if (std::abs(v) > 1e-12 * std::max(1.0, scale)) {
        if (v < 0.0) m.col(j) = -m.col(j);
        break;
      }
    }
  }
}

struct SpectralForm {
  Vector values;
  Matrix vectors;
};

/// Deterministic eigendecomposition of a symmetric PSD input with the
/// requested value ordering. Small negative eigenvalues from roundoff are
/// clamped to zero; genuinely negative ones are rejected.
inline SpectralForm psd_spectral_form(const Matrix& m, bool descending, const char* who) {
  if (m.rows() != m.cols()) throw ValidationError(std::string(who) + ": matrix must be square");
  const double scale = std::max(1.0, m.norm());
  if ((m - m.transpose()).norm() > 1e-10 * scale)
    throw ValidationError(std::string(who) + ": matrix must be symmetric");
  SymEig eig = sym_eig(0.5 * (m + m.transpose()));
  if (eig.values.size() > 0 && eig.values(0) < -1e-8 * scale)
    throw ValidationError(std::string(who) + ": matrix must be positive semidefinite");
  SpectralForm out;
  out.values = eig.values.cwiseMax(0.0);
  out.vectors = eig.vectors;
  if (descending) {
    out.values.reverseInPlace();
    out.vectors = out.vectors.rowwise().reverse().eval();
  }
  sign_normalize_columns(out.vectors);
  return out;
}

inline void validate_ey_instance(const EyInstance& inst) {
  const Eigen::Index n = inst.s.size();
  const Eigen::Index r = inst.d.size();
  if (n < 1 || r < 1) throw ValidationError("ey instance: empty spectrum");
  if (r > n) throw ValidationError("ey instance: need r <= n");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (inst.s(i) < -1e-12) throw ValidationError("ey instance: s must be nonnegative");
    if (i > 0 && inst.s(i) > inst.s(i - 1) + 1e-12)
      throw ValidationError("ey instance: s must be descending");
  }
  for (Eigen::Index i = 0; i < r; ++i) {
    if (inst.d(i) < -1e-12) throw ValidationError("ey instance: d must be nonnegative");
    if (i > 0 && inst.d(i) < inst.d(i - 1) - 1e-12)
      throw ValidationError("ey instance: d must be ascending");
  }
  if (inst.a_basis.size() > 0 && (inst.a_basis.rows() != n || inst.a_basis.cols() != n))
    throw ValidationError("ey instance: a_basis shape mismatch");
  if (inst.b_basis.size() > 0 && (inst.b_basis.rows() != r || inst.b_basis.cols() != r))
    throw ValidationError("ey instance: b_basis shape mismatch");
}

}  // namespace detail

inline EyInstance ey_instance_from_spectra(const Vector& s_descending, const Vector& d_ascending) {
  EyInstance inst{s_descending, d_ascending, Matrix(), Matrix()};
  detail::validate_ey_instance(inst);
  return inst;
}

inline EyInstance ey_instance_from_matrices(const Matrix& a, const Matrix& b) {
  const detail::SpectralForm sa = detail::psd_spectral_form(a, true, "ey_instance_from_matrices A");
  const detail::SpectralForm sb = detail::psd_spectral_form(b, false, "ey_instance_from_matrices B");
  EyInstance inst{sa.values, sb.values, sa.vectors, sb.vectors};
  detail::validate_ey_instance(inst);
  return inst;
}

/// Closed-form optimum: weight w_i = (s_i - d_i)+ pairs the i-th largest
/// s with the i-th smallest d, the value drops each captured s_i^2 to
/// s_i^2 - w_i^2, and the minimizer is sum_i u_i v_i^T sqrt(w_i).
inline EySolution solve_regularized_ey(const EyInstance& inst) {
  detail::validate_ey_instance(inst);
  const Eigen::Index n = inst.s.size();
  const Eigen::Index r = inst.d.size();
  EySolution sol;
  sol.w = (inst.s.head(r) - inst.d).cwiseMax(0.0);
  // Per-index accumulation keeps captured terms exact: with d_i = 0 the
  // contribution s_i^2 - w_i^2 cancels to floating-point zero.
  sol.value = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    sol.value += inst.s(i) * inst.s(i);
    if (i < r) sol.value -= sol.w(i) * sol.w(i);
  }
  Matrix core = Matrix::Zero(n, r);
  for (Eigen::Index i = 0; i < r; ++i) core(i, i) = std::sqrt(sol.w(i));
  if (inst.a_basis.size() > 0) core = inst.a_basis * core;
  if (inst.b_basis.size() > 0) core = core * inst.b_basis.transpose();
  sol.Y_star = core;
  return sol;
}

inline double ey_objective(const Matrix& a, const Matrix& b, const Matrix& y) {
  if (a.rows() != a.cols() || b.rows() != b.cols())
    throw ValidationError("ey_objective: A and B must be square");
  if (y.rows() != a.rows() || y.cols() != b.rows())
    throw ValidationError("ey_objective: Y must be n x r");
  return (a - y * y.transpose()).squaredNorm() + 2.0 * (b * y.transpose() * y).trace();
}

struct EyDescentResult {
  double value = 0.0;
  Matrix minimizer;
};

/// Gradient descent on the objective from random starts, as an
/// implementation-independent check of the closed form. The best run's
/// endpoint is returned; it is stationary to high accuracy whenever the
/// gradient tolerance is reached before the iteration cap.
inline EyDescentResult ey_descent_search(const Matrix& a, const Matrix& b, std::uint64_t seed,
                                         int restarts = 20, int iters = 5000) {
  (void)detail::psd_spectral_form(a, true, "ey_descent_search A");
  (void)detail::psd_spectral_form(b, false, "ey_descent_search B");
  if (restarts < 1 || iters < 1)
    throw ValidationError("ey_descent_search: need restarts >= 1 and iters >= 1");
  const Eigen::Index n = a.rows();
  const Eigen::Index r = b.rows();
  if (r > n) throw ValidationError("ey_descent_search: need r <= n");
  const double grad_floor = 1e-11 * std::max(1.0, a.norm() + b.norm());

  EyDescentResult best;
  best.value = std::numeric_limits<double>::infinity();
  for (int run = 0; run < restarts; ++run) {
    Rng rng(Rng::derive_seed(seed, static_cast<std::uint64_t>(run)));
    Matrix y(n, r);
    for (Eigen::Index j = 0; j < r; ++j)
      for (Eigen::Index i = 0; i < n; ++i) y(i, j) = rng.normal();
    double phi = ey_objective(a, b, y);
    double step = 1.0;
    for (int it = 0; it < iters; ++it) {
      const Matrix grad = 4.0 * (y * y.transpose() - a) * y + 4.0 * y * b;
      const double gsq = grad.squaredNorm();
      if (std::sqrt(gsq) <= grad_floor) break;
      double t = step;
      bool moved = false;
      while (t > 1e-18) {
        const Matrix cand = y - t * grad;
        const double phic = ey_objective(a, b, cand);
        if (phic <= phi - 1e-4 * t * gsq) {
          y = cand;
          phi = phic;
          moved = true;
          break;
        }
        t *= 0.5;
      }
      if (!moved) break;
      step = std::min(2.0 * t, 1e3);
    }
    if (phi < best.value) {
      best.value = phi;
      best.minimizer = y;
    }
  }
  return best;
}

inline double ey_descent_oracle(const Matrix& a, const Matrix& b, std::uint64_t seed,
                                int restarts = 20, int iters = 5000) {
  return ey_descent_search(a, b, seed, restarts, iters).value;
}

namespace detail {

inline void require_diagonal(const Matrix& m, const char* who) {
  const double scale = std::max(1.0, m.norm());
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      if (i != j && std::abs(m(i, j)) > 1e-8 * scale)
        throw ValidationError(std::string(who) + ": matrix must be diagonal");
}

/// Column indices grouped by equal diagonal value of D, at a relative
/// tolerance wide enough to absorb descent-oracle noise.
inline std::vector<std::vector<Eigen::Index>> group_by_value(const Vector& vals) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(vals.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index a, Eigen::Index b) { return vals(a) < vals(b); });
  const double tol = 1e-6 * std::max(1.0, vals.size() ? vals.cwiseAbs().maxCoeff() : 0.0);
  std::vector<std::vector<Eigen::Index>> groups;
  for (Eigen::Index idx : order) {
    if (groups.empty() || vals(idx) - vals(groups.back().front()) > tol)
      groups.emplace_back();
    groups.back().push_back(idx);
  }
  return groups;
}

}  // namespace detail

/// Rotates the columns of a stationary factor within each repeated
/// regularizer eigenvalue so the gram matrix Y^T Y comes out diagonal,
/// leaving Y Y^T and the regularization term unchanged.
inline Matrix canonicalize_to_diagonal_gram(const Matrix& x, const Matrix& s, const Matrix& d) {
  if (s.rows() != s.cols() || d.rows() != d.cols() || x.rows() != s.rows() ||
      x.cols() != d.rows())
    throw ValidationError("canonicalize_to_diagonal_gram: dimension mismatch");
  detail::require_diagonal(d, "canonicalize_to_diagonal_gram D");
  const double scale = std::max(1.0, s.norm() + d.norm() + x.squaredNorm());
  if (((s - x * x.transpose()) * x - x * d).norm() > 1e-8 * scale)
    throw ValidationError("canonicalize_to_diagonal_gram: stationarity violated");

  Matrix y = x;
  for (const auto& group : detail::group_by_value(d.diagonal())) {
    if (group.size() == 1) continue;
    Matrix block(x.rows(), static_cast<Eigen::Index>(group.size()));
    for (std::size_t k = 0; k < group.size(); ++k) block.col(static_cast<Eigen::Index>(k)) = x.col(group[k]);
    const Matrix gram = block.transpose() * block;
    bool already = true;
    for (Eigen::Index j = 0; j < gram.cols() && already; ++j)
      for (Eigen::Index i = 0; i < gram.rows() && already; ++i)
        if (i != j && std::abs(gram(i, j)) > 1e-12 * std::max(1.0, gram.norm())) already = false;
    if (already) continue;
    SymEig eig = sym_eig(0.5 * (gram + gram.transpose()));
    detail::sign_normalize_columns(eig.vectors);
    block *= eig.vectors;
    for (std::size_t k = 0; k < group.size(); ++k) y.col(group[k]) = block.col(static_cast<Eigen::Index>(k));
  }
  return y;
}

/// True when every row and every column carries at most one entry above
/// the tolerance, the shape shared by all canonical stationary factors.
inline bool is_scaled_permutation(const Matrix& m, double tol = 1e-8) {
  const double cut = tol * std::max(1.0, m.norm());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    int hits = 0;
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      if (std::abs(m(i, j)) > cut) ++hits;
    if (hits > 1) return false;
  }
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    int hits = 0;
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      if (std::abs(m(i, j)) > cut) ++hits;
    if (hits > 1) return false;
  }
  return true;
}

/// Aligns a stationary factor with diagonal gram to the eigenbasis of S:
/// each nonzero column is an eigenvector of S, so its whole weight can be
/// moved onto a single coordinate of the matching eigenspace. The result
/// is a scaled permutation in the eigenbasis (in the original coordinates
/// when S itself is diagonal), preserving Y^T Y and <S, Y Y^T>.
inline Matrix canonicalize_to_scaled_permutation(const Matrix& x, const Matrix& s,
                                                 const Matrix& d) {
  if (s.rows() != s.cols() || d.rows() != d.cols() || x.rows() != s.rows() ||
      x.cols() != d.rows())
    throw ValidationError("canonicalize_to_scaled_permutation: dimension mismatch");
  detail::require_diagonal(d, "canonicalize_to_scaled_permutation D");
  const Matrix gram = x.transpose() * x;
  detail::require_diagonal(gram, "canonicalize_to_scaled_permutation X^T X");
  const double scale = std::max(1.0, s.norm() + d.norm() + x.squaredNorm());
  if ((s * x - x * (d + gram)).norm() > 1e-8 * scale)
    throw ValidationError("canonicalize_to_scaled_permutation: stationarity violated");

  bool s_diagonal = true;
  for (Eigen::Index j = 0; j < s.cols() && s_diagonal; ++j)
    for (Eigen::Index i = 0; i < s.rows() && s_diagonal; ++i)
      if (i != j && std::abs(s(i, j)) > 1e-10 * std::max(1.0, s.norm())) s_diagonal = false;

  Vector svals;
  Matrix basis;
  if (s_diagonal) {
    svals = s.diagonal();
    basis = Matrix::Identity(s.rows(), s.cols());
  } else {
    SymEig eig = sym_eig(0.5 * (s + s.transpose()));
    detail::sign_normalize_columns(eig.vectors);
    svals = eig.values;
    basis = eig.vectors;
  }
  const Matrix xt = basis.transpose() * x;
  const double match_tol = 1e-5 * std::max(1.0, svals.cwiseAbs().maxCoeff());

  // Large columns pick their coordinate first so ties resolve toward the
  // dominant entries.
  std::vector<Eigen::Index> order(static_cast<std::size_t>(x.cols()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return gram(a, a) > gram(b, b);
  });

  Matrix yt = Matrix::Zero(x.rows(), x.cols());
  std::vector<bool> used(static_cast<std::size_t>(x.rows()), false);
  for (Eigen::Index j : order) {
    const double norm = std::sqrt(std::max(0.0, gram(j, j)));
    if (norm <= 1e-12 * scale) continue;
    const double target = d(j, j) + gram(j, j);
    Eigen::Index pick = -1;
    double pick_mag = -1.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      if (used[static_cast<std::size_t>(i)]) continue;
      if (std::abs(svals(i) - target) > match_tol) continue;
      const double mag = std::abs(xt(i, j));
      if (mag > pick_mag) {
        pick_mag = mag;
        pick = i;
      }
    }
    if (pick < 0)
      throw ValidationError(
          "canonicalize_to_scaled_permutation: no eigenspace matches a column; stationarity "
          "violated");
    used[static_cast<std::size_t>(pick)] = true;
    yt(pick, j) = (xt(pick, j) < 0.0 ? -norm : norm);
  }
  return basis * yt;
}

}  // namespace riplab
