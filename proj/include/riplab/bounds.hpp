#pragma once

#include <algorithm>
#include <cmath>

#include "riplab/dense.hpp"
#include "riplab/errors.hpp"
#include "riplab/search1d.hpp"

namespace riplab {

/// Geometry of a candidate pair (X, Z) distilled into the two scalars that
/// drive every closed-form threshold bound. With P = I - XX^+ and
/// Z_perp = P Z:
///   alpha = ||Z_perp Z_perp^T||_F / ||XX^T - ZZ^T||_F
///   beta  = sigma_min^2(X) * tr(Z_perp^T Z_perp) / (e_norm * ||Z_perp Z_perp^T||_F)
struct AlphaBetaSummary {
  double alpha = 0.0;
  double beta = 0.0;
  double e_norm = 0.0;
  Vector d;               // eigenvalues of Z_perp^T Z_perp, zero-padded to length r, ascending
  double s_min_sq = 0.0;  // lambda_min(X^T X)
  bool degenerate_zperp = false;
};

/// Outcome of maximizing (cos_theta(t) - t) / (1 + t) over t >= 0.
struct TradeoffResult {
  double delta_bound = 0.0;
  double t_star = 0.0;
  double cos_theta_at_t_star = 0.0;
};

inline AlphaBetaSummary compute_alpha_beta(const FactorPair& fp) {
  const Matrix gram_gap = fp.X * fp.X.transpose() - fp.Z * fp.Z.transpose();
  AlphaBetaSummary out;
  out.e_norm = gram_gap.norm();
  const double scale = std::max(1.0, fp.X.squaredNorm() + fp.Z.squaredNorm());
  if (out.e_norm <= rank_tolerance * scale)
    throw ZeroErrorVector("compute_alpha_beta: XX^T equals ZZ^T");

  const Matrix p = Matrix::Identity(fp.n(), fp.n()) - fp.X * pseudoinverse(fp.X);
  const Matrix z_perp = p * fp.Z;

  out.s_min_sq = std::max(0.0, sym_eig(fp.X.transpose() * fp.X).values(0));

  // Eigenvalues of Z_perp^T Z_perp, padded with zeros to length r so the
  // vector matches the width of the candidate factor.
  out.d = Vector::Zero(fp.r());
  const Vector d_raw = positive_part(sym_eig(z_perp.transpose() * z_perp).values);
  out.d.tail(fp.r_star()) = d_raw;
  std::sort(out.d.data(), out.d.data() + out.d.size());

  const double d_norm = out.d.norm();
  if (z_perp.norm() <= rank_tolerance * std::max(1.0, fp.Z.norm()) || d_norm == 0.0) {
    out.degenerate_zperp = true;
    out.d.setZero();
    out.alpha = 0.0;
    // With Z in the span of X the trade-off argument still goes through
    // using sigma_min^2(X) / e_norm in place of beta.
    out.beta = out.s_min_sq / out.e_norm;
    return out;
  }
  out.alpha = std::min(1.0, d_norm / out.e_norm);
  out.beta = out.s_min_sq * out.d.sum() / (out.e_norm * d_norm);
  return out;
}

/// Closed-form trade-off value:
///   gamma = sqrt(1 - alpha^2)                 if beta >= alpha / (1 + sqrt(1 - alpha^2))
///         = (1 - 2 alpha beta + beta^2) / (1 - beta^2)   otherwise.
inline double gamma_closed_form(double alpha, double beta) {
  if (alpha < -1e-12 || alpha > 1.0 + 1e-12 || beta < -1e-12)
    throw ValidationError("gamma_closed_form: need alpha in [0,1] and beta >= 0");
  alpha = std::clamp(alpha, 0.0, 1.0);
  beta = std::max(beta, 0.0);
  const double root = std::sqrt(std::max(0.0, 1.0 - alpha * alpha));
  if (beta >= alpha / (1.0 + root)) return root;
  return (1.0 - 2.0 * alpha * beta + beta * beta) / (1.0 - beta * beta);
}

/// Closed-form lower bound on delta(X, Z). Degenerate geometry (Z in the
/// span of X, or rank-deficient X) certifies delta = 1.
inline double delta_lower_bound(const FactorPair& fp) {
  const AlphaBetaSummary ab = compute_alpha_beta(fp);
  if (ab.degenerate_zperp || ab.s_min_sq <= 0.0) return 1.0;
  return gamma_closed_form(ab.alpha, ab.beta);
}

/// psi(alpha, beta, t) = (t/beta) alpha + sqrt(1 - (t/beta)^2) sqrt(1 - alpha^2)
/// capped at 1 once t/beta exceeds alpha.
inline double psi(double alpha, double beta, double t) {
  if (beta <= 0.0) throw ValidationError("psi: beta must be positive");
  if (alpha < -1e-12 || alpha > 1.0 + 1e-12 || t < 0.0)
    throw ValidationError("psi: need alpha in [0,1] and t >= 0");
  alpha = std::clamp(alpha, 0.0, 1.0);
  const double ratio = t / beta;
  if (ratio > alpha) return 1.0;
  return ratio * alpha +
         std::sqrt(std::max(0.0, 1.0 - ratio * ratio)) *
             std::sqrt(std::max(0.0, 1.0 - alpha * alpha));
}

/// max_{t >= 0} (psi(alpha, beta, t) - t) / (1 + t), evaluated numerically.
/// Cross-checks gamma_closed_form: the two agree to high accuracy.
inline double max_tradeoff_psi(double alpha, double beta) {
  const auto objective = [&](double t) { return (psi(alpha, beta, t) - t) / (1.0 + t); };
  // psi saturates at t = alpha * beta; past that point the objective is
  // (1 - t) / (1 + t) and strictly decreasing.
  const double cap = std::max(alpha * beta, 1e-12);
  const Search1d best = golden_section_max(objective, 0.0, cap);
  return std::max({best.value, objective(0.0), objective(cap)});
}

namespace detail {

/// max_{w >= 0} { d^T w : ||w|| <= radius, 1^T w <= budget } through its
/// one-dimensional dual min_{rho >= 0} radius * ||(d - rho 1)_+|| + budget * rho.
inline double capped_simplex_support(const Vector& d, double radius, double budget) {
  if (radius <= 0.0 || budget <= 0.0 || d.size() == 0) return 0.0;
  const double d_max = d.maxCoeff();
  if (d_max <= 0.0) return 0.0;
  const auto dual = [&](double rho) {
    return radius * (d.array() - rho).max(0.0).matrix().norm() + budget * rho;
  };
  const Search1d best = golden_section_min(dual, 0.0, d_max);
  return std::min({best.value, dual(0.0), dual(d_max)});
}

}  // namespace detail

/// Largest cosine between the error direction and a feasible ascent
/// direction of curvature budget t. Reduced two-level form: an outer
/// concave maximization over tau in [0, min(1, e_norm * t / s_r)] of
///   sqrt(1 - alpha^2) sqrt(1 - tau^2) + max_w { d^T w : ||w|| <= tau/e_norm, 1^T w <= t/s_r }.
inline double cos_theta(const FactorPair& fp, double t) {
  if (t < 0.0) throw ValidationError("cos_theta: t must be nonnegative");
  const AlphaBetaSummary ab = compute_alpha_beta(fp);
  if (ab.s_min_sq <= 0.0)
    throw DegenerateBeta("cos_theta: sigma_min(X) = 0");
  const double ortho = std::sqrt(std::max(0.0, 1.0 - ab.alpha * ab.alpha));
  const double tau_max = std::min(1.0, ab.e_norm * t / ab.s_min_sq);
  const auto outer = [&](double tau) {
    return ortho * std::sqrt(std::max(0.0, 1.0 - tau * tau)) +
           detail::capped_simplex_support(ab.d, tau / ab.e_norm, t / ab.s_min_sq);
  };
  if (tau_max <= 0.0) return outer(0.0);
  const Search1d best = golden_section_max(outer, 0.0, tau_max);
  return std::min(1.0, std::max({best.value, outer(0.0), outer(tau_max)}));
}

/// Numeric lower bound max_{t >= 0} (cos_theta(t) - t) / (1 + t). Tighter
/// than the closed form because cos_theta(t) >= psi(alpha, beta, t).
inline TradeoffResult tradeoff_bound(const FactorPair& fp) {
  const AlphaBetaSummary ab = compute_alpha_beta(fp);
  if (ab.degenerate_zperp || ab.s_min_sq <= 0.0) {
    // Either certifies delta = 1; at t = 0 the cosine is already 1.
    return TradeoffResult{1.0, 0.0, 1.0};
  }
  const auto objective = [&](double t) { return (cos_theta(fp, t) - t) / (1.0 + t); };
  // cos_theta is concave and saturates at 1; once saturated the objective
  // decreases, so cap t where the cosine flattens out.
  double cap = std::max(ab.alpha * ab.beta, 1e-3);
  while (cos_theta(fp, cap) < 1.0 - 1e-9 && cap < 64.0) cap *= 2.0;
  const Search1d best = golden_section_max(objective, 0.0, cap);
  TradeoffResult out;
  out.t_star = best.argmax;
  double best_value = best.value;
  for (const double endpoint : {0.0, cap}) {
    const double v = objective(endpoint);
    if (v > best_value) {
      best_value = v;
      out.t_star = endpoint;
    }
  }
  out.cos_theta_at_t_star = cos_theta(fp, out.t_star);
  out.delta_bound = (out.cos_theta_at_t_star - out.t_star) / (1.0 + out.t_star);
  return out;
}

/// Feasibility of (alpha, beta) for width r and true rank r_star:
///   beta <= alpha  implies  alpha^2 + (r / r_star) beta^2 <= 1
///   beta >= alpha  implies  alpha <= 1 / sqrt(1 + r / r_star).
inline bool check_valid_inequalities(double alpha, double beta, int r, int r_star) {
  if (r_star < 1 || r_star > r)
    throw ValidationError("check_valid_inequalities: need 1 <= r_star <= r");
  const double ratio = static_cast<double>(r) / static_cast<double>(r_star);
  bool ok = true;
  if (beta <= alpha) ok = ok && (alpha * alpha + ratio * beta * beta <= 1.0 + 1e-9);
  if (beta >= alpha) ok = ok && (alpha <= 1.0 / std::sqrt(1.0 + ratio) + 1e-9);
  return ok;
}

/// Slack of the counting inequality behind the valid inequalities: for
/// x >= 0 with 1^T x <= ||x||^2,
///   1^T (I - x x^T / ||x||^2) 1 >= ||(1 - x)_+||^2.
/// Returns lhs - rhs, which the inequality asserts is nonnegative.
inline double cardinality_slack(const Vector& x) {
  const double norm_sq = x.squaredNorm();
  if (norm_sq <= 0.0) throw ValidationError("cardinality_slack: x must be nonzero");
  const double ones_sum = x.sum();
  const double n = static_cast<double>(x.size());
  const double lhs = n - ones_sum * ones_sum / norm_sq;
  const double rhs = positive_part(Vector::Ones(x.size()) - x).squaredNorm();
  return lhs - rhs;
}

}  // namespace riplab
