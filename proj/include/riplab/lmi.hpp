#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <vector>

#ifdef RIPLAB_LMI_TRACE
#include <cstdio>
#endif

#include "riplab/bounds.hpp"
#include "riplab/dense.hpp"
#include "riplab/errors.hpp"
#include "riplab/rng.hpp"

namespace riplab {

/// Orthonormal basis (in the Frobenius inner product) of the symmetric
/// subspace of m x m matrices, as an m^2 x m(m+1)/2 column matrix:
/// vec(E_ii), then (vec(E_ij) + vec(E_ji)) / sqrt(2) for i < j.
inline Matrix symmetric_basis(Eigen::Index m) {
  const Eigen::Index dim = m * (m + 1) / 2;
  Matrix b = Matrix::Zero(m * m, dim);
  Eigen::Index col = 0;
  for (Eigen::Index j = 0; j < m; ++j) {
    for (Eigen::Index i = 0; i <= j; ++i) {
      if (i == j) {
        b(i + m * i, col) = 1.0;
      } else {
        b(i + m * j, col) = 1.0 / std::sqrt(2.0);
        b(j + m * i, col) = 1.0 / std::sqrt(2.0);
      }
      ++col;
    }
  }
  return b;
}

/// The spectral program behind the threshold function, in raw form:
/// maximize eta subject to J^T H e = 0, the curvature block
/// 2 I_r kron mat(He) + J^T H J >= 0, and the box eta I <= H <= I.
/// X is retained because the solver deflates curvature directions that
/// vanish identically on the feasible set (see solve_delta_exact).
struct LmiProblem {
  Eigen::Index n = 0;
  Eigen::Index r = 0;
  Vector e;
  Matrix J;
  Eigen::Index symmetric_subspace_dim = 0;
  Matrix X;
  double e_norm = 0.0;
};

inline LmiProblem assemble_lmi(const FactorPair& fp) {
  validate_factor_pair(fp);
  const ErrorJacobian ej = build_error_jacobian(fp);
  const double scale = std::max(1.0, fp.X.squaredNorm() + fp.Z.squaredNorm());
  if (ej.e_norm <= rank_tolerance * scale)
    throw ZeroErrorVector("assemble_lmi: XX^T equals ZZ^T");
  LmiProblem p;
  p.n = fp.n();
  p.r = fp.r();
  p.e = ej.e;
  p.J = ej.J;
  p.symmetric_subspace_dim = p.n * (p.n + 1) / 2;
  p.X = fp.X;
  p.e_norm = ej.e_norm;
  return p;
}

/// Residuals of one candidate (H, delta) against the delta-form program:
/// J^T H e = 0, curvature block PSD, (1-delta) I <= H <= (1+delta) I.
struct FeasibilityReport {
  double equality_residual = 0.0;
  double hessian_min_eig = 0.0;
  double box_lower_margin = 0.0;  // lambda_min(H) - (1 - delta)
  double box_upper_margin = 0.0;  // (1 + delta) - lambda_max(H)
  bool feasible = false;
};

inline FeasibilityReport verify_feasible_point(const LmiProblem& p, const Matrix& h,
                                               double delta, double tol = 1e-8) {
  const Eigen::Index nn = p.n * p.n;
  if (h.rows() != nn || h.cols() != nn)
    throw ValidationError("verify_feasible_point: H must be n^2 x n^2");
  FeasibilityReport rep;
  const Vector he = h * p.e;
  rep.equality_residual = (p.J.transpose() * he).norm();
  Matrix m = materialize(he, p.n, p.n);
  m = 0.5 * (m + m.transpose());
  const Matrix g =
      2.0 * kron(Matrix::Identity(p.r, p.r), m) + p.J.transpose() * h * p.J;
  rep.hessian_min_eig = sym_eig(0.5 * (g + g.transpose())).values(0);
  const SymEig hs = sym_eig(0.5 * (h + h.transpose()));
  rep.box_lower_margin = hs.values(0) - (1.0 - delta);
  rep.box_upper_margin = (1.0 + delta) - hs.values(hs.values.size() - 1);
  rep.feasible = rep.equality_residual <= tol && rep.hessian_min_eig >= -tol &&
                 rep.box_lower_margin >= -tol && rep.box_upper_margin >= -tol;
  return rep;
}

/// Solver output. H is reported in the delta-form scaling, so that
/// verify_feasible_point(p, H, delta) accepts it directly.
struct LmiSolution {
  double delta = 1.0;
  double eta = 0.0;
  Matrix H;
  double equality_residual = 0.0;
  double hessian_term_min_eig = 0.0;
  double box_min_margin = 0.0;
  double gap = 0.0;  // certified bound on |delta - delta_star|
  int newton_iterations = 0;
};

namespace detail {

inline double logdet_from_llt(const Eigen::LLT<Matrix>& llt) {
  double acc = 0.0;
  const auto& l = llt.matrixLLT();
  for (Eigen::Index i = 0; i < l.rows(); ++i) acc += std::log(l(i, i));
  return 2.0 * acc;
}

/// Orthonormal right null space basis at the standard relative cutoff.
inline Matrix right_null_space(const Matrix& a, double rel_tol = 1e-12) {
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double cutoff = (sv.size() > 0 && sv(0) > 0.0) ? rel_tol * sv(0) : 0.0;
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > cutoff) ++rank;
  return svd.matrixV().rightCols(a.cols() - rank);
}

}  // namespace detail

/// Exact threshold evaluation by primal barrier path-following on the
/// eta-form program. delta = (1 - eta) / (1 + eta).
///
/// Reductions applied before the solve:
///  * H acts on vectorized symmetric matrices only; it is parameterized on
///    that n(n+1)/2-dimensional subspace and extended by the identity on
///    the skew complement, which e and range(J) never touch. The extension
///    is compatible with the spectral box and cannot hurt eta.
///  * The nr equality constraints are eliminated by an orthonormal basis
///    of their null space, so iterates satisfy them to working precision.
///  * Directions v = vec(V) with J v = 0 and V supported on range(X) are
///    annihilated by the curvature block at every point satisfying the
///    equalities (mat(He) X = 0 forces both terms to zero there), so the
///    block is deflated onto their orthogonal complement. Without the
///    deflation no strictly feasible point exists once r >= 2. A tiny
///    eps ridge keeps the deflated block's barrier defined even when the
///    remaining directions also touch the boundary.
inline LmiSolution solve_delta_exact(const LmiProblem& p, double tol = 1e-7,
                                     int max_newton = 500) {
  const Eigen::Index n = p.n;
  const Eigen::Index r = p.r;
  const Eigen::Index s = p.symmetric_subspace_dim;
  const Eigen::Index nr = n * r;
  const Matrix b_sym = symmetric_basis(n);
  const Vector et = b_sym.transpose() * p.e;
  const Matrix jt = b_sym.transpose() * p.J;  // s x nr

  // Equality rows <sym(jt_k et^T), Ht> = 0 in svec coordinates of Ht.
  const Matrix b_s = symmetric_basis(s);
  const Eigen::Index cap_s = b_s.cols();
  Matrix a_eq(nr, cap_s);
  for (Eigen::Index k = 0; k < nr; ++k) {
    const Matrix c = 0.5 * (jt.col(k) * et.transpose() + et * jt.col(k).transpose());
    a_eq.row(k) = (b_s.transpose() * vectorize(c)).transpose();
  }
  const Matrix null_eq = detail::right_null_space(a_eq);
  const Eigen::Index free_dim = null_eq.cols();

  std::vector<Matrix> dir(free_dim);  // s x s symmetric free directions
  for (Eigen::Index a = 0; a < free_dim; ++a) {
    Matrix m = materialize(b_s * null_eq.col(a), s, s);
    dir[a] = 0.5 * (m + m.transpose());
  }

  // Curvature-block deflation basis. U2 spans ker(X^T); the forced null
  // directions are ker(J) vectors whose matrix lives in range(X).
  Eigen::JacobiSVD<Matrix> xsvd(p.X, Eigen::ComputeFullU);
  const auto& xsv = xsvd.singularValues();
  Eigen::Index xrank = 0;
  for (Eigen::Index i = 0; i < xsv.size(); ++i)
    if (xsv(i) > rank_tolerance * xsv(0)) ++xrank;
  const Matrix u2 = xsvd.matrixU().rightCols(n - xrank);
  const Matrix ker_j = detail::right_null_space(p.J);
  Matrix v0;
  if (ker_j.cols() > 0) {
    if (u2.cols() == 0) {
      v0 = ker_j;
    } else {
      Matrix c(u2.cols() * r, ker_j.cols());
      for (Eigen::Index k = 0; k < ker_j.cols(); ++k)
        c.col(k) = vectorize(u2.transpose() * materialize(ker_j.col(k), n, r));
      const Matrix coeff = detail::right_null_space(c);
      v0 = ker_j * coeff;
    }
  }
  Matrix q3;  // nr x m3 complement of the forced null space
  if (v0.size() == 0 || v0.cols() == 0) {
    q3 = Matrix::Identity(nr, nr);
  } else {
    Eigen::JacobiSVD<Matrix> vsvd(v0, Eigen::ComputeFullU);
    q3 = vsvd.matrixU().rightCols(nr - v0.cols());
  }
  const Eigen::Index m3 = q3.cols();

  // Deflated curvature image of each free direction.
  const double g_scale = 2.0 * et.norm() + jt.squaredNorm();
  const double eps3 = 1e-10 * std::max(1.0, g_scale);
  std::vector<Matrix> gdir(free_dim);
  for (Eigen::Index a = 0; a < free_dim; ++a) {
    const Matrix me = materialize(b_sym * (dir[a] * et), n, n);
    const Matrix full =
        2.0 * kron(Matrix::Identity(r, r), me) + jt.transpose() * dir[a] * jt;
    Matrix g = q3.transpose() * full * q3;
    gdir[a] = 0.5 * (g + g.transpose());
  }

  // Stacked copies for fast Gram assembly.
  Matrix v1(s * s, free_dim), v3(m3 * m3, free_dim);
  for (Eigen::Index a = 0; a < free_dim; ++a) {
    v1.col(a) = vectorize(dir[a]);
    v3.col(a) = vectorize(gdir[a]);
  }

  double ridge = eps3;  // curvature-block shift, walked down to eps3 below
  const auto h_of = [&](const Vector& th) {
    return materialize(v1 * th, s, s);
  };
  const auto g_of = [&](const Vector& th) {
    Matrix g = materialize(v3 * th, m3, m3);
    g.diagonal().array() += ridge;
    return g;
  };

  struct Blocks {
    Eigen::LLT<Matrix> l1, l2, l3;
    bool ok = false;
  };
  const auto factor = [&](const Vector& th, double eta_v, Blocks& bl) {
    const Matrix ht = h_of(th);
    Matrix s1 = ht;
    s1.diagonal().array() -= eta_v;
    Matrix s2 = -ht;
    s2.diagonal().array() += 1.0;
    bl.l1.compute(s1);
    if (bl.l1.info() != Eigen::Success) { bl.ok = false; return; }
    bl.l2.compute(s2);
    if (bl.l2.info() != Eigen::Success) { bl.ok = false; return; }
    bl.l3.compute(g_of(th));
    bl.ok = bl.l3.info() == Eigen::Success;
  };
  const auto barrier_value = [&](const Blocks& bl, double eta_v, double t) {
    return -t * eta_v - detail::logdet_from_llt(bl.l1) -
           detail::logdet_from_llt(bl.l2) - detail::logdet_from_llt(bl.l3);
  };

  // Initial point: project (1/2) I onto the equality null space and scale
  // into the spectral box. Scaling cannot repair an indefinite curvature
  // image (the block is linear in theta), so instead the block starts with
  // a ridge large enough to dominate any indefiniteness and the homotopy
  // below walks the ridge down while recentering.
  Vector theta = null_eq.transpose() *
                 (b_s.transpose() * vectorize(0.5 * Matrix::Identity(s, s)));
  {
    const SymEig he0 = sym_eig(h_of(theta));
    const double top = std::max(he0.values(s - 1), -he0.values(0));
    if (top > 0.45) theta *= 0.45 / top;
  }
  double eta = sym_eig(h_of(theta)).values(0) - 0.5;
  if (m3 > 0) {
    const double g_min = sym_eig(materialize(v3 * theta, m3, m3)).values(0);
    ridge = std::max(eps3, 0.1 * std::max(1.0, g_scale) + std::max(0.0, -2.0 * g_min));
  }

  const double nu = 2.0 * static_cast<double>(s) + static_cast<double>(m3);
  // Certified suboptimality of eta at a lambda-centered iterate is
  // (nu + lambda sqrt(nu)) / t; inner centering stops at lambda <= 0.1 and
  // tolerates lambda <= 0.9 when steps bottom out, so nu + sqrt(nu) covers
  // both and doubling converts the bound to delta units.
  const double nu_cert = nu + std::sqrt(nu);
  const double gap_target = std::min(tol, 1e-7);
  int newton_count = 0;

  // Start t where the initial point is already eta-centered, instead of
  // trekking to the t=1 analytic center whose eta sits near -s.
  double t = 1.0;
  {
    Matrix s1_init = h_of(theta);
    s1_init.diagonal().array() -= eta;
    const Eigen::LLT<Matrix> l1(s1_init);
    if (l1.info() == Eigen::Success)
      t = std::max(1.0, l1.solve(Matrix::Identity(s, s)).trace());
  }

  Blocks bl;
  const Eigen::Index dim = free_dim + 1;
  Matrix hess(dim, dim);
  Vector grad(dim);
  Matrix k1(s * s, free_dim), k2(s * s, free_dim), k3(m3 * m3, free_dim);

  const auto center = [&](double t_now) {
    for (;;) {
      factor(theta, eta, bl);
      if (!bl.ok) {
        std::ostringstream msg;
        msg << "solver stall: iterate left the cone interior at eta=" << eta;
        throw SolverStall(msg.str());
      }
      const Matrix w1 = bl.l1.solve(Matrix::Identity(s, s));
      const Matrix w2 = bl.l2.solve(Matrix::Identity(s, s));
      const Matrix w3 = bl.l3.solve(Matrix::Identity(m3, m3));
      const Vector vw1 = vectorize(w1), vw2 = vectorize(w2), vw3 = vectorize(w3);

      grad.head(free_dim) =
          -(v1.transpose() * vw1) + v1.transpose() * vw2 - v3.transpose() * vw3;
      grad(free_dim) = -t_now + w1.trace();

      for (Eigen::Index a = 0; a < free_dim; ++a) {
        k1.col(a) = vectorize(Matrix(w1 * dir[a] * w1));
        k2.col(a) = vectorize(Matrix(w2 * dir[a] * w2));
        k3.col(a) = vectorize(Matrix(w3 * gdir[a] * w3));
      }
      const Matrix gram =
          k1.transpose() * v1 + k2.transpose() * v1 + k3.transpose() * v3;
      hess.topLeftCorner(free_dim, free_dim) = 0.5 * (gram + gram.transpose());
      const Vector cross = -(k1.transpose() * vectorize(Matrix(Matrix::Identity(s, s))));
      hess.block(0, free_dim, free_dim, 1) = cross;
      hess.block(free_dim, 0, 1, free_dim) = cross.transpose();
      hess(free_dim, free_dim) = w1.squaredNorm();

      // A negative decrement means the factored system lost definiteness to
      // roundoff; escalate a diagonal ridge rather than trusting the step.
      Vector step_dir = Eigen::LDLT<Matrix>(hess).solve(-grad);
      double decrement_sq = -grad.dot(step_dir);
      double model_ridge = 1e-14 * (1.0 + std::abs(hess.trace()) / dim);
      for (int attempt = 0; attempt < 4; ++attempt) {
        if (step_dir.allFinite() && decrement_sq >= 0.0) break;
        Matrix ridged = hess;
        ridged.diagonal().array() += model_ridge;
        step_dir = Eigen::LDLT<Matrix>(ridged).solve(-grad);
        decrement_sq = -grad.dot(step_dir);
        model_ridge *= 1e4;
      }
      if (!step_dir.allFinite() || decrement_sq < 0.0) {
        std::ostringstream msg;
        msg << "solver stall: newton model breakdown at eta=" << eta;
        throw SolverStall(msg.str());
      }
#ifdef RIPLAB_LMI_TRACE
      std::printf("  t=%.3e ridge=%.3e eta=%+.9f lam2=%.3e gnorm=%.3e\n", t_now,
                  ridge, eta, decrement_sq, grad.norm());
#endif
      if (decrement_sq <= 0.01) return;  // lambda <= 0.1, certified by nu_cert

      const double f0 = barrier_value(bl, eta, t_now);
      const double slope = grad.dot(step_dir);
      double step = 1.0;
      bool moved = false;
      Blocks trial;
      for (int ls = 0; ls < 70; ++ls) {
        const Vector nt = theta + step * step_dir.head(free_dim);
        const double ne = eta + step * step_dir(free_dim);
        factor(nt, ne, trial);
        if (trial.ok &&
            barrier_value(trial, ne, t_now) <= f0 + 0.01 * step * slope) {
          theta = nt;
          eta = ne;
          moved = true;
          break;
        }
        step *= 0.5;
      }
      ++newton_count;
      if (!moved) {
        if (decrement_sq <= 0.81) return;  // lambda <= 0.9, still certified
        std::ostringstream msg;
        msg << "solver stall: no acceptable step at eta=" << eta
            << " (delta=" << (1.0 - eta) / (1.0 + eta) << ")";
        throw SolverStall(msg.str());
      }
      if (newton_count > max_newton) {
        std::ostringstream msg;
        msg << "solver stall: newton budget " << max_newton
            << " exhausted at eta=" << eta
            << " (delta=" << (1.0 - eta) / (1.0 + eta) << ", gap~"
            << 2.0 * nu_cert / t_now << ")";
        throw SolverStall(msg.str());
      }
    }
  };

  // Phase A: recenter while walking the curvature ridge down to eps3. The
  // reduction keeps a quarter of the block's current slack, so the iterate
  // stays strictly feasible by construction at every step.
  center(t);
  int ridge_rounds = 0;
  while (ridge > eps3) {
    if (++ridge_rounds > 300) {
      std::ostringstream msg;
      msg << "solver stall: curvature ridge homotopy stagnated at ridge=" << ridge;
      throw SolverStall(msg.str());
    }
    const double slack = sym_eig(g_of(theta)).values(0);
    ridge = std::max(eps3, ridge - 0.75 * slack);
    center(t);
  }

  // Phase B: follow the central path in t.
  while (2.0 * nu_cert / t > gap_target) {
    t *= 4.0;
    center(t);
  }

  LmiSolution sol;
  sol.newton_iterations = newton_count;
  sol.gap = 2.0 * nu_cert / t;
  const double eta_clamped = std::clamp(eta, 0.0, 1.0 - 1e-15);
  sol.eta = eta_clamped;
  sol.delta = (1.0 - eta_clamped) / (1.0 + eta_clamped);

  const Matrix ht = h_of(theta);
  const Eigen::Index nn = n * n;
  Matrix h_eta = b_sym * ht * b_sym.transpose() +
                 (Matrix::Identity(nn, nn) - b_sym * b_sym.transpose());
  sol.H = (1.0 + sol.delta) * h_eta;

  const FeasibilityReport rep = verify_feasible_point(p, sol.H, sol.delta);
  sol.equality_residual = rep.equality_residual;
  sol.hessian_term_min_eig = rep.hessian_min_eig;
  sol.box_min_margin = std::min(rep.box_lower_margin, rep.box_upper_margin);
  return sol;
}

/// Zero-order minimization of a threshold objective over factor pairs.
enum class ScanObjective { lb, tradeoff, exact };

struct ScanConfig {
  Eigen::Index n = 2;
  Eigen::Index r = 1;
  Eigen::Index r_star = 1;
  std::uint64_t seed = 0;
  int budget = 10000;
  ScanObjective objective = ScanObjective::lb;
};

struct TraceEntry {
  int evaluations = 0;
  double value = 0.0;
};

struct ScanResult {
  FactorPair best_fp;
  double best_value = std::numeric_limits<double>::infinity();
  std::vector<TraceEntry> trace;
  int evaluations = 0;
};

/// Coordinate pattern search with step halving and seeded restarts. Z is
/// parameterized as a dense n x r_star block and a candidate is accepted
/// only when sigma_{r_star}(Z) clears the standard rank cutoff, so every
/// evaluated pair has exact rank r_star.
inline ScanResult pattern_search_min_delta(const ScanConfig& cfg) {
  if (cfg.r_star < 1 || cfg.r_star > cfg.r || cfg.r >= cfg.n)
    throw ValidationError("pattern_search_min_delta: need 1 <= r_star <= r < n");
  if (cfg.budget < 1) throw ValidationError("pattern_search_min_delta: empty budget");

  const Eigen::Index n = cfg.n, r = cfg.r, rs = cfg.r_star;
  const Eigen::Index dim = n * (r + rs);
  const double inf = std::numeric_limits<double>::infinity();

  const auto unpack = [&](const Vector& x) {
    return FactorPair{materialize(x.head(n * r), n, r),
                      materialize(x.tail(n * rs), n, rs)};
  };
  const auto objective = [&](const Vector& x) -> double {
    const FactorPair fp = unpack(x);
    Eigen::JacobiSVD<Matrix> svd(fp.Z);
    const auto& sv = svd.singularValues();
    if (sv(0) <= 0.0 || sv(sv.size() - 1) <= rank_tolerance * sv(0)) return inf;
    try {
      switch (cfg.objective) {
        case ScanObjective::lb: return delta_lower_bound(fp);
        case ScanObjective::tradeoff: return tradeoff_bound(fp).delta_bound;
        case ScanObjective::exact: return solve_delta_exact(assemble_lmi(fp)).delta;
      }
    } catch (const std::exception&) {
      return inf;
    }
    return inf;
  };

  Rng rng(cfg.seed);
  ScanResult out;
  Vector best_x;
  int evals = 0;

  while (evals < cfg.budget) {
    Vector x(dim);
    for (Eigen::Index i = 0; i < dim; ++i) x(i) = rng.normal();
    double fx = objective(x);
    ++evals;
    if (fx < out.best_value) {
      out.best_value = fx;
      best_x = x;
      out.trace.push_back({evals, fx});
    }
    double step = 0.5;
    while (step >= 1e-6 && evals < cfg.budget) {
      Eigen::Index move_i = -1;
      double move_sign = 0.0;
      double move_value = fx;
      for (Eigen::Index i = 0; i < dim && evals < cfg.budget; ++i) {
        for (const double sign : {1.0, -1.0}) {
          if (evals >= cfg.budget) break;
          Vector cand = x;
          cand(i) += sign * step;
          const double v = objective(cand);
          ++evals;
          if (v < move_value - 1e-15) {
            move_value = v;
            move_i = i;
            move_sign = sign;
          }
        }
      }
      if (move_i >= 0) {
        x(move_i) += move_sign * step;
        fx = move_value;
        if (fx < out.best_value) {
          out.best_value = fx;
          best_x = x;
          out.trace.push_back({evals, fx});
        }
      } else {
        step *= 0.5;
      }
    }
  }
  if (!std::isfinite(out.best_value))
    throw ValidationError("pattern_search_min_delta: no admissible candidate found");
  out.best_fp = unpack(best_x);
  out.evaluations = evals;
  return out;
}

}  // namespace riplab
