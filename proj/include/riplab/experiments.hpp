#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "riplab/dense.hpp"
#include "riplab/errors.hpp"
#include "riplab/parallel.hpp"
#include "riplab/rng.hpp"
#include "riplab/sensing.hpp"

namespace riplab {

/// Round-trippable decimal rendering for report and CSV scalars.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct SgdConfig {
  std::size_t steps = 10000;
  double learning_rate = 1e-3;
  double momentum = 0.9;
  std::size_t batch_size = 1;
  double init_std = 1.0;
  double success_threshold = 0.1;
  std::uint64_t seed = 0;
};

inline void validate_sgd_config(const SgdConfig& cfg) {
  if (cfg.steps < 1) throw ValidationError("sgd config: need steps >= 1");
  if (!(cfg.learning_rate > 0.0)) throw ValidationError("sgd config: need learning_rate > 0");
  if (!(cfg.momentum >= 0.0 && cfg.momentum < 1.0))
    throw ValidationError("sgd config: need 0 <= momentum < 1");
  if (cfg.batch_size < 1) throw ValidationError("sgd config: need batch_size >= 1");
  if (!(cfg.init_std >= 0.0)) throw ValidationError("sgd config: need init_std >= 0");
  if (!(cfg.success_threshold > 0.0))
    throw ValidationError("sgd config: need success_threshold > 0");
}

struct TrialRecord {
  std::uint64_t seed = 0;
  double final_distance = 0.0;
  double final_loss = 0.0;
  bool success = false;
  bool diverged = false;
};

struct ExperimentSummary {
  std::vector<TrialRecord> per_trial;
  std::size_t successes = 0;
  std::size_t failures = 0;
};

inline ExperimentSummary summarize(std::vector<TrialRecord> records) {
  ExperimentSummary out;
  out.per_trial = std::move(records);
  for (const TrialRecord& t : out.per_trial)
    (t.success ? out.successes : out.failures) += 1;
  return out;
}

/// One stochastic-gradient run on the measurement residual: batch rows are
/// sampled uniformly with replacement, the heavy-ball velocity accumulates
/// the unscaled per-row gradient, and a non-finite iterate ends the trial
/// as a diverged failure.
inline TrialRecord run_sgd_trial(const SensingOperator& op, const Matrix& z, Eigen::Index r,
                                 const SgdConfig& cfg,
                                 const std::optional<Matrix>& init_override = std::nullopt) {
  validate_sgd_config(cfg);
  if (z.rows() != op.n) throw ValidationError("run_sgd_trial: Z must have n rows");
  if (r < 1) throw ValidationError("run_sgd_trial: need search rank >= 1");
  const Eigen::Index n = op.n;
  const Matrix target = z * z.transpose();
  const Vector b = apply(op, target);

  std::vector<Matrix> cells, sym_cells;
  cells.reserve(static_cast<std::size_t>(op.m));
  sym_cells.reserve(static_cast<std::size_t>(op.m));
  for (Eigen::Index k = 0; k < op.m; ++k) {
    cells.push_back(materialize(op.stacked.row(k).transpose(), n, n));
    sym_cells.push_back(cells.back() + cells.back().transpose());
  }

  Rng rng(cfg.seed);
  Matrix x(n, r);
  for (Eigen::Index j = 0; j < r; ++j)
    for (Eigen::Index i = 0; i < n; ++i) x(i, j) = cfg.init_std * rng.normal();
  if (init_override) {
    if (init_override->rows() != n || init_override->cols() != r)
      throw ValidationError("run_sgd_trial: init override must be n x r");
    x = *init_override;
  }

  TrialRecord rec;
  rec.seed = cfg.seed;
  Matrix velocity = Matrix::Zero(n, r);
  Matrix grad(n, r);
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    const Matrix gram = x * x.transpose();
    grad.setZero();
    for (std::size_t pick = 0; pick < cfg.batch_size; ++pick) {
      const std::size_t k = rng.uniform_index(static_cast<std::size_t>(op.m));
      const double resid = (cells[k].array() * gram.array()).sum() - b(static_cast<Eigen::Index>(k));
      grad += 2.0 * resid * (sym_cells[k] * x);
    }
    grad /= static_cast<double>(cfg.batch_size);
    velocity = cfg.momentum * velocity + grad;
    x -= cfg.learning_rate * velocity;
    if (!x.allFinite()) {
      rec.diverged = true;
      break;
    }
  }

  if (rec.diverged) {
    rec.final_distance = std::numeric_limits<double>::infinity();
    rec.final_loss = std::numeric_limits<double>::infinity();
    rec.success = false;
  } else {
    rec.final_distance = (x * x.transpose() - target).norm();
    rec.final_loss = loss(op, x, b);
    rec.success = rec.final_distance <= cfg.success_threshold;
  }
  return rec;
}

/// Search-rank sweep on the width-one hard ensemble: the planted target is
/// rank one, trial t at every rank reuses seed base + t, and trials run in
/// parallel into their own slots.
inline std::vector<std::pair<Eigen::Index, ExperimentSummary>> run_overparam_experiment(
    Eigen::Index n, std::size_t trials, const std::vector<Eigen::Index>& ranks,
    const SgdConfig& cfg) {
  validate_sgd_config(cfg);
  if (trials < 1) throw ValidationError("run_overparam_experiment: need trials >= 1");
  if (ranks.empty()) throw ValidationError("run_overparam_experiment: need at least one rank");
  const SensingOperator op = example_operator(n, 1, 1);
  const Matrix z = example_points(n, 1, 1).Z;

  std::vector<std::pair<Eigen::Index, ExperimentSummary>> out;
  for (const Eigen::Index rank : ranks) {
    std::vector<TrialRecord> records(trials);
    parallel_for(trials, [&](std::size_t t) {
      SgdConfig trial_cfg = cfg;
      trial_cfg.seed = cfg.seed + t;
      records[t] = run_sgd_trial(op, z, rank, trial_cfg);
    });
    out.emplace_back(rank, summarize(std::move(records)));
  }
  return out;
}

/// Full-gradient sanity run in the regime where every second-order point
/// is global: a fresh Gaussian ensemble and consistent data per trial,
/// plain descent with backtracking from a random start. The all-trials
/// guarantee only covers r >= n; smaller ranks run as an unasserted
/// control.
inline ExperimentSummary trivial_regime_check(Eigen::Index n, Eigen::Index r,
                                              std::size_t trials, const SgdConfig& cfg) {
  validate_sgd_config(cfg);
  if (n < 1 || r < 1) throw ValidationError("trivial_regime_check: need n >= 1 and r >= 1");
  if (trials < 1) throw ValidationError("trivial_regime_check: need trials >= 1");

  std::vector<TrialRecord> records(trials);
  parallel_for(trials, [&](std::size_t t) {
    Rng rng(cfg.seed + t);
    SensingOperator op;
    op.n = n;
    op.m = n * n;
    op.stacked.resize(op.m, n * n);
    for (Eigen::Index kk = 0; kk < op.m; ++kk) {
      op.labels.emplace_back(kk % n, kk / n);
      for (Eigen::Index c = 0; c < n * n; ++c) op.stacked(kk, c) = rng.normal();
    }
    Matrix z(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = 0; i < n; ++i) z(i, j) = rng.normal();
    const Matrix target = z * z.transpose();
    const Vector b = apply(op, target);

    Matrix x(n, r);
    for (Eigen::Index j = 0; j < r; ++j)
      for (Eigen::Index i = 0; i < n; ++i) x(i, j) = cfg.init_std * rng.normal();

    double f = loss(op, x, b);
    double step = 1.0;
    Matrix prev_x, prev_grad;
    for (std::size_t it = 0; it < cfg.steps && f > 1e-8; ++it) {
      const Matrix grad = loss_gradient(op, x, b);
      const double gsq = grad.squaredNorm();
      if (gsq <= 1e-24) break;
      // Spectral (Barzilai-Borwein) trial step, falling back to the last
      // accepted step; Armijo halving keeps the run monotone either way.
      double s = std::min(2.0 * step, 1e3);
      if (it > 0) {
        const double num = ((x - prev_x).array() * (grad - prev_grad).array()).sum();
        const double den = (grad - prev_grad).squaredNorm();
        if (num > 0.0 && den > 0.0) s = std::clamp(num / den, 1e-12, 1e3);
      }
      prev_x = x;
      prev_grad = grad;
      bool moved = false;
      while (s > 1e-18) {
        const Matrix cand = x - s * grad;
        const double fc = loss(op, cand, b);
        if (fc <= f - 1e-4 * s * gsq) {
          x = cand;
          f = fc;
          moved = true;
          break;
        }
        s *= 0.5;
      }
      if (!moved) break;
      step = s;
    }

    TrialRecord rec;
    rec.seed = cfg.seed + t;
    rec.final_distance = (x * x.transpose() - target).norm();
    rec.final_loss = f;
    rec.success = f <= 1e-6;
    records[t] = rec;
  });
  return summarize(std::move(records));
}

/// CSV of per-trial outcomes, one block per rank, columns
/// rank,trial,seed,final_distance,final_loss,success.
inline void write_experiment_csv(
    std::ostream& out,
    const std::vector<std::pair<Eigen::Index, ExperimentSummary>>& by_rank) {
  out << "rank,trial,seed,final_distance,final_loss,success\n";
  for (const auto& [rank, summary] : by_rank) {
    for (std::size_t t = 0; t < summary.per_trial.size(); ++t) {
      const TrialRecord& rec = summary.per_trial[t];
      out << rank << ',' << t << ',' << rec.seed << ',' << format_double(rec.final_distance)
          << ',' << format_double(rec.final_loss) << ',' << (rec.success ? 1 : 0) << '\n';
    }
  }
}

}  // namespace riplab
