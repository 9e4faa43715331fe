// Walkthrough: the hard measurement ensemble. Builds the family at a few
// shapes, certifies its restricted isometry threshold, checks that the
// planted point is a spurious second-order point, and then shows that
// raising the search rank lets stochastic gradient descent escape it.

#include <cstdio>

#include "riplab/experiments.hpp"
#include "riplab/sensing.hpp"

int main() {
  std::printf("Hard ensemble with a planted spurious point\n");
  std::printf("===========================================\n\n");

  const struct { Eigen::Index n, r, r_star; } shapes[] = {{2, 1, 1}, {4, 2, 1}, {4, 3, 2}};
  for (const auto& sh : shapes) {
    const riplab::SensingOperator op = riplab::example_operator(sh.n, sh.r, sh.r_star);
    const riplab::FactorPair fp = riplab::example_points(sh.n, sh.r, sh.r_star);
    const riplab::RipCertificate cert = riplab::full_space_rip_certificate(op);
    const riplab::Vector b = riplab::apply(op, fp.Z * fp.Z.transpose());
    const riplab::SecondOrderReport rep = riplab::verify_second_order_point(op, fp.X, b);

    std::printf("shape n=%td, r=%td, r*=%td  (q = %td)\n", sh.n, sh.r, sh.r_star,
                sh.r - sh.r_star + 1);
    std::printf("  threshold delta = %.6f  (kappa = %.4f)\n", cert.delta_opt, cert.kappa);
    std::printf("  extremal vector ranks: %td and %td, both within r + r*\n",
                cert.top_vector_rank, cert.bottom_vector_rank);
    std::printf("  planted point: f = %.6f, |grad| = %.1e, min Hessian eig = %.1e\n",
                rep.f_value, rep.grad_norm, rep.hess_min_eig);
    std::printf("  spurious second-order point: %s\n\n", rep.is_sosp ? "yes" : "no");
  }

  std::printf("Escaping by overparameterization (n = 4, heavy-ball SGD)\n");
  std::printf("--------------------------------------------------------\n");
  riplab::SgdConfig cfg;
  cfg.seed = 0;
  const auto by_rank = riplab::run_overparam_experiment(4, 40, {1, 2, 3}, cfg);
  for (const auto& [rank, summary] : by_rank) {
    std::printf("  search rank %td: %zu of %zu trials recovered the target\n", rank,
                summary.successes, summary.per_trial.size());
  }
  std::printf("\nAt search rank one some runs stall at the planted point; one extra\n");
  std::printf("column of overparameterization removes those failures. Any misses at\n");
  std::printf("higher rank come from step-size divergence, not from spurious minima.\n");
  return 0;
}
