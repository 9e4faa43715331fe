// Command-line front end: every solver and experiment in the library
// behind one binary, emitting machine-readable JSON reports. Exit codes:
// 0 run completed, 2 validation or input error, 3 solver stall.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "riplab/bounds.hpp"
#include "riplab/eckart_young.hpp"
#include "riplab/errors.hpp"
#include "riplab/experiments.hpp"
#include "riplab/json_io.hpp"
#include "riplab/lmi.hpp"
#include "riplab/sensing.hpp"
#include "riplab/version.hpp"

namespace {

using riplab::Json;
using riplab::Matrix;
using riplab::Vector;

// Fixed seed-splitting tags: one per randomized component, so a single
// global --seed reproduces every subcommand deterministically.
constexpr std::uint64_t kScanTag = 11;
constexpr std::uint64_t kSgdTag = 12;
constexpr std::uint64_t kTrivialTag = 13;
constexpr std::uint64_t kEyOracleTag = 14;

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw riplab::ValidationError("cannot open input file: " + path);
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw riplab::ValidationError("malformed JSON in " + path + ": " + e.what());
  }
}

Vector parse_spectrum(const std::string& csv, const char* what) {
  std::vector<double> vals;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t used = 0;
      vals.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw riplab::ValidationError(std::string(what) + ": cannot parse entry '" + tok + "'");
    }
  }
  if (vals.empty()) throw riplab::ValidationError(std::string(what) + ": empty list");
  return Eigen::Map<const Vector>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

std::vector<Eigen::Index> parse_ranks(const std::string& csv) {
  const Vector v = parse_spectrum(csv, "--ranks");
  std::vector<Eigen::Index> out;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double r = v(i);
    if (r < 1.0 || r != static_cast<double>(static_cast<Eigen::Index>(r)))
      throw riplab::ValidationError("--ranks: entries must be positive integers");
    out.push_back(static_cast<Eigen::Index>(r));
  }
  return out;
}

riplab::FactorPair load_pair(const std::string& path) {
  riplab::FactorPair fp = riplab::factor_pair_from_json(read_json_file(path));
  riplab::validate_factor_pair(fp);
  return fp;
}

void emit(const Json& report, const std::string& report_path) {
  if (report_path.empty()) {
    std::cout << report.dump(2) << "\n";
    return;
  }
  std::ofstream out(report_path);
  if (!out) throw riplab::ValidationError("cannot open report file: " + report_path);
  out << report.dump(2) << "\n";
}

Json summary_to_json(const riplab::ExperimentSummary& summary) {
  Json trials = Json::array();
  for (const riplab::TrialRecord& rec : summary.per_trial) {
    trials.push_back(Json{{"seed", rec.seed},
                          {"final_distance", rec.final_distance},
                          {"final_loss", rec.final_loss},
                          {"success", rec.success},
                          {"diverged", rec.diverged}});
  }
  return Json{{"successes", summary.successes},
              {"failures", summary.failures},
              {"per_trial", std::move(trials)}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Threshold bounds, exact threshold programs, hard ensembles and "
               "overparameterization experiments for low-rank matrix recovery."};
  app.set_version_flag("--version", std::string(riplab::version_string));
  app.require_subcommand(0, 1);

  std::uint64_t seed = 0;
  std::string report_path;
  app.add_option("--seed", seed, "Global seed; per-component seeds are derived from it");
  app.add_option("--report", report_path, "Write the JSON report here instead of stdout");

  // bounds
  auto* sub_bounds = app.add_subcommand("bounds", "Closed-form and trade-off threshold lower bounds");
  sub_bounds->fallthrough();
  std::string bounds_pair;
  sub_bounds->add_option("--pair", bounds_pair, "Factor pair JSON file {\"X\":…, \"Z\":…}")
      ->required();

  // delta-exact
  auto* sub_exact = app.add_subcommand("delta-exact", "Exact threshold via the barrier solver");
  sub_exact->fallthrough();
  std::string exact_pair;
  double exact_tol = 1e-7;
  int exact_budget = 500;
  bool exact_no_matrix = false;
  sub_exact->add_option("--pair", exact_pair, "Factor pair JSON file")->required();
  sub_exact->add_option("--tol", exact_tol, "Duality gap target");
  sub_exact->add_option("--max-newton", exact_budget, "Newton iteration budget");
  sub_exact->add_flag("--no-matrix", exact_no_matrix, "Omit the certificate matrix from the report");

  // scan
  auto* sub_scan = app.add_subcommand("scan", "Pattern search minimizing a threshold objective");
  sub_scan->fallthrough();
  riplab::ScanConfig scan_cfg;
  std::string scan_objective = "lb";
  sub_scan->add_option("--n", scan_cfg.n, "Ambient dimension")->required();
  sub_scan->add_option("--r", scan_cfg.r, "Search rank")->required();
  sub_scan->add_option("--rstar", scan_cfg.r_star, "True rank")->required();
  sub_scan->add_option("--budget", scan_cfg.budget, "Objective evaluation budget");
  sub_scan->add_option("--objective", scan_objective, "One of lb, tradeoff, exact")
      ->check(CLI::IsMember({"lb", "tradeoff", "exact"}));

  // counterexample
  auto* sub_ce = app.add_subcommand("counterexample", "Hard ensemble with a planted spurious point");
  sub_ce->fallthrough();
  Eigen::Index ce_n = 2, ce_r = 1, ce_rstar = 1;
  bool ce_exact = false;
  sub_ce->add_option("--n", ce_n, "Ambient dimension");
  sub_ce->add_option("--r", ce_r, "Search rank");
  sub_ce->add_option("--rstar", ce_rstar, "True rank");
  sub_ce->add_flag("--exact", ce_exact, "Also evaluate the exact threshold at the planted pair");

  // ey
  auto* sub_ey = app.add_subcommand("ey", "Regularized spectral approximation in closed form");
  sub_ey->fallthrough();
  std::string ey_s, ey_d, ey_matrices;
  Eigen::Index ey_r = 0;
  bool ey_oracle = false;
  sub_ey->add_option("--s", ey_s, "Descending spectrum of A, comma separated");
  sub_ey->add_option("--d", ey_d, "Ascending spectrum of B, comma separated");
  sub_ey->add_option("--r", ey_r, "Factor width; must match the length of --d");
  sub_ey->add_option("--matrices", ey_matrices, "JSON file {\"A\":…, \"B\":…} instead of spectra");
  sub_ey->add_flag("--oracle", ey_oracle, "Cross-check with the descent oracle (matrix input only)");

  // sgd-experiment
  auto* sub_sgd = app.add_subcommand("sgd-experiment", "Overparameterized SGD success-rate sweep");
  sub_sgd->fallthrough();
  Eigen::Index sgd_n = 4;
  std::size_t sgd_trials = 100;
  std::string sgd_ranks = "1,2";
  std::string sgd_out;
  riplab::SgdConfig sgd_cfg;
  sub_sgd->add_option("--n", sgd_n, "Ambient dimension of the width-one ensemble");
  sub_sgd->add_option("--trials", sgd_trials, "Trials per rank");
  sub_sgd->add_option("--ranks", sgd_ranks, "Search ranks, comma separated");
  sub_sgd->add_option("--steps", sgd_cfg.steps, "SGD steps per trial");
  sub_sgd->add_option("--lr", sgd_cfg.learning_rate, "Learning rate");
  sub_sgd->add_option("--momentum", sgd_cfg.momentum, "Heavy-ball momentum");
  sub_sgd->add_option("--out", sgd_out, "CSV output path for per-trial rows");

  // trivial-check
  auto* sub_trivial = app.add_subcommand("trivial-check", "Full-rank regime global-recovery check");
  sub_trivial->fallthrough();
  Eigen::Index tr_n = 3, tr_r = 3;
  std::size_t tr_trials = 20;
  riplab::SgdConfig tr_cfg;
  sub_trivial->add_option("--n", tr_n, "Ambient dimension");
  sub_trivial->add_option("--r", tr_r, "Search rank (the guarantee needs r >= n)");
  sub_trivial->add_option("--trials", tr_trials, "Number of trials");
  sub_trivial->add_option("--steps", tr_cfg.steps, "Descent iteration cap");

  // verify-h
  auto* sub_verify = app.add_subcommand("verify-h", "Check a candidate certificate matrix");
  sub_verify->fallthrough();
  std::string verify_pair, verify_h;
  double verify_delta = 0.0;
  double verify_tol = 1e-8;
  sub_verify->add_option("--pair", verify_pair, "Factor pair JSON file")->required();
  sub_verify->add_option("--matrix", verify_h, "Candidate matrix JSON file")->required();
  sub_verify->add_option("--delta", verify_delta, "Threshold the certificate targets")->required();
  sub_verify->add_option("--tol", verify_tol, "Feasibility tolerance");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << e.what() << "\nRun with --help for usage.\n";
    return 2;
  }

  try {
    if (*sub_bounds) {
      const riplab::FactorPair fp = load_pair(bounds_pair);
      const riplab::AlphaBetaSummary ab = riplab::compute_alpha_beta(fp);
      const riplab::TradeoffResult tr = riplab::tradeoff_bound(fp);
      emit(Json{{"subcommand", "bounds"},
                {"paper_ref", "closed-form and trade-off lower bounds on the restricted "
                              "isometry threshold of a factor pair"},
                {"n", fp.n()},
                {"r", fp.r()},
                {"r_star", fp.r_star()},
                {"alpha", ab.alpha},
                {"beta", ab.beta},
                {"e_norm", ab.e_norm},
                {"gamma", riplab::gamma_closed_form(ab.alpha, ab.beta)},
                {"delta_lb", riplab::delta_lower_bound(fp)},
                {"tradeoff",
                 Json{{"delta_bound", tr.delta_bound},
                      {"t_star", tr.t_star},
                      {"cos_theta_at_t_star", tr.cos_theta_at_t_star}}}},
           report_path);
      return 0;
    }

    if (*sub_exact) {
      const riplab::FactorPair fp = load_pair(exact_pair);
      const riplab::LmiSolution sol =
          riplab::solve_delta_exact(riplab::assemble_lmi(fp), exact_tol, exact_budget);
      Json report{{"subcommand", "delta-exact"},
                  {"paper_ref", "exact threshold of a factor pair via the eta-form linear "
                                "matrix inequality"},
                  {"n", fp.n()},
                  {"r", fp.r()},
                  {"r_star", fp.r_star()},
                  {"delta", sol.delta},
                  {"eta", sol.eta},
                  {"gap", sol.gap},
                  {"equality_residual", sol.equality_residual},
                  {"hessian_term_min_eig", sol.hessian_term_min_eig},
                  {"box_min_margin", sol.box_min_margin},
                  {"newton_iterations", sol.newton_iterations}};
      if (!exact_no_matrix) report["H"] = riplab::matrix_to_json(sol.H);
      emit(report, report_path);
      return 0;
    }

    if (*sub_scan) {
      scan_cfg.seed = riplab::Rng::derive_seed(seed, kScanTag);
      if (scan_objective == "lb") scan_cfg.objective = riplab::ScanObjective::lb;
      else if (scan_objective == "tradeoff") scan_cfg.objective = riplab::ScanObjective::tradeoff;
      else scan_cfg.objective = riplab::ScanObjective::exact;
      const riplab::ScanResult res = riplab::pattern_search_min_delta(scan_cfg);
      Json trace = Json::array();
      for (const riplab::TraceEntry& t : res.trace)
        trace.push_back(Json{{"evaluations", t.evaluations}, {"value", t.value}});
      emit(Json{{"subcommand", "scan"},
                {"paper_ref", "pattern search over factor pairs for the least favorable "
                              "threshold"},
                {"objective", scan_objective},
                {"n", scan_cfg.n},
                {"r", scan_cfg.r},
                {"r_star", scan_cfg.r_star},
                {"seed", scan_cfg.seed},
                {"budget", scan_cfg.budget},
                {"evaluations", res.evaluations},
                {"best_value", res.best_value},
                {"best_pair", riplab::factor_pair_to_json(res.best_fp)},
                {"trace", std::move(trace)}},
           report_path);
      return 0;
    }

    if (*sub_ce) {
      const riplab::SensingOperator op = riplab::example_operator(ce_n, ce_r, ce_rstar);
      const riplab::FactorPair fp = riplab::example_points(ce_n, ce_r, ce_rstar);
      const riplab::RipCertificate cert = riplab::full_space_rip_certificate(op);
      const Vector b = riplab::apply(op, fp.Z * fp.Z.transpose());
      const riplab::SecondOrderReport rep = riplab::verify_second_order_point(op, fp.X, b);
      Json report{{"subcommand", "counterexample"},
                  {"paper_ref", "measurement ensemble at the optimal threshold with a planted "
                                "spurious second-order point"},
                  {"n", ce_n},
                  {"r", ce_r},
                  {"r_star", ce_rstar},
                  {"q", ce_r - ce_rstar + 1},
                  {"kappa", cert.kappa},
                  {"nu", cert.nu},
                  {"delta_opt", cert.delta_opt},
                  {"spectrum_min", cert.spectrum_min},
                  {"spectrum_max", cert.spectrum_max},
                  {"top_vector_rank", cert.top_vector_rank},
                  {"bottom_vector_rank", cert.bottom_vector_rank},
                  {"f", rep.f_value},
                  {"grad_norm", rep.grad_norm},
                  {"hess_min_eig", rep.hess_min_eig},
                  {"is_sosp", rep.is_sosp},
                  {"X", riplab::matrix_to_json(fp.X)},
                  {"Z", riplab::matrix_to_json(fp.Z)}};
      if (ce_exact) {
        const riplab::LmiSolution sol = riplab::solve_delta_exact(riplab::assemble_lmi(fp));
        report["delta_exact"] = sol.delta;
        report["delta_exact_gap"] = sol.gap;
      }
      emit(report, report_path);
      return 0;
    }

    if (*sub_ey) {
      riplab::EyInstance inst;
      const Matrix* a_ptr = nullptr;
      Matrix a_mat, b_mat;
      if (!ey_matrices.empty()) {
        if (!ey_s.empty() || !ey_d.empty())
          throw riplab::ValidationError("ey: pass either --matrices or --s/--d, not both");
        const Json j = read_json_file(ey_matrices);
        if (!j.contains("A") || !j.contains("B"))
          throw riplab::ValidationError("ey: matrix JSON must carry A and B");
        a_mat = riplab::matrix_from_json(j.at("A"));
        b_mat = riplab::matrix_from_json(j.at("B"));
        inst = riplab::ey_instance_from_matrices(a_mat, b_mat);
        a_ptr = &a_mat;
      } else {
        if (ey_s.empty() || ey_d.empty())
          throw riplab::ValidationError("ey: need --s and --d (or --matrices)");
        const Vector s = parse_spectrum(ey_s, "--s");
        const Vector d = parse_spectrum(ey_d, "--d");
        if (ey_r != 0 && ey_r != d.size())
          throw riplab::ValidationError("ey: --r must match the length of --d");
        inst = riplab::ey_instance_from_spectra(s, d);
      }
      const riplab::EySolution sol = riplab::solve_regularized_ey(inst);
      Json report{{"subcommand", "ey"},
                  {"paper_ref", "regularized spectral low-rank approximation solved in "
                                "closed form"},
                  {"s", riplab::vector_to_json(inst.s)},
                  {"d", riplab::vector_to_json(inst.d)},
                  {"value", sol.value},
                  {"w", riplab::vector_to_json(sol.w)},
                  {"Y_star", riplab::matrix_to_json(sol.Y_star)}};
      if (ey_oracle) {
        if (a_ptr == nullptr)
          throw riplab::ValidationError("ey: --oracle needs --matrices input");
        report["oracle_value"] =
            riplab::ey_descent_oracle(a_mat, b_mat, riplab::Rng::derive_seed(seed, kEyOracleTag));
      }
      emit(report, report_path);
      return 0;
    }

    if (*sub_sgd) {
      sgd_cfg.seed = riplab::Rng::derive_seed(seed, kSgdTag);
      const auto by_rank =
          riplab::run_overparam_experiment(sgd_n, sgd_trials, parse_ranks(sgd_ranks), sgd_cfg);
      if (!sgd_out.empty()) {
        std::ofstream csv(sgd_out);
        if (!csv) throw riplab::ValidationError("cannot open CSV file: " + sgd_out);
        riplab::write_experiment_csv(csv, by_rank);
      }
      Json ranks = Json::array();
      for (const auto& [rank, summary] : by_rank) {
        Json entry = summary_to_json(summary);
        entry["rank"] = rank;
        ranks.push_back(std::move(entry));
      }
      emit(Json{{"subcommand", "sgd-experiment"},
                {"paper_ref", "overparameterization eliminating spurious minima in "
                              "stochastic gradient recovery"},
                {"n", sgd_n},
                {"trials", sgd_trials},
                {"seed", sgd_cfg.seed},
                {"steps", sgd_cfg.steps},
                {"learning_rate", sgd_cfg.learning_rate},
                {"momentum", sgd_cfg.momentum},
                {"by_rank", std::move(ranks)}},
           report_path);
      return 0;
    }

    if (*sub_trivial) {
      tr_cfg.seed = riplab::Rng::derive_seed(seed, kTrivialTag);
      const riplab::ExperimentSummary summary =
          riplab::trivial_regime_check(tr_n, tr_r, tr_trials, tr_cfg);
      double worst = 0.0;
      for (const riplab::TrialRecord& rec : summary.per_trial)
        worst = std::max(worst, rec.final_loss);
      Json report = summary_to_json(summary);
      report["subcommand"] = "trivial-check";
      report["paper_ref"] =
          "absence of spurious second-order points at search rank at least the dimension";
      report["n"] = tr_n;
      report["r"] = tr_r;
      report["seed"] = tr_cfg.seed;
      report["max_final_loss"] = worst;
      report["all_reached"] = summary.failures == 0;
      emit(report, report_path);
      return 0;
    }

    if (*sub_verify) {
      const riplab::FactorPair fp = load_pair(verify_pair);
      const Matrix h = riplab::matrix_from_json(read_json_file(verify_h));
      const riplab::FeasibilityReport rep =
          riplab::verify_feasible_point(riplab::assemble_lmi(fp), h, verify_delta, verify_tol);
      emit(Json{{"subcommand", "verify-h"},
                {"paper_ref", "feasibility of a candidate certificate for the threshold "
                              "program at a given level"},
                {"delta", verify_delta},
                {"feasible", rep.feasible},
                {"equality_residual", rep.equality_residual},
                {"hessian_min_eig", rep.hessian_min_eig},
                {"box_lower_margin", rep.box_lower_margin},
                {"box_upper_margin", rep.box_upper_margin}},
           report_path);
      return 0;
    }

    std::cerr << app.help();
    return 2;
  } catch (const riplab::SolverStall& e) {
    std::cerr << "solver stall: " << e.what() << "\n";
    return 3;
  } catch (const riplab::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
