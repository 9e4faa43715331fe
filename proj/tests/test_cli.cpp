// End-to-end tests for the command-line binary. Each case spawns the real
// executable, captures stdout, and checks the JSON report and exit code.

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "catch2/catch_amalgamated.hpp"
#include "riplab/json_io.hpp"

namespace {

struct CliResult {
  int exit_code = -1;
  std::string output;
};

CliResult run_cli(const std::string& args) {
  CliResult res;
  const std::string cmd = std::string("\"") + RIPLAB_CLI_PATH + "\" " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  std::size_t got = 0;
  while ((got = std::fread(buf, 1, sizeof(buf), pipe)) > 0) res.output.append(buf, got);
  const int status = pclose(pipe);
  res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return res;
}

riplab::Json parse_report(const CliResult& res) {
  REQUIRE(res.exit_code == 0);
  return riplab::Json::parse(res.output);
}

std::string write_temp(const std::string& name, const std::string& text) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream out(path);
  out << text;
  return path.string();
}

// X = (0, 1)^T, Z = (sqrt 2, 0)^T: both lower bounds and the exact
// threshold equal one half for this pair.
std::string reference_pair_file() {
  static const std::string path = write_temp(
      "riplab_cli_pair.json",
      "{\"X\":{\"rows\":2,\"cols\":1,\"entries\":[0.0,1.0]},"
      "\"Z\":{\"rows\":2,\"cols\":1,\"entries\":[1.4142135623730951,0.0]}}");
  return path;
}

}  // namespace

TEST_CASE("version flag prints the library identifier") {
  const CliResult res = run_cli("--version");
  CHECK(res.exit_code == 0);
  CHECK(res.output.find("riplab") != std::string::npos);
}

TEST_CASE("bounds subcommand reports one half on the reference pair") {
  const riplab::Json j = parse_report(run_cli("bounds --pair " + reference_pair_file()));
  CHECK(j.at("subcommand") == "bounds");
  CHECK(j.at("n") == 2);
  CHECK(j.at("r") == 1);
  CHECK(j.at("delta_lb").get<double>() == Catch::Approx(0.5).margin(1e-9));
  CHECK(j.at("tradeoff").at("delta_bound").get<double>() == Catch::Approx(0.5).margin(1e-9));
  CHECK(j.at("gamma").get<double>() ==
        Catch::Approx(j.at("tradeoff").at("delta_bound").get<double>()).margin(1e-8));
}

TEST_CASE("delta-exact subcommand solves the reference pair") {
  const riplab::Json j =
      parse_report(run_cli("delta-exact --pair " + reference_pair_file() + " --no-matrix"));
  CHECK(j.at("subcommand") == "delta-exact");
  CHECK(j.at("delta").get<double>() == Catch::Approx(0.5).margin(1e-4));
  CHECK(j.at("gap").get<double>() < 1e-6);
  CHECK_FALSE(j.contains("H"));

  const riplab::Json full = parse_report(run_cli("delta-exact --pair " + reference_pair_file()));
  REQUIRE(full.contains("H"));
  CHECK(full.at("H").at("rows") == 4);
}

TEST_CASE("counterexample subcommand reports the planted spurious point") {
  const riplab::Json j = parse_report(run_cli("counterexample --n 2 --r 1 --rstar 1"));
  CHECK(j.at("subcommand") == "counterexample");
  CHECK(j.at("q") == 1);
  CHECK(j.at("delta_opt").get<double>() == Catch::Approx(0.5).margin(1e-12));
  CHECK(j.at("f").get<double>() == Catch::Approx(1.5).margin(1e-12));
  CHECK(j.at("is_sosp").get<bool>());
  CHECK(j.at("kappa").get<double>() == Catch::Approx(3.0).margin(1e-12));
  CHECK(j.at("X").at("rows") == 2);
}

TEST_CASE("ey subcommand evaluates the closed form from spectra") {
  const riplab::Json j = parse_report(run_cli("ey --s 3,2,1 --d 0,0 --r 2"));
  CHECK(j.at("subcommand") == "ey");
  CHECK(j.at("value").get<double>() == Catch::Approx(1.0).margin(1e-12));
  REQUIRE(j.at("w").size() == 2);
  CHECK(j.at("w")[0].get<double>() == Catch::Approx(3.0).margin(1e-12));
  CHECK(j.at("w")[1].get<double>() == Catch::Approx(2.0).margin(1e-12));
}

TEST_CASE("ey subcommand cross-checks matrix input against the descent oracle") {
  const std::string path = write_temp(
      "riplab_cli_ey.json",
      "{\"A\":{\"rows\":2,\"cols\":2,\"entries\":[2.0,0.0,0.0,1.0]},"
      "\"B\":{\"rows\":2,\"cols\":2,\"entries\":[0.5,0.0,0.0,0.5]}}");
  const riplab::Json j = parse_report(run_cli("ey --matrices " + path + " --oracle"));
  CHECK(j.at("value").get<double>() == Catch::Approx(2.5).margin(1e-10));
  CHECK(j.at("oracle_value").get<double>() == Catch::Approx(2.5).margin(1e-5));
}

TEST_CASE("verify-h accepts the certificate emitted by delta-exact") {
  const riplab::Json full = parse_report(run_cli("delta-exact --pair " + reference_pair_file()));
  const std::string h_path = write_temp("riplab_cli_h.json", full.at("H").dump());
  const double delta = full.at("delta").get<double>();
  const riplab::Json j = parse_report(
      run_cli("verify-h --pair " + reference_pair_file() + " --matrix " + h_path + " --delta " +
              std::to_string(delta + 1e-6) + " --tol 1e-6"));
  CHECK(j.at("subcommand") == "verify-h");
  CHECK(j.at("feasible").get<bool>());
}

TEST_CASE("seeded subcommands emit byte-identical reports") {
  const CliResult a = run_cli("scan --n 2 --r 1 --rstar 1 --budget 150 --seed 5");
  const CliResult b = run_cli("scan --n 2 --r 1 --rstar 1 --budget 150 --seed 5");
  REQUIRE(a.exit_code == 0);
  CHECK(a.output == b.output);

  const riplab::Json j = riplab::Json::parse(a.output);
  CHECK(j.at("evaluations") == 150);
  CHECK(j.at("best_value").get<double>() >= 0.5 - 1e-6);
}

TEST_CASE("sgd-experiment writes the CSV sweep") {
  const std::string csv_path =
      (std::filesystem::temp_directory_path() / "riplab_cli_sweep.csv").string();
  const riplab::Json j = parse_report(
      run_cli("sgd-experiment --n 4 --trials 3 --ranks 1,2 --steps 200 --out " + csv_path));
  REQUIRE(j.at("by_rank").size() == 2);
  for (const auto& entry : j.at("by_rank"))
    CHECK(entry.at("successes").get<int>() + entry.at("failures").get<int>() == 3);

  std::ifstream csv(csv_path);
  REQUIRE(csv.good());
  std::string header;
  std::getline(csv, header);
  CHECK(header == "rank,trial,seed,final_distance,final_loss,success");
  int rows = 0;
  for (std::string line; std::getline(csv, line);)
    if (!line.empty()) ++rows;
  CHECK(rows == 6);
}

TEST_CASE("trivial-check reaches the target on every trial") {
  const riplab::Json j = parse_report(run_cli("trivial-check --n 3 --r 3 --trials 3"));
  CHECK(j.at("all_reached").get<bool>());
  CHECK(j.at("max_final_loss").get<double>() <= 1e-6);
}

TEST_CASE("report flag writes the JSON to a file") {
  const std::string path =
      (std::filesystem::temp_directory_path() / "riplab_cli_report.json").string();
  const CliResult res = run_cli("ey --s 2,1 --d 0,0 --report " + path);
  CHECK(res.exit_code == 0);
  CHECK(res.output.empty());
  std::ifstream in(path);
  REQUIRE(in.good());
  const riplab::Json j = riplab::Json::parse(in);
  CHECK(j.at("value").get<double>() == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("input errors exit with code two") {
  CHECK(run_cli("bogus-subcommand").exit_code == 2);
  CHECK(run_cli("").exit_code == 2);
  CHECK(run_cli("bounds --pair /nonexistent/pair.json").exit_code == 2);

  const std::string bad = write_temp("riplab_cli_bad.json", "{\"X\": [broken");
  CHECK(run_cli("bounds --pair " + bad).exit_code == 2);

  CHECK(run_cli("ey --s 3,2,x --d 0").exit_code == 2);
  CHECK(run_cli("ey --s 3,2,1 --d 0,0 --r 3").exit_code == 2);
  CHECK(run_cli("counterexample --n 2 --r 2 --rstar 1").exit_code == 2);
  CHECK(run_cli("scan --n 2 --r 1").exit_code == 2);
}
