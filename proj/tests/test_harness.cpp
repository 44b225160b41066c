// Sweep driver, file outputs, check suite wiring, and the command-line
// binary itself (exit codes, config file, environment overrides).

#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include <json.hpp>

#include "qnee/checks.hpp"
#include "qnee/sweep.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path fresh_dir(const std::string& tag) {
  const fs::path p = fs::temp_directory_path() / ("qnee_harness_" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) fields.push_back(cell);
    rows.push_back(std::move(fields));
  }
  return rows;
}

// small noise-free sweep used by several sections: exact per-shot
// distributions, so results are reproducible and fast
qnee::SweepConfig small_sweep(const fs::path& out) {
  qnee::SweepConfig cfg;
  cfg.L = 6;
  cfg.lambda_grid = {0.5, 3.0};
  cfg.subsystems = {2};
  cfg.method = "qnee";
  cfg.out_dir = out.string();
  cfg.seed = 11;
  cfg.qnee.noise_free = true;
  cfg.qnee.n_layers = 2;
  cfg.qnee.n_outer = 6;
  cfg.qnee.n_trials = 2;
  return cfg;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(QNEE_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  REQUIRE(rc != -1);
  REQUIRE(WIFEXITED(rc));
  return WEXITSTATUS(rc);
}

}  // namespace

TEST_CASE("ground state command writes exact references") {
  const auto out = fresh_dir("gs");
  qnee::SweepConfig cfg;
  cfg.lambda_grid = {1.9, 3.0};
  cfg.subsystems = {3, 4};
  cfg.out_dir = out.string();

  const auto res = qnee::cmd_ground_state(cfg);
  REQUIRE(res.rows.size() == 4);

  for (const auto& row : res.rows) {
    if (row.lambda == 3.0) CHECK(row.exact_entropy == Catch::Approx(0.0).margin(1e-9));
    CHECK(row.spectrum.front() <= 1.0 + 1e-12);
    CHECK(row.spectrum.front() >= row.spectrum.back());
  }
  // lambda = 3 is in the polarized phase: the block state is pure
  CHECK(res.rows[2].spectrum.front() == Catch::Approx(1.0).margin(1e-9));

  const auto csv = parse_csv(slurp(res.csv_path));
  REQUIRE(csv.size() == 5);
  CHECK(csv[0] == std::vector<std::string>{"lambda", "subsystem", "ground_energy",
                                           "exact_entropy"});
  CHECK(csv[1][1] == "3");
  CHECK(csv[2][1] == "4");

  const json recs = json::parse(slurp(res.json_path));
  REQUIRE(recs.is_array());
  REQUIRE(recs.size() == 4);
  for (const auto& rec : recs) {
    for (const char* key : {"lambda", "L", "delta", "subsystem", "ground_energy",
                            "ground_degeneracy", "exact_entropy", "spectrum", "rho_real",
                            "rho_imag"})
      REQUIRE(rec.contains(key));
    const std::size_t d = std::size_t{1} << rec["subsystem"].get<int>();
    REQUIRE(rec["rho_real"].size() == d);
    REQUIRE(rec["rho_real"][0].size() == d);
    REQUIRE(rec["spectrum"].size() == d);
    // diagonal of rho must sum to one
    double tr = 0.0;
    for (std::size_t i = 0; i < d; ++i) tr += rec["rho_real"][i][i].get<double>();
    CHECK(tr == Catch::Approx(1.0).margin(1e-12));
  }
}

TEST_CASE("estimate sweep repeats byte for byte") {
  const auto out_a = fresh_dir("det_a");
  const auto out_b = fresh_dir("det_b");
  const auto res_a = qnee::cmd_estimate(small_sweep(out_a));
  const auto res_b = qnee::cmd_estimate(small_sweep(out_b));
  REQUIRE(res_a.n_failed == 0);
  REQUIRE(res_b.n_failed == 0);

  for (const char* name : {"aggregate.csv", "trials.csv", "error_scatter.csv"})
    CHECK(slurp(out_a / name) == slurp(out_b / name));
}

TEST_CASE("estimate sweep emits a consistent schema") {
  const auto out = fresh_dir("schema");
  auto cfg = small_sweep(out);
  const auto res = qnee::cmd_estimate(cfg);
  REQUIRE(res.cells.size() == 2);
  REQUIRE(res.n_failed == 0);

  const auto agg = parse_csv(slurp(res.aggregate_csv));
  REQUIRE(agg.size() == 3);
  CHECK(agg[0] == std::vector<std::string>{"lambda", "subsystem", "method", "n_trials",
                                           "estimate", "mean_estimate", "std_estimate",
                                           "min_estimate", "exact_entropy", "abs_error",
                                           "status", "record_file"});

  for (std::size_t i = 0; i < res.cells.size(); ++i) {
    const auto& cell = res.cells[i];
    const auto& row = agg[i + 1];
    REQUIRE(cell.ok);
    CHECK(row[2] == "qnee");
    CHECK(row[10] == "ok");

    // headline estimate is the lowest recorded cost, across trials and rows
    const auto& te = cell.record.trial_estimates;
    REQUIRE(te.size() == 2);
    const double te_min = std::min(te[0], te[1]);
    CHECK(cell.record.entropy_estimate == Catch::Approx(te_min).margin(1e-12));
    CHECK(std::stod(row[4]) == Catch::Approx(cell.record.entropy_estimate).margin(1e-12));
    CHECK(std::stod(row[7]) == Catch::Approx(te_min).margin(1e-12));
    CHECK(std::stod(row[9]) ==
          Catch::Approx(std::abs(cell.record.entropy_estimate - cell.exact_entropy))
              .margin(1e-12));

    // per-cell record round-trips through the json file
    const json rec = json::parse(slurp(out / cell.record_file));
    CHECK(rec["lambda"].get<double>() == Catch::Approx(cell.lambda));
    CHECK(rec["subsystem"].get<int>() == cell.subsystem);
    CHECK(rec["method"].get<std::string>() == "qnee");
    CHECK(rec["ok"].get<bool>());
    CHECK(rec["noise_free"].get<bool>());
    CHECK(rec["entropy_estimate"].get<double>() ==
          Catch::Approx(cell.record.entropy_estimate).margin(1e-12));
    CHECK(rec["trial_estimates"].size() == 2);
    CHECK(rec["history"].size() == cell.record.history.size());
    const auto eigs = rec["eigenvalues"].get<std::vector<double>>();
    REQUIRE(!eigs.empty());
    CHECK(std::is_sorted(eigs.rbegin(), eigs.rend()));
  }

  // trials.csv: one row per (cell, trial); noise-free trials all record
  const auto trials = parse_csv(slurp(res.trials_csv));
  REQUIRE(trials.size() == 1 + 2 * 2);
  CHECK(trials[0][3] == "trial");
  for (std::size_t i = 1; i < trials.size(); ++i) CHECK(trials[i][4] != "nan");

  const auto scatter = parse_csv(slurp(res.scatter_csv));
  REQUIRE(scatter.size() == 3);
  CHECK(scatter[0] == std::vector<std::string>{"method", "lambda", "subsystem",
                                               "exact_entropy", "abs_error"});
}

TEST_CASE("method both runs the sweep per estimator") {
  const auto out = fresh_dir("both");
  auto cfg = small_sweep(out);
  cfg.lambda_grid = {1.0};
  cfg.method = "both";
  cfg.qnee.n_outer = 3;
  cfg.vqse.n_layers = 2;
  cfg.vqse.n_iter = 20;
  cfg.vqse.n_shots = 1000;
  cfg.vqse.n_trials = 1;

  const auto res = qnee::cmd_estimate(cfg);
  REQUIRE(res.cells.size() == 2);
  REQUIRE(res.n_failed == 0);

  std::set<std::string> methods, files;
  for (const auto& cell : res.cells) {
    methods.insert(cell.method);
    files.insert(cell.record_file);
    CHECK(cell.ok);
    CHECK(cell.record.method == cell.method);
    CHECK(fs::exists(out / cell.record_file));
  }
  CHECK(methods == std::set<std::string>{"qnee", "vqse"});
  CHECK(files.size() == 2);

  const auto agg = parse_csv(slurp(res.aggregate_csv));
  REQUIRE(agg.size() == 3);
  CHECK(agg[1][2] != agg[2][2]);
}

TEST_CASE("exact method synthesizes reference records") {
  const auto out = fresh_dir("exact");
  auto cfg = small_sweep(out);
  cfg.method = "exact";
  const auto res = qnee::cmd_estimate(cfg);
  REQUIRE(res.cells.size() == 2);
  for (const auto& cell : res.cells) {
    REQUIRE(cell.ok);
    CHECK(cell.record.entropy_estimate == Catch::Approx(cell.exact_entropy).margin(1e-12));
    CHECK(cell.record.trial_estimates.size() == 1);
    CHECK(!cell.record.eigen.empty());
  }
}

TEST_CASE("trial statistics skip failed trials") {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const auto st = qnee::detail::trial_stats({nan, 1.0, 3.0});
  CHECK(st.n == 2);
  CHECK(st.mean == Catch::Approx(2.0));
  CHECK(st.min == Catch::Approx(1.0));
  CHECK(st.std_dev == Catch::Approx(std::sqrt(2.0)));

  const auto single = qnee::detail::trial_stats({0.7});
  CHECK(single.n == 1);
  CHECK(single.std_dev == 0.0);

  const auto empty = qnee::detail::trial_stats({nan});
  CHECK(empty.n == 0);
  CHECK(std::isnan(empty.mean));
}

TEST_CASE("check suite passes clean and fails under fault injection") {
  qnee::CheckSuiteConfig cfg;
  cfg.n_instances = 25;
  cfg.seed = 3;

  const auto clean = qnee::run_all_checks(cfg);
  REQUIRE(clean.size() == 11);
  CHECK(qnee::all_pass(clean));

  cfg.mutation = qnee::Mutation::kVnCostSign;
  const auto mutated = qnee::run_all_checks(cfg);
  REQUIRE(mutated.size() == 11);
  CHECK(!qnee::all_pass(mutated));
  for (const auto& r : mutated) {
    if (r.name == "dv-bound") {
      CHECK(!r.pass);
      CHECK(r.n_violations > 0);
    } else {
      CHECK(r.pass);
    }
  }

  CHECK(qnee::parse_mutation("") == qnee::Mutation::kNone);
  CHECK(qnee::parse_mutation("none") == qnee::Mutation::kNone);
  CHECK(qnee::parse_mutation("vn-cost-sign") == qnee::Mutation::kVnCostSign);
  CHECK_THROWS_AS(qnee::parse_mutation("typo"), std::invalid_argument);

  const auto report = qnee::format_check_report(mutated);
  CHECK(report.find("[FAIL] dv-bound") != std::string::npos);
  CHECK(report.find("10 passed") != std::string::npos);
}

TEST_CASE("cli exit codes") {
  CHECK(run_cli("--help") == 0);
  CHECK(run_cli("estimate --bogus-flag") == 1);
  CHECK(run_cli("") == 1);  // a subcommand is required
  CHECK(run_cli("estimate --method nonsense") == 1);
  CHECK(run_cli("oracle-check --instances 10 --seed 3") == 0);
  CHECK(run_cli("oracle-check --instances 10 --seed 3 --mutate vn-cost-sign") == 2);
  CHECK(run_cli("oracle-check --instances 10 --mutate typo") == 1);

  // a cell failure is reported per row and through the exit code: one qubit
  // cannot host the two-qubit entangling blocks
  const auto out = fresh_dir("cli_fail");
  CHECK(run_cli("estimate --L 2 --subsystem 1 --method qnee --noise-free --lambda-grid 1.0 "
                "--trials 1 --outer-iters 1 --out " +
                out.string()) == 3);
  const auto agg = parse_csv(slurp(out / "aggregate.csv"));
  REQUIRE(agg.size() == 2);
  CHECK(agg[1][10] == "error");
}

TEST_CASE("cli config file and environment overrides") {
  const auto out = fresh_dir("cli_conf");
  const fs::path conf = out / "run.ini";
  {
    std::ofstream f(conf);
    f << "[ground-state]\nL=6\nlambda-grid=3.0\nsubsystem=2\n";
  }
  CHECK(run_cli("ground-state --config " + conf.string() + " --out " + out.string()) == 0);
  auto gs = parse_csv(slurp(out / "ground_state.csv"));
  REQUIRE(gs.size() == 2);
  CHECK(gs[1][0] == "3");
  CHECK(gs[1][1] == "2");

  // command line wins over the file
  CHECK(run_cli("ground-state --config " + conf.string() + " --subsystem 3 --out " +
                out.string()) == 0);
  gs = parse_csv(slurp(out / "ground_state.csv"));
  CHECK(gs[1][1] == "3");

  // keys outside a subcommand section match nothing and must be rejected
  const fs::path bad = out / "bad.ini";
  {
    std::ofstream f(bad);
    f << "method=exact\n";
  }
  CHECK(run_cli("estimate --config " + bad.string()) == 1);
  CHECK(run_cli("estimate --config " + (out / "missing.ini").string()) == 1);

  // environment variables fill in anything not given explicitly
  const auto env_out = fresh_dir("cli_env");
  const std::string cmd = "QNEE_L=6 QNEE_METHOD=exact QNEE_LAMBDA_GRID=1.0,2.0 "
                          "QNEE_SUBSYSTEM=2 QNEE_OUT=" +
                          env_out.string() + " " + std::string(QNEE_CLI_PATH) +
                          " estimate >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  REQUIRE(rc != -1);
  CHECK(WEXITSTATUS(rc) == 0);
  const auto agg = parse_csv(slurp(env_out / "aggregate.csv"));
  REQUIRE(agg.size() == 3);
  CHECK(agg[1][2] == "exact");
}
