// Command-line driver: exact references, estimation sweeps, and the
// invariant self-check suite. Exit codes: 0 success, 1 usage or
// configuration error, 2 invariant failure, 3 estimation or runtime failure.

#include <cstdio>
#include <exception>
#include <mutex>
#include <string>

#include <CLI11.hpp>

#include "qnee/checks.hpp"
#include "qnee/sweep.hpp"

namespace {

struct CliState {
  qnee::SweepConfig sweep;
  int instances = 200;
  std::string mutate = "none";
};

void add_common_options(CLI::App* cmd, CliState& st) {
  // lets --config (a root option) appear after the subcommand name
  cmd->fallthrough();
  cmd->add_option("--seed", st.sweep.seed, "global seed")->envname("QNEE_SEED");
  cmd->add_option("--out", st.sweep.out_dir, "output directory")->envname("QNEE_OUT");
  cmd->add_option("--lambda-grid", st.sweep.lambda_grid,
                  "comma-separated field strengths (default: 0..3 step 0.25, densified "
                  "near the transition)")
      ->delimiter(',')
      ->envname("QNEE_LAMBDA_GRID");
  cmd->add_option("--subsystem", st.sweep.subsystems, "comma-separated block sizes")
      ->delimiter(',')
      ->envname("QNEE_SUBSYSTEM");
  cmd->add_option("--L", st.sweep.L, "chain length")->envname("QNEE_L");
  cmd->add_option("--delta", st.sweep.delta, "anisotropy")->envname("QNEE_DELTA");
}

void add_estimation_options(CLI::App* cmd, CliState& st) {
  cmd->add_option("--method", st.sweep.method, "qnee, vqse, both, or exact")
      ->check(CLI::IsMember({"qnee", "vqse", "both", "exact"}))
      ->envname("QNEE_METHOD");
  cmd->add_option_function<int>(
         "--trials", [&st](int v) { st.sweep.qnee.n_trials = v; st.sweep.vqse.n_trials = v; },
         "restarts per cell, both methods")
      ->envname("QNEE_TRIALS");
  cmd->add_option_function<std::uint64_t>(
         "--shots",
         [&st](std::uint64_t v) { st.sweep.qnee.n_shots = v; st.sweep.vqse.n_shots = v; },
         "shots per evaluation, both methods")
      ->envname("QNEE_SHOTS");
  cmd->add_option_function<int>(
         "--layers", [&st](int v) { st.sweep.qnee.n_layers = v; st.sweep.vqse.n_layers = v; },
         "ansatz layers, both methods")
      ->envname("QNEE_LAYERS");
  cmd->add_option("--outer-iters", st.sweep.qnee.n_outer, "circuit update steps")
      ->envname("QNEE_OUTER_ITERS");
  cmd->add_option("--vqse-iters", st.sweep.vqse.n_iter, "baseline update steps")
      ->envname("QNEE_VQSE_ITERS");
  cmd->add_option("--eta-q", st.sweep.qnee.eta_q, "circuit learning rate")
      ->envname("QNEE_ETA_Q");
  cmd->add_option("--nn-initial-iters", st.sweep.qnee.nn_cfg_initial.n_iter,
                  "network iterations for the first evaluation of a trial")
      ->envname("QNEE_NN_INITIAL_ITERS");
  cmd->add_option("--nn-step-iters", st.sweep.qnee.nn_cfg_step.n_iter,
                  "network refresh iterations per later evaluation")
      ->envname("QNEE_NN_STEP_ITERS");
  cmd->add_flag("--noise-free", st.sweep.qnee.noise_free,
                "exact distributions and the analytic inner minimum, no sampling")
      ->envname("QNEE_NOISE_FREE");
  cmd->add_option_function<int>(
         "--threads",
         [&st](int v) {
           st.sweep.n_threads = v;
           st.sweep.qnee.n_threads = v;
           st.sweep.vqse.n_threads = v;
         },
         "worker threads for sweep cells and gradient coordinates")
      ->envname("QNEE_THREADS");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"entropy estimation toolkit for small spin-chain reductions"};
  app.require_subcommand(1);
  app.set_config("--config", "",
                 "INI configuration file; keys live under a [subcommand] section, "
                 "e.g. [estimate] then method=exact")
      ->envname("QNEE_CONFIG");
  app.allow_config_extras(CLI::config_extras_mode::error);
  CliState st;

  auto* gs = app.add_subcommand("ground-state",
                                "write exact energies, entropies, spectra, and reduced states");
  auto* est = app.add_subcommand("estimate", "run the estimation sweep and write records");
  auto* oc = app.add_subcommand("oracle-check", "run the invariant self-check suite");
  for (auto* cmd : {gs, est, oc}) {
    add_common_options(cmd, st);
    add_estimation_options(cmd, st);
  }
  oc->add_option("--instances", st.instances, "random instances per bound check")
      ->envname("QNEE_INSTANCES");
  oc->add_option("--mutate", st.mutate, "fault injection for the check suite (vn-cost-sign)")
      ->envname("QNEE_MUTATE");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (gs->parsed()) {
      const auto out = qnee::cmd_ground_state(st.sweep);
      std::printf("ground-state: %zu rows -> %s\n", out.rows.size(), out.csv_path.c_str());
      return 0;
    }
    if (est->parsed()) {
      std::mutex io_mutex;
      st.sweep.progress = [&io_mutex](const qnee::EstimateCell& cell) {
        std::lock_guard<std::mutex> lock(io_mutex);
        if (cell.ok)
          std::printf("lambda=%-5g sub=%d %-5s estimate=%.6f exact=%.6f\n", cell.lambda,
                      cell.subsystem, cell.method.c_str(), cell.record.entropy_estimate,
                      cell.exact_entropy);
        else
          std::printf("lambda=%-5g sub=%d %-5s FAILED: %s\n", cell.lambda, cell.subsystem,
                      cell.method.c_str(), cell.error.c_str());
        std::fflush(stdout);
      };
      const auto out = qnee::cmd_estimate(st.sweep);
      std::printf("estimate: %zu cells, %d failed -> %s\n", out.cells.size(), out.n_failed,
                  out.aggregate_csv.c_str());
      return out.n_failed > 0 ? 3 : 0;
    }
    // oracle-check
    qnee::CheckSuiteConfig ccfg;
    ccfg.n_instances = st.instances;
    ccfg.seed = st.sweep.seed;
    ccfg.mutation = qnee::parse_mutation(st.mutate);
    const auto results = qnee::run_all_checks(ccfg);
    std::fputs(qnee::format_check_report(results).c_str(), stdout);
    return qnee::all_pass(results) ? 0 : 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return oc->parsed() ? 2 : 3;
  }
}
