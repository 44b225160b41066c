#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "qnee/hybrid.hpp"
#include "qnee/vqse.hpp"
#include "qnee/xxz.hpp"

// Experiment driver behind the CLI: sweeps the field strength over a grid,
// runs the chosen estimators per (lambda, subsystem) cell against the exact
// reduction, and emits plot-ready CSV plus one JSON record per cell. Tables
// use %.17g so identical seeds reproduce byte-identical files; wall-clock
// times therefore live only in the JSON records.

namespace qnee {

// 0 to 3 in steps of 0.25, densified to 0.1 steps around the transition.
inline std::vector<double> default_lambda_grid() {
  std::vector<double> g;
  for (int i = 0; i <= 12; ++i) g.push_back(0.25 * i);
  for (double x : {1.7, 1.8, 1.9, 2.1}) g.push_back(x);
  std::sort(g.begin(), g.end());
  return g;
}

struct EstimateCell {
  double lambda = 0.0;
  int subsystem = 0;
  std::string method;
  bool ok = false;
  std::string error;
  double exact_entropy = 0.0;
  EstimationRecord record;
  std::string record_file;  // relative to out_dir
};

struct SweepConfig {
  int L = 8;
  double delta = 0.05;
  std::vector<double> lambda_grid = default_lambda_grid();
  std::vector<int> subsystems = {3, 4};
  std::string method = "qnee";  // qnee | vqse | both | exact
  QneeConfig qnee;
  VqseConfig vqse;
  std::string out_dir = "qnee_out";
  std::uint64_t seed = 0;
  int n_threads = 1;  // sweep-cell pool width
  // called once per finished estimation cell, from the worker that ran it;
  // a multi-threaded caller must make this reentrant
  std::function<void(const EstimateCell&)> progress;

  void validate() const {
    XxzConfig probe{L, delta, 0.0};
    probe.validate();
    if (lambda_grid.empty()) throw std::invalid_argument("SweepConfig: lambda grid is empty");
    if (subsystems.empty()) throw std::invalid_argument("SweepConfig: no subsystem sizes");
    for (int s : subsystems)
      if (s < 1 || s >= L)
        throw std::invalid_argument("SweepConfig: subsystem size must be in [1, L)");
    if (method != "qnee" && method != "vqse" && method != "both" && method != "exact")
      throw std::invalid_argument("SweepConfig: method must be qnee, vqse, both, or exact");
    if (n_threads < 0) throw std::invalid_argument("SweepConfig: n_threads must be >= 0");
    if (out_dir.empty()) throw std::invalid_argument("SweepConfig: output directory is empty");
    qnee.validate();
    vqse.validate();
  }
};

namespace detail {

inline std::string g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw std::runtime_error("failed while writing " + path.string());
}

inline constexpr std::uint64_t kTagSweepCell = 0x73776570u;

inline std::uint64_t method_tag(const std::string& method) {
  if (method == "qnee") return 1;
  if (method == "vqse") return 2;
  return 3;
}

// Seeds depend on the cell's coordinates, not its position in the grid, so
// adding grid points never reshuffles existing cells.
inline std::uint64_t cell_seed(std::uint64_t seed, double lambda, int subsystem,
                               const std::string& method) {
  return mix_seed(seed, kTagSweepCell, std::bit_cast<std::uint64_t>(lambda),
                  static_cast<std::uint64_t>(subsystem), method_tag(method));
}

struct TrialStats {
  int n = 0;
  double mean = std::numeric_limits<double>::quiet_NaN();
  double std_dev = std::numeric_limits<double>::quiet_NaN();
  double min = std::numeric_limits<double>::quiet_NaN();
};

inline TrialStats trial_stats(const std::vector<double>& estimates) {
  TrialStats st;
  double sum = 0.0;
  double lo = std::numeric_limits<double>::infinity();
  for (double e : estimates) {
    if (std::isnan(e)) continue;
    ++st.n;
    sum += e;
    lo = std::min(lo, e);
  }
  if (st.n == 0) return st;
  st.mean = sum / st.n;
  st.min = lo;
  if (st.n > 1) {
    double ss = 0.0;
    for (double e : estimates) {
      if (std::isnan(e)) continue;
      ss += (e - st.mean) * (e - st.mean);
    }
    st.std_dev = std::sqrt(ss / (st.n - 1));
  } else {
    st.std_dev = 0.0;
  }
  return st;
}

}  // namespace detail

struct GroundStateRow {
  double lambda = 0.0;
  int subsystem = 0;
  double ground_energy = 0.0;
  double exact_entropy = 0.0;
  std::vector<double> spectrum;  // descending
};

struct GroundStateOutcome {
  std::vector<GroundStateRow> rows;
  std::string csv_path;
  std::string json_path;
};

// Exact references per grid cell: ground energy, block entropy, block
// spectrum, and the serialized reduced state.
inline GroundStateOutcome cmd_ground_state(const SweepConfig& cfg) {
  cfg.validate();
  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir);

  GroundStateOutcome out;
  std::string csv = "lambda,subsystem,ground_energy,exact_entropy\n";
  nlohmann::json records = nlohmann::json::array();

  for (double lambda : cfg.lambda_grid) {
    const XxzConfig xcfg{cfg.L, cfg.delta, lambda};
    const auto gs = ground_state(xcfg);
    for (int sub : cfg.subsystems) {
      const auto rho = reduced_block(gs.state, sub);
      GroundStateRow row;
      row.lambda = lambda;
      row.subsystem = sub;
      row.ground_energy = gs.energy;
      row.exact_entropy = von_neumann_exact(rho);
      row.spectrum = eig_hermitian(rho).eigenvalues;

      csv += detail::g17(row.lambda) + "," + std::to_string(sub) + "," +
             detail::g17(row.ground_energy) + "," + detail::g17(row.exact_entropy) + "\n";

      nlohmann::json rec;
      rec["lambda"] = row.lambda;
      rec["L"] = cfg.L;
      rec["delta"] = cfg.delta;
      rec["subsystem"] = sub;
      rec["ground_energy"] = row.ground_energy;
      rec["ground_degeneracy"] = gs.degeneracy;
      rec["exact_entropy"] = row.exact_entropy;
      rec["spectrum"] = row.spectrum;
      const auto& m = rho.matrix();
      nlohmann::json re = nlohmann::json::array(), im = nlohmann::json::array();
      for (std::size_t r = 0; r < m.dim(); ++r) {
        nlohmann::json re_row = nlohmann::json::array(), im_row = nlohmann::json::array();
        for (std::size_t c = 0; c < m.dim(); ++c) {
          re_row.push_back(m(r, c).real());
          im_row.push_back(m(r, c).imag());
        }
        re.push_back(std::move(re_row));
        im.push_back(std::move(im_row));
      }
      rec["rho_real"] = std::move(re);
      rec["rho_imag"] = std::move(im);
      records.push_back(std::move(rec));

      out.rows.push_back(std::move(row));
    }
  }

  const fs::path csv_path = fs::path(cfg.out_dir) / "ground_state.csv";
  const fs::path json_path = fs::path(cfg.out_dir) / "ground_state.json";
  detail::write_file(csv_path, csv);
  detail::write_file(json_path, records.dump(2) + "\n");
  out.csv_path = csv_path.string();
  out.json_path = json_path.string();
  return out;
}

struct EstimateOutcome {
  std::vector<EstimateCell> cells;
  int n_failed = 0;
  std::string trials_csv;
  std::string aggregate_csv;
  std::string scatter_csv;
};

// Full estimation sweep. Cells run in a thread pool; each failure is caught
// and recorded in its row (status column) while the rest of the sweep
// continues. All CSV emission happens on the calling thread afterwards.
inline EstimateOutcome cmd_estimate(const SweepConfig& cfg) {
  cfg.validate();
  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir);

  std::vector<std::string> methods;
  if (cfg.method == "both")
    methods = {"qnee", "vqse"};
  else
    methods = {cfg.method};

  // exact references are shared across methods; compute once per (lambda, sub)
  struct CellPlan {
    std::size_t lambda_index;
    double lambda;
    int subsystem;
    std::string method;
    DensityMatrix rho = DensityMatrix::maximally_mixed(1);
    double exact = 0.0;
  };
  std::vector<CellPlan> plans;
  for (std::size_t li = 0; li < cfg.lambda_grid.size(); ++li) {
    const double lambda = cfg.lambda_grid[li];
    const auto gs = ground_state(XxzConfig{cfg.L, cfg.delta, lambda});
    for (int sub : cfg.subsystems) {
      const auto rho = reduced_block(gs.state, sub);
      const double exact = von_neumann_exact(rho);
      for (const auto& method : methods) {
        CellPlan p;
        p.lambda_index = li;
        p.lambda = lambda;
        p.subsystem = sub;
        p.method = method;
        p.rho = rho;
        p.exact = exact;
        plans.push_back(std::move(p));
      }
    }
  }

  EstimateOutcome out;
  out.cells.resize(plans.size());

  parallel_for(plans.size(), effective_threads(cfg.n_threads), [&](std::size_t i) {
    const auto& plan = plans[i];
    EstimateCell& cell = out.cells[i];
    cell.lambda = plan.lambda;
    cell.subsystem = plan.subsystem;
    cell.method = plan.method;
    cell.exact_entropy = plan.exact;
    char name[96];
    std::snprintf(name, sizeof(name), "cell_lam%02zu_sub%d_%s.json", plan.lambda_index,
                  plan.subsystem, plan.method.c_str());
    cell.record_file = name;
    try {
      if (plan.method == "qnee") {
        QneeConfig qc = cfg.qnee;
        qc.seed = detail::cell_seed(cfg.seed, plan.lambda, plan.subsystem, plan.method);
        cell.record = run_qnee(plan.rho, qc);
      } else if (plan.method == "vqse") {
        VqseConfig vc = cfg.vqse;
        vc.seed = detail::cell_seed(cfg.seed, plan.lambda, plan.subsystem, plan.method);
        cell.record = run_vqse(plan.rho, vc);
      } else {  // exact: oracle values dressed in the shared record shape
        EstimationRecord rec;
        rec.method = "exact";
        rec.n_qubits = plan.rho.n_qubits();
        rec.exact_entropy = plan.exact;
        rec.entropy_estimate = plan.exact;
        rec.trial_estimates = {plan.exact};
        rec.best_trial = 0;
        const auto spectrum = eig_hermitian(plan.rho).eigenvalues;
        for (std::size_t k = 0; k < spectrum.size(); ++k)
          rec.eigen.push_back(EigenEstimate{spectrum[k], k});
        cell.record = std::move(rec);
      }
      cell.ok = true;
    } catch (const EstimationError& e) {
      cell.error = e.what();
      cell.record.history = e.history;  // keep the partial trace for the JSON
    } catch (const TrainingError& e) {
      cell.error = e.what();
    } catch (const std::exception& e) {
      cell.error = e.what();
    }
    if (cfg.progress) cfg.progress(cell);
  });

  std::string trials = "lambda,subsystem,method,trial,entropy_estimate,exact_entropy,abs_error\n";
  std::string agg =
      "lambda,subsystem,method,n_trials,estimate,mean_estimate,std_estimate,min_estimate,"
      "exact_entropy,abs_error,status,record_file\n";
  std::string scatter = "method,lambda,subsystem,exact_entropy,abs_error\n";

  for (const auto& cell : out.cells) {
    const std::string key = detail::g17(cell.lambda) + "," + std::to_string(cell.subsystem);
    if (cell.ok) {
      for (std::size_t t = 0; t < cell.record.trial_estimates.size(); ++t) {
        const double est = cell.record.trial_estimates[t];
        trials += key + "," + cell.method + "," + std::to_string(t) + "," + detail::g17(est) +
                  "," + detail::g17(cell.exact_entropy) + "," +
                  detail::g17(std::abs(est - cell.exact_entropy)) + "\n";
      }
      const auto st = detail::trial_stats(cell.record.trial_estimates);
      const double abs_error = std::abs(st.min - cell.exact_entropy);
      agg += key + "," + cell.method + "," + std::to_string(st.n) + "," +
             detail::g17(cell.record.entropy_estimate) + "," + detail::g17(st.mean) + "," +
             detail::g17(st.std_dev) + "," + detail::g17(st.min) + "," +
             detail::g17(cell.exact_entropy) + "," + detail::g17(abs_error) + ",ok," +
             cell.record_file + "\n";
      scatter += cell.method + "," + key + "," + detail::g17(cell.exact_entropy) + "," +
                 detail::g17(abs_error) + "\n";
    } else {
      ++out.n_failed;
      const std::string nan = "nan";
      agg += key + "," + cell.method + ",0," + nan + "," + nan + "," + nan + "," + nan + "," +
             detail::g17(cell.exact_entropy) + "," + nan + ",error," + cell.record_file + "\n";
    }

    nlohmann::json rec;
    rec["lambda"] = cell.lambda;
    rec["L"] = cfg.L;
    rec["delta"] = cfg.delta;
    rec["subsystem"] = cell.subsystem;
    rec["method"] = cell.method;
    rec["ok"] = cell.ok;
    rec["error"] = cell.error;
    rec["seed"] = detail::cell_seed(cfg.seed, cell.lambda, cell.subsystem, cell.method);
    rec["exact_entropy"] = cell.exact_entropy;
    if (cell.ok) {
      rec["entropy_estimate"] = cell.record.entropy_estimate;
      rec["trial_estimates"] = cell.record.trial_estimates;
      rec["best_trial"] = cell.record.best_trial;
      rec["noise_free"] = cell.record.noise_free;
      rec["eigenvalues"] = cell.record.eigenvalues();
      rec["best_angles"] = cell.record.best_params.angles;
      rec["wall_seconds"] = cell.record.wall_seconds;
    }
    nlohmann::json hist = nlohmann::json::array();
    for (const auto& row : cell.record.history)
      hist.push_back({{"trial", row.trial}, {"outer_iter", row.outer_iter}, {"c_nn", row.c_nn}});
    rec["history"] = std::move(hist);
    detail::write_file(fs::path(cfg.out_dir) / cell.record_file, rec.dump(2) + "\n");
  }

  const fs::path trials_path = fs::path(cfg.out_dir) / "trials.csv";
  const fs::path agg_path = fs::path(cfg.out_dir) / "aggregate.csv";
  const fs::path scatter_path = fs::path(cfg.out_dir) / "error_scatter.csv";
  detail::write_file(trials_path, trials);
  detail::write_file(agg_path, agg);
  detail::write_file(scatter_path, scatter);
  out.trials_csv = trials_path.string();
  out.aggregate_csv = agg_path.string();
  out.scatter_csv = scatter_path.string();
  return out;
}

}  // namespace qnee
