#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qnee/ansatz.hpp"
#include "qnee/neural.hpp"
#include "qnee/parallel.hpp"
#include "qnee/quantum_core.hpp"
#include "qnee/rng.hpp"

namespace qnee {

// Outer loop: finite-difference descent on the circuit angles with the
// net's lowest recorded test cost as the objective, restarted from
// n_trials random initial angle sets, reporting the global minimum.

struct QneeConfig {
  int n_layers = 8;
  double eta_q = 0.01;     // circuit learning rate
  double fd_step = 0.01;   // finite-difference step, radians
  bool central_diff = false;
  int n_outer = 200;
  std::uint64_t n_shots = 30000;  // per train/test set
  TrainConfig nn_cfg_initial = [] {
    TrainConfig c;
    c.n_iter = 10000;
    return c;
  }();
  TrainConfig nn_cfg_step = [] {
    TrainConfig c;
    c.n_iter = 100;
    return c;
  }();
  int n_trials = 5;
  std::uint64_t seed = 0;
  // exact outcome distribution and the analytic inner minimum (h = ln P)
  // instead of sampled shots and a trained net
  bool noise_free = false;
  int n_threads = 1;  // for the perturbed evaluations within one gradient

  void validate() const {
    if (n_layers < 1) throw std::invalid_argument("QneeConfig: n_layers must be >= 1");
    if (!(eta_q > 0.0)) throw std::invalid_argument("QneeConfig: eta_q must be > 0");
    if (!(fd_step > 0.0)) throw std::invalid_argument("QneeConfig: fd_step must be > 0");
    if (n_outer < 0) throw std::invalid_argument("QneeConfig: n_outer must be >= 0");
    if (n_shots < 1) throw std::invalid_argument("QneeConfig: n_shots must be >= 1");
    if (n_trials < 1) throw std::invalid_argument("QneeConfig: n_trials must be >= 1");
    if (n_threads < 0) throw std::invalid_argument("QneeConfig: n_threads must be >= 0");
    nn_cfg_initial.validate();
    nn_cfg_step.validate();
  }
};

struct HistoryRow {
  int trial = 0;
  int outer_iter = 0;
  double c_nn = 0.0;
};

struct EigenEstimate {
  double value = 0.0;           // lambda-hat = e^h
  std::uint64_t string_index = 0;  // basis string s_i; eigenvector = V^dag |s_i>
};

struct EstimationRecord {
  std::string method = "qnee";
  int n_qubits = 0;
  bool noise_free = false;
  double entropy_estimate = 0.0;  // min over all recorded costs
  double exact_entropy = 0.0;     // oracle value for the input state
  int best_trial = -1;
  CircuitParams best_params;
  WeightSnapshot best_weights;    // empty in noise-free mode
  std::vector<EigenEstimate> eigen;  // all 2^n, sorted by value descending
  std::vector<HistoryRow> history;
  // one headline number per trial, for mean/std/min aggregation: the trial's
  // lowest recorded cost here, its final frequency entropy for the baseline;
  // NaN for a trial that produced no record
  std::vector<double> trial_estimates;
  double wall_seconds = 0.0;

  std::vector<double> eigenvalues() const {
    std::vector<double> v(eigen.size());
    for (std::size_t i = 0; i < eigen.size(); ++i) v[i] = eigen[i].value;
    return v;
  }
};

class EstimationError : public std::runtime_error {
 public:
  EstimationError(const std::string& msg, std::vector<HistoryRow> hist)
      : std::runtime_error(msg), history(std::move(hist)) {}
  std::vector<HistoryRow> history;
};

namespace detail {

// seed-derivation tags so every (trial, outer_iter, coordinate, set) pair
// draws an independent shot stream
inline constexpr std::uint64_t kTagTheta = 0x7431u;
inline constexpr std::uint64_t kTagNet = 0x6e31u;
inline constexpr std::uint64_t kTagTrain = 0x7261u;
inline constexpr std::uint64_t kTagTest = 0x7465u;

inline std::uint64_t shot_seed(const QneeConfig& cfg, int trial, int outer_iter, int coord,
                               bool test) {
  return mix_seed(cfg.seed, test ? kTagTest : kTagTrain, static_cast<std::uint64_t>(trial),
                  static_cast<std::uint64_t>(outer_iter), static_cast<std::uint64_t>(coord));
}

}  // namespace detail

struct EvalDetail {
  WeightSnapshot best_weights;
  std::vector<double> h_table;
};

// One inner minimization at fixed circuit angles: sample fresh train/test
// shot sets, warm-start-train the net, return the lowest recorded test cost.
// In noise-free mode the inner problem is solved analytically: the exact
// outcome distribution is used and the optimal table is h = ln P, whose cost
// is the Shannon entropy of P.
inline double evaluate_cnn(const DensityMatrix& rho, const CircuitParams& params, EntropyNet& net,
                           const QneeConfig& cfg, int trial = 0, int outer_iter = 0, int coord = 0,
                           bool initial_training = false, EvalDetail* detail_out = nullptr) {
  const auto dist = outcome_distribution(rho, params);
  if (cfg.noise_free) {
    if (detail_out) {
      detail_out->h_table.resize(dist.size());
      for (std::size_t i = 0; i < dist.size(); ++i)
        detail_out->h_table[i] = dist[i] > 0.0 ? std::log(dist[i]) : -std::numeric_limits<double>::infinity();
      detail_out->best_weights = WeightSnapshot{};
    }
    return shannon_entropy(dist);
  }
  TrainConfig nn_cfg = initial_training ? cfg.nn_cfg_initial : cfg.nn_cfg_step;
  nn_cfg.seed = mix_seed(cfg.seed, 0x6d62u, static_cast<std::uint64_t>(trial),
                         static_cast<std::uint64_t>(outer_iter), static_cast<std::uint64_t>(coord));
  const ShotSet train_shots =
      sample_shots(dist, cfg.n_shots, detail::shot_seed(cfg, trial, outer_iter, coord, false));
  const ShotSet test_shots =
      sample_shots(dist, cfg.n_shots, detail::shot_seed(cfg, trial, outer_iter, coord, true));
  NnResult res = train(net, train_shots, test_shots, nn_cfg);
  if (detail_out) {
    detail_out->best_weights = std::move(res.best_weights);
    detail_out->h_table = std::move(res.h_table);
  }
  return res.c_nn;
}

struct FdGradient {
  std::vector<double> gradient;
  double baseline_cost = 0.0;
  EvalDetail baseline_detail;
};

// Gradient of C^NN with respect to the circuit angles. The baseline
// evaluation advances `net` in place (it doubles as this iteration's cost
// refresh); each perturbed evaluation warm-starts from a copy of the
// post-baseline net with the short refresh budget. A caller that already
// evaluated the baseline at these angles can pass its cost to skip the
// repeat (the net must then already be advanced past that evaluation).
inline FdGradient fd_gradient(const DensityMatrix& rho, const CircuitParams& params,
                              EntropyNet& net, const QneeConfig& cfg, int trial = 0,
                              int outer_iter = 0, const double* known_baseline = nullptr) {
  FdGradient out;
  out.baseline_cost = known_baseline
                          ? *known_baseline
                          : evaluate_cnn(rho, params, net, cfg, trial, outer_iter, 0,
                                         outer_iter == 0, &out.baseline_detail);
  const int n_angles = static_cast<int>(params.angles.size());
  out.gradient.resize(static_cast<std::size_t>(n_angles));
  parallel_for(static_cast<std::size_t>(n_angles), effective_threads(cfg.n_threads),
               [&](std::size_t j) {
                 const int coord = static_cast<int>(j) + 1;
                 CircuitParams pp = params;
                 pp.angles[j] += cfg.fd_step;
                 EntropyNet net_plus = net;
                 const double c_plus =
                     evaluate_cnn(rho, pp, net_plus, cfg, trial, outer_iter, coord);
                 if (cfg.central_diff) {
                   pp.angles[j] = params.angles[j] - cfg.fd_step;
                   EntropyNet net_minus = net;
                   const double c_minus = evaluate_cnn(rho, pp, net_minus, cfg, trial, outer_iter,
                                                       coord + n_angles);
                   out.gradient[j] = (c_plus - c_minus) / (2.0 * cfg.fd_step);
                 } else {
                   out.gradient[j] = (c_plus - out.baseline_cost) / cfg.fd_step;
                 }
               });
  return out;
}

namespace detail {

inline std::vector<EigenEstimate> eigen_from_h(const std::vector<double>& h) {
  std::vector<EigenEstimate> out(h.size());
  for (std::size_t i = 0; i < h.size(); ++i)
    out[i] = EigenEstimate{std::exp(h[i]), static_cast<std::uint64_t>(i)};
  std::stable_sort(out.begin(), out.end(), [](const EigenEstimate& a, const EigenEstimate& b) {
    if (a.value != b.value) return a.value > b.value;
    return a.string_index < b.string_index;
  });
  return out;
}

}  // namespace detail

inline EstimationRecord run_qnee(const DensityMatrix& rho, const QneeConfig& cfg) {
  cfg.validate();
  const auto t_start = std::chrono::steady_clock::now();
  const int n = rho.n_qubits();

  EstimationRecord rec;
  rec.method = "qnee";
  rec.n_qubits = n;
  rec.noise_free = cfg.noise_free;
  rec.exact_entropy = von_neumann_exact(rho);
  rec.entropy_estimate = std::numeric_limits<double>::infinity();

  std::vector<double> best_h;
  int ok_trials = 0;

  for (int trial = 0; trial < cfg.n_trials; ++trial) {
    CircuitParams params =
        CircuitParams::random(n, cfg.n_layers, mix_seed(cfg.seed, detail::kTagTheta,
                                                        static_cast<std::uint64_t>(trial)));
    EntropyNet net(n, 64, 256, mix_seed(cfg.seed, detail::kTagNet,
                                        static_cast<std::uint64_t>(trial)));
    auto consider = [&](int outer_iter, double cost, const EvalDetail& detail,
                        const CircuitParams& at) {
      rec.history.push_back(HistoryRow{trial, outer_iter, cost});
      if (cost < rec.entropy_estimate) {
        rec.entropy_estimate = cost;
        rec.best_trial = trial;
        rec.best_params = at;
        rec.best_weights = detail.best_weights;
        best_h = detail.h_table;
      }
    };
    try {
      for (int k = 0; k < cfg.n_outer; ++k) {
        EvalDetail detail;
        const double c_base = evaluate_cnn(rho, params, net, cfg, trial, k, 0, k == 0, &detail);
        consider(k, c_base, detail, params);
        FdGradient fd = fd_gradient(rho, params, net, cfg, trial, k, &c_base);
        for (std::size_t j = 0; j < params.angles.size(); ++j)
          params.angles[j] -= cfg.eta_q * fd.gradient[j];
      }
      EvalDetail final_detail;
      const double c_final = evaluate_cnn(rho, params, net, cfg, trial, cfg.n_outer, 0,
                                          cfg.n_outer == 0, &final_detail);
      consider(cfg.n_outer, c_final, final_detail, params);
      ++ok_trials;
    } catch (const TrainingError&) {
      // this restart diverged; the others may still succeed
      continue;
    }
  }
  if (ok_trials == 0)
    throw EstimationError("run_qnee: every trial diverged", rec.history);

  rec.trial_estimates.assign(static_cast<std::size_t>(cfg.n_trials),
                             std::numeric_limits<double>::quiet_NaN());
  for (const auto& row : rec.history) {
    double& e = rec.trial_estimates[static_cast<std::size_t>(row.trial)];
    if (std::isnan(e) || row.c_nn < e) e = row.c_nn;
  }

  rec.eigen = detail::eigen_from_h(best_h);
  rec.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return rec;
}

// Top-k eigenvalue/eigenvector estimates from a finished record. The vector
// for string s is the circuit-conjugated basis column at the best angles.
inline std::vector<std::pair<double, StateVector>> extract_eigen(const EstimationRecord& record,
                                                                 int k) {
  if (k < 1 || static_cast<std::size_t>(k) > record.eigen.size())
    throw std::invalid_argument("extract_eigen: k out of range");
  std::vector<std::pair<double, StateVector>> out;
  out.reserve(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    const auto& e = record.eigen[static_cast<std::size_t>(i)];
    out.emplace_back(e.value,
                     conjugate_column(record.best_params, BitString{record.n_qubits,
                                                                    e.string_index}));
  }
  return out;
}

// Learning-curve CSV; one row per recorded cost. %.17g keeps the text exact
// so a parse-and-re-emit round trip is byte-identical.
inline std::string learning_curve_csv(const EstimationRecord& record) {
  std::string out = "trial,outer_iter,c_nn,exact_entropy_if_known\n";
  char buf[128];
  for (const auto& row : record.history) {
    std::snprintf(buf, sizeof(buf), "%d,%d,%.17g,%.17g\n", row.trial, row.outer_iter, row.c_nn,
                  record.exact_entropy);
    out += buf;
  }
  return out;
}

}  // namespace qnee
