#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <vector>

#include "qnee/ansatz.hpp"
#include "qnee/hybrid.hpp"
#include "qnee/parallel.hpp"
#include "qnee/quantum_core.hpp"
#include "qnee/rng.hpp"

namespace qnee {

// Baseline eigensolver: minimize the expectation of a scheduled Hamiltonian
// H = (1-t) H_L + t H_G over the circuit angles, then read the leading
// eigenvalues off the final string frequencies. The local part is
// E_L(s) = 1 - 1/2 sum_j r_j z_j with r_j = r1 + (j-1) dr, which makes the
// ell+1 lowest levels nondegenerate; the global part assigns those same
// levels to the m currently most numerous strings and 1 to everything else.

struct VqseConfig {
  int ell = 0;  // 0 = number of qubits
  double r1 = 0.2;
  double delta_r = 0.01;
  int m = 0;  // size of the top-string set; 0 = ell + 1
  int t_update_period = 25;
  double learning_rate = 0.05;
  int n_iter = 200;
  std::uint64_t n_shots = 30000;
  int n_layers = 8;
  double fd_step = 0.01;
  int n_trials = 5;
  std::uint64_t seed = 0;
  int n_threads = 1;
  // identity-equivalent or otherwise chosen start shared by all trials;
  // unset = per-trial random angles
  std::optional<CircuitParams> theta_init;

  int effective_ell(int n_qubits) const { return ell > 0 ? ell : n_qubits; }
  int effective_m(int n_qubits) const { return m > 0 ? m : effective_ell(n_qubits) + 1; }

  void validate() const {
    if (!(r1 > 0.0)) throw std::invalid_argument("VqseConfig: r1 must be > 0");
    if (delta_r < 0.0) throw std::invalid_argument("VqseConfig: delta_r must be >= 0");
    if (t_update_period < 1)
      throw std::invalid_argument("VqseConfig: t_update_period must be >= 1");
    if (!(learning_rate > 0.0))
      throw std::invalid_argument("VqseConfig: learning_rate must be > 0");
    if (n_iter < 1) throw std::invalid_argument("VqseConfig: n_iter must be >= 1");
    if (n_shots < 1) throw std::invalid_argument("VqseConfig: n_shots must be >= 1");
    if (n_layers < 1) throw std::invalid_argument("VqseConfig: n_layers must be >= 1");
    if (!(fd_step > 0.0)) throw std::invalid_argument("VqseConfig: fd_step must be > 0");
    if (n_trials < 1) throw std::invalid_argument("VqseConfig: n_trials must be >= 1");
    if (n_threads < 0) throw std::invalid_argument("VqseConfig: n_threads must be >= 0");
  }
};

inline double local_energy(const BitString& s, const VqseConfig& cfg) {
  const int ell = cfg.effective_ell(s.n_qubits);
  if (ell > s.n_qubits) throw std::invalid_argument("local_energy: ell exceeds qubit count");
  double acc = 0.0;
  for (int j = 0; j < ell; ++j) {
    const double r = cfg.r1 + j * cfg.delta_r;
    const int z = bit_of(s.index, j, s.n_qubits) ? -1 : 1;
    acc += r * z;
  }
  return 1.0 - 0.5 * acc;
}

// All 2^ell local levels, ascending. Throws if the lowest m levels are not
// strictly separated (the level-matching construction requires it).
inline std::vector<double> local_levels(int n_qubits, const VqseConfig& cfg) {
  const int ell = cfg.effective_ell(n_qubits);
  const int m = cfg.effective_m(n_qubits);
  const std::size_t d = dim_for_qubits(ell);
  if (static_cast<std::size_t>(m) >= d)
    throw std::invalid_argument("local_levels: top set must be smaller than 2^ell");
  std::vector<double> levels(d);
  for (std::size_t i = 0; i < d; ++i) levels[i] = local_energy(BitString{ell, i}, cfg);
  std::sort(levels.begin(), levels.end());
  for (int j = 0; j + 1 <= m; ++j)
    if (!(levels[static_cast<std::size_t>(j)] + 1e-12 <
          levels[static_cast<std::size_t>(j) + 1]))
      throw std::invalid_argument("local_levels: lowest levels are degenerate; adjust r1/delta_r");
  return levels;
}

// Piecewise-constant ramp: t rises every update period and hits 1 at 75% of
// the run, holding there for the final quarter.
inline double vqse_t(int iter, const VqseConfig& cfg) {
  const double ramp_end = 0.75 * static_cast<double>(cfg.n_iter);
  if (ramp_end <= 0.0) return 1.0;
  const double stepped =
      static_cast<double>((iter / cfg.t_update_period) * cfg.t_update_period);
  return std::min(1.0, stepped / ramp_end);
}

// Most numerous strings first; count ties break toward the smaller index.
inline std::vector<BitString> select_top_strings(const ShotSet& shots, int m) {
  if (m < 1 || static_cast<std::size_t>(m) > shots.counts.size())
    throw std::invalid_argument("select_top_strings: m out of range");
  std::vector<std::size_t> idx(shots.counts.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (shots.counts[a] != shots.counts[b]) return shots.counts[a] > shots.counts[b];
    return a < b;
  });
  std::vector<BitString> out;
  out.reserve(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j)
    out.push_back(BitString{shots.n_qubits, static_cast<std::uint64_t>(idx[static_cast<std::size_t>(j)])});
  return out;
}

// <H> under dist: the j-th entry of top_set (most numerous first) gets the
// j-th lowest local level as its global energy; strings outside the set get 1.
inline double vqse_cost(const std::vector<double>& dist, double t,
                        const std::vector<BitString>& top_set, const VqseConfig& cfg) {
  if (dist.empty()) throw std::invalid_argument("vqse_cost: empty distribution");
  if (t < 0.0 || t > 1.0) throw std::invalid_argument("vqse_cost: t must be in [0, 1]");
  int n_qubits = 0;
  while ((std::size_t{1} << n_qubits) < dist.size()) ++n_qubits;
  if ((std::size_t{1} << n_qubits) != dist.size())
    throw std::invalid_argument("vqse_cost: distribution length must be a power of two");
  const int m = cfg.effective_m(n_qubits);
  if (static_cast<int>(top_set.size()) != m)
    throw std::invalid_argument("vqse_cost: top set size does not match m");
  const auto levels = local_levels(n_qubits, cfg);
  std::vector<double> e_global(dist.size(), 1.0);
  for (int j = 0; j < m; ++j)
    e_global[top_set[static_cast<std::size_t>(j)].index] = levels[static_cast<std::size_t>(j)];
  double cost = 0.0;
  for (std::size_t s = 0; s < dist.size(); ++s) {
    const double e_local = local_energy(BitString{n_qubits, s}, cfg);
    cost += dist[s] * ((1.0 - t) * e_local + t * e_global[s]);
  }
  return cost;
}

namespace detail {

inline constexpr std::uint64_t kTagVqseTheta = 0x7671u;
inline constexpr std::uint64_t kTagVqseShots = 0x7673u;

inline ShotSet vqse_sample(const DensityMatrix& rho, const CircuitParams& params,
                           const VqseConfig& cfg, int trial, int iter, int coord) {
  const auto dist = outcome_distribution(rho, params);
  return sample_shots(dist, cfg.n_shots,
                      mix_seed(cfg.seed, kTagVqseShots, static_cast<std::uint64_t>(trial),
                               static_cast<std::uint64_t>(iter),
                               static_cast<std::uint64_t>(coord)));
}

}  // namespace detail

// Full baseline run. History rows carry the sampled Hamiltonian expectation
// (an energy, not an entropy bound). The entropy estimate is read off the
// final string frequencies of the trial whose recorded cost got lowest:
// lambda-hat_i = N_i / N_s over the top-m strings, summed as -sum l ln l.
inline EstimationRecord run_vqse(const DensityMatrix& rho, const VqseConfig& cfg) {
  cfg.validate();
  const auto t_start = std::chrono::steady_clock::now();
  const int n = rho.n_qubits();
  const int m = cfg.effective_m(n);
  local_levels(n, cfg);  // nondegeneracy gate before any work
  if (cfg.theta_init) {
    if (cfg.theta_init->n_qubits != n || cfg.theta_init->n_layers != cfg.n_layers)
      throw std::invalid_argument("run_vqse: theta_init shape mismatch");
    cfg.theta_init->validate();
  }

  EstimationRecord rec;
  rec.method = "vqse";
  rec.n_qubits = n;
  rec.exact_entropy = von_neumann_exact(rho);

  double best_cost = std::numeric_limits<double>::infinity();
  int best_trial = -1;
  CircuitParams best_final_params;
  ShotSet best_final_shots;

  for (int trial = 0; trial < cfg.n_trials; ++trial) {
    CircuitParams params =
        cfg.theta_init ? *cfg.theta_init
                       : CircuitParams::random(n, cfg.n_layers,
                                               mix_seed(cfg.seed, detail::kTagVqseTheta,
                                                        static_cast<std::uint64_t>(trial)));
    std::vector<BitString> top_set;
    double trial_best = std::numeric_limits<double>::infinity();

    auto record_row = [&](int iter, double cost) {
      rec.history.push_back(HistoryRow{trial, iter, cost});
      trial_best = std::min(trial_best, cost);
    };

    for (int k = 0; k < cfg.n_iter; ++k) {
      const double t = vqse_t(k, cfg);
      const ShotSet base_shots = detail::vqse_sample(rho, params, cfg, trial, k, 0);
      if (k % cfg.t_update_period == 0) top_set = select_top_strings(base_shots, m);
      const double c_base = vqse_cost(base_shots.frequencies(), t, top_set, cfg);
      record_row(k, c_base);

      std::vector<double> grad(params.angles.size());
      parallel_for(params.angles.size(), effective_threads(cfg.n_threads), [&](std::size_t j) {
        CircuitParams pp = params;
        pp.angles[j] += cfg.fd_step;
        const ShotSet shots =
            detail::vqse_sample(rho, pp, cfg, trial, k, static_cast<int>(j) + 1);
        const double c_plus = vqse_cost(shots.frequencies(), t, top_set, cfg);
        grad[j] = (c_plus - c_base) / cfg.fd_step;
      });
      for (std::size_t j = 0; j < params.angles.size(); ++j)
        params.angles[j] -= cfg.learning_rate * grad[j];
    }

    const ShotSet final_shots = detail::vqse_sample(rho, params, cfg, trial, cfg.n_iter, 0);
    record_row(cfg.n_iter, vqse_cost(final_shots.frequencies(), 1.0,
                                     select_top_strings(final_shots, m), cfg));
    {
      const auto f = final_shots.frequencies();
      double trial_entropy = 0.0;
      for (const auto& s : select_top_strings(final_shots, m))
        if (f[s.index] > 0.0) trial_entropy -= f[s.index] * std::log(f[s.index]);
      rec.trial_estimates.push_back(trial_entropy);
    }
    if (trial_best < best_cost) {
      best_cost = trial_best;
      best_trial = trial;
      best_final_params = params;
      best_final_shots = final_shots;
    }
  }

  rec.best_trial = best_trial;
  rec.best_params = best_final_params;
  const auto freq = best_final_shots.frequencies();
  const auto top = select_top_strings(best_final_shots, m);
  double entropy = 0.0;
  rec.eigen.reserve(static_cast<std::size_t>(m));
  for (const auto& s : top) {
    const double lam = freq[s.index];
    rec.eigen.push_back(EigenEstimate{lam, s.index});
    if (lam > 0.0) entropy -= lam * std::log(lam);
  }
  rec.entropy_estimate = entropy;
  rec.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return rec;
}

}  // namespace qnee
