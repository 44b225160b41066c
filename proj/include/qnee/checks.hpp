#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "qnee/ansatz.hpp"
#include "qnee/hybrid.hpp"
#include "qnee/linalg.hpp"
#include "qnee/neural.hpp"
#include "qnee/quantum_core.hpp"
#include "qnee/rng.hpp"

// Runtime self-check suite behind the oracle-check subcommand: the bound and
// saturation identities the estimator relies on, evaluated on freshly drawn
// random instances, plus both gradient cross-checks. A deliberate mutation
// mode flips the sign of the normalization term in the von Neumann cost so
// the harness can demonstrate that a broken cost is caught by the bound
// checks rather than silently tolerated.

namespace qnee {

enum class Mutation { kNone, kVnCostSign };

inline Mutation parse_mutation(const std::string& name) {
  if (name.empty() || name == "none") return Mutation::kNone;
  if (name == "vn-cost-sign") return Mutation::kVnCostSign;
  throw std::invalid_argument("unknown mutation: " + name +
                              " (supported: none, vn-cost-sign)");
}

struct CheckResult {
  std::string name;
  int n_instances = 0;
  int n_violations = 0;
  double worst = -std::numeric_limits<double>::infinity();
  double tolerance = 0.0;
  bool pass = false;
  std::string note;
};

namespace detail {

// Box-Muller on top of uniform01 so the draws are identical on every
// platform; std::normal_distribution makes no such promise.
inline double gaussian(std::mt19937_64& rng) {
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

inline ComplexMatrix random_hermitian(std::size_t d, std::mt19937_64& rng, double scale) {
  ComplexMatrix m(d);
  for (std::size_t r = 0; r < d; ++r) {
    m(r, r) = scale * gaussian(rng);
    for (std::size_t c = r + 1; c < d; ++c) {
      const complex_t z{scale * gaussian(rng) / std::sqrt(2.0),
                        scale * gaussian(rng) / std::sqrt(2.0)};
      m(r, c) = z;
      m(c, r) = std::conj(z);
    }
  }
  return m;
}

// Ginibre construction: G G^dag normalized to unit trace. Full rank almost
// surely, eigenvalues bounded away from zero well past log-safety.
inline DensityMatrix random_density(int n_qubits, std::mt19937_64& rng) {
  const std::size_t d = dim_for_qubits(n_qubits);
  ComplexMatrix g(d);
  for (std::size_t r = 0; r < d; ++r)
    for (std::size_t c = 0; c < d; ++c) g(r, c) = complex_t{gaussian(rng), gaussian(rng)};
  ComplexMatrix m = g * g.dagger();
  const double tr = m.trace().real();
  m *= complex_t{1.0 / tr, 0.0};
  for (std::size_t r = 0; r < d; ++r)
    for (std::size_t c = r + 1; c < d; ++c) {
      const complex_t avg = 0.5 * (m(r, c) + std::conj(m(c, r)));
      m(r, c) = avg;
      m(c, r) = std::conj(avg);
    }
  for (std::size_t r = 0; r < d; ++r) m(r, r) = complex_t{m(r, r).real(), 0.0};
  return DensityMatrix(n_qubits, std::move(m));
}

inline std::vector<double> random_distribution(std::size_t d, std::mt19937_64& rng,
                                               double floor = 1e-3) {
  std::vector<double> p(d);
  double sum = 0.0;
  for (auto& x : p) {
    x = floor + uniform01(rng);
    sum += x;
  }
  for (auto& x : p) x /= sum;
  return p;
}

inline std::vector<double> random_h_table(std::size_t d, std::mt19937_64& rng, double lo,
                                          double hi) {
  std::vector<double> h(d);
  for (auto& x : h) x = uniform(rng, lo, hi);
  return h;
}

inline double renyi_of_distribution(const std::vector<double>& p, double alpha) {
  if (std::abs(alpha - 1.0) < 1e-12) return shannon_entropy(p);
  double s = 0.0;
  for (double x : p)
    if (x > 0.0) s += std::pow(x, alpha);
  return std::log(s) / (1.0 - alpha);
}

inline double real_trace_product(const ComplexMatrix& a, const ComplexMatrix& b) {
  double t = 0.0;
  for (std::size_t r = 0; r < a.dim(); ++r)
    for (std::size_t c = 0; c < a.dim(); ++c) t += (a(r, c) * b(c, r)).real();
  return t;
}

inline double log_sum_exp(const std::vector<double>& v) {
  const double m = *std::max_element(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

// The von Neumann cost as used by the bound checks; the mutation flips the
// sign of its normalization term to exercise the failure path.
inline double cost_vn_under(const std::vector<double>& h, const std::vector<double>& w,
                            Mutation mutation) {
  if (mutation == Mutation::kNone) return cost_vn(h, w);
  double linear = 0.0, partition = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    linear += w[i] * h[i];
    partition += std::exp(h[i]);
  }
  return -linear - (partition - 1.0);
}

inline void tally(CheckResult& r, double violation) {
  ++r.n_instances;
  r.worst = std::max(r.worst, violation);
  if (violation > r.tolerance) ++r.n_violations;
}

inline void finish(CheckResult& r) { r.pass = r.n_violations == 0; }

}  // namespace detail

// S(rho) <= -<O>_rho + ln tr e^O for random states and random Hermitian
// observables (the Gibbs variational bound).
inline CheckResult check_gibbs_bound(int n_instances, std::uint64_t seed) {
  CheckResult r;
  r.name = "gibbs-bound";
  r.tolerance = 1e-9;
  r.note = "S(rho) <= -<O>_rho + ln tr e^O for random (rho, O)";
  std::mt19937_64 rng(mix_seed(seed, 0x67620001u));
  for (int i = 0; i < n_instances; ++i) {
    const int n = 1 + i % 3;
    const auto rho = detail::random_density(n, rng);
    const auto obs = detail::random_hermitian(rho.dim(), rng, uniform(rng, 0.25, 2.0));
    const double s = von_neumann_exact(rho);
    const double mean_obs = detail::real_trace_product(rho.matrix(), obs);
    const double rhs = -mean_obs + detail::log_sum_exp(hermitian_eig(obs).values);
    detail::tally(r, s - rhs);
  }
  detail::finish(r);
  return r;
}

// Equality case of the Gibbs bound at O = ln rho (the state is blended with
// the maximally mixed one first so the logarithm is well conditioned).
inline CheckResult check_gibbs_saturation(int n_instances, std::uint64_t seed) {
  CheckResult r;
  r.name = "gibbs-saturation";
  r.tolerance = 1e-8;
  r.note = "equality at O = ln rho on full-rank states";
  std::mt19937_64 rng(mix_seed(seed, 0x67620002u));
  for (int i = 0; i < n_instances; ++i) {
    const int n = 1 + i % 3;
    const auto raw = detail::random_density(n, rng);
    const std::size_t d = raw.dim();
    ComplexMatrix m = raw.matrix();
    m *= complex_t{0.9, 0.0};
    for (std::size_t k = 0; k < d; ++k) m(k, k) += 0.1 / static_cast<double>(d);
    const DensityMatrix rho(n, std::move(m));
    const auto eig = hermitian_eig(rho.matrix());
    ComplexMatrix log_rho(d);
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = 0; b < d; ++b) {
        complex_t z{0.0, 0.0};
        for (std::size_t k = 0; k < d; ++k)
          z += eig.vectors(a, k) * std::log(eig.values[k]) * std::conj(eig.vectors(b, k));
        log_rho(a, b) = z;
      }
    const double s = von_neumann_exact(rho);
    const double rhs = -detail::real_trace_product(rho.matrix(), log_rho) +
                       detail::log_sum_exp(hermitian_eig(log_rho).values);
    detail::tally(r, std::abs(s - rhs));
  }
  detail::finish(r);
  return r;
}

// Linearized form of the Gibbs bound: replacing ln tr e^O by tr e^O - 1
// keeps the bound and never tightens it.
inline CheckResult check_linearized_bound(int n_instances, std::uint64_t seed) {
  CheckResult r;
  r.name = "linearized-bound";
  r.tolerance = 1e-9;
  r.note = "S(rho) <= -<O>_rho + tr e^O - 1, and the RHS dominates the log form";
  std::mt19937_64 rng(mix_seed(seed, 0x67620003u));
  for (int i = 0; i < n_instances; ++i) {
    const int n = 1 + i % 3;
    const auto rho = detail::random_density(n, rng);
    const auto obs = detail::random_hermitian(rho.dim(), rng, uniform(rng, 0.25, 2.0));
    const double s = von_neumann_exact(rho);
    const double mean_obs = detail::real_trace_product(rho.matrix(), obs);
    const auto values = hermitian_eig(obs).values;
    double tr_exp = 0.0;
    for (double v : values) tr_exp += std::exp(v);
    const double rhs_log = -mean_obs + detail::log_sum_exp(values);
    const double rhs_lin = -mean_obs + tr_exp - 1.0;
    detail::tally(r, std::max(s - rhs_lin, rhs_log - rhs_lin));
  }
  detail::finish(r);
  return r;
}

// Sampled-cost bound: for any h table, the von Neumann cost evaluated on an
// exact outcome distribution stays above that distribution's Shannon entropy.
// This is the check the vn-cost-sign mutation is designed to break.
inline CheckResult check_dv_bound(int n_instances, std::uint64_t seed,
                                  Mutation mutation = Mutation::kNone) {
  CheckResult r;
  r.name = "dv-bound";
  r.tolerance = 1e-9;
  r.note = "cost_vn(h; P) >= H(P) for random circuits and arbitrary h";
  std::mt19937_64 rng(mix_seed(seed, 0x67620004u));
  for (int i = 0; i < n_instances; ++i) {
    const int n = 2 + i % 2;
    const auto rho = detail::random_density(n, rng);
    const auto params = CircuitParams::random(n, 2, rng());
    const auto dist = outcome_distribution(rho, params);
    const auto h = detail::random_h_table(dist.size(), rng, -3.0, 1.0);
    detail::tally(r, shannon_entropy(dist) - detail::cost_vn_under(h, dist, mutation));
  }
  detail::finish(r);
  return r;
}

// Equality case of the sampled bound at h = ln P.
inline CheckResult check_vn_saturation(int n_instances, std::uint64_t seed) {
  CheckResult r;
  r.name = "vn-saturation";
  r.tolerance = 1e-9;
  r.note = "cost_vn(ln P; P) = H(P)";
  std::mt19937_64 rng(mix_seed(seed, 0x67620005u));
  for (int i = 0; i < n_instances; ++i) {
    const auto p = detail::random_distribution(std::size_t{1} << (1 + i % 3), rng);
    std::vector<double> h(p.size());
    for (std::size_t k = 0; k < p.size(); ++k) h[k] = std::log(p[k]);
    detail::tally(r, std::abs(cost_vn(h, p) - shannon_entropy(p)));
  }
  detail::finish(r);
  return r;
}

// Two-sided chain for the Renyi cost: with g(x) = (e^{(1-alpha)x} - 1) /
// (alpha (1-alpha)), the sampled cost dominates g of the outcome Renyi
// entropy, which in turn dominates g of the state's Renyi entropy.
inline CheckResult check_renyi_chain(int n_instances, std::uint64_t seed) {
  CheckResult r;
  r.name = "renyi-chain";
  r.tolerance = 1e-9;
  r.note = "cost_renyi(h; P) >= g(H_a(P)) >= g(S_a(rho))";
  std::mt19937_64 rng(mix_seed(seed, 0x67620006u));
  const double alphas[] = {0.3, 0.5, 2.0, 3.0};
  for (int i = 0; i < n_instances; ++i) {
    const int n = 2 + i % 2;
    const double alpha = alphas[i % 4];
    const auto rho = detail::random_density(n, rng);
    const auto params = CircuitParams::random(n, 2, rng());
    const auto dist = outcome_distribution(rho, params);
    const auto h = detail::random_h_table(dist.size(), rng, -3.0, 1.0);
    const auto g = [alpha](double x) {
      return (std::exp((1.0 - alpha) * x) - 1.0) / (alpha * (1.0 - alpha));
    };
    const double g_outcome = g(detail::renyi_of_distribution(dist, alpha));
    const double v1 = g_outcome - cost_renyi(h, dist, alpha);
    const double v2 = g(renyi_exact(rho, alpha)) - g_outcome;
    detail::tally(r, std::max(v1, v2));
  }
  detail::finish(r);
  return r;
}

// The saturated Renyi cost inverts back to the distribution's Renyi entropy.
inline CheckResult check_renyi_roundtrip(int n_instances, std::uint64_t seed) {
  CheckResult r;
  r.name = "renyi-roundtrip";
  r.tolerance = 1e-9;
  r.note = "invert_cost_renyi(cost_renyi(ln p; p)) recovers H_a(p)";
  std::mt19937_64 rng(mix_seed(seed, 0x67620007u));
  const double alphas[] = {0.5, 2.0, 3.0};
  for (int i = 0; i < n_instances; ++i) {
    const double alpha = alphas[i % 3];
    const auto p = detail::random_distribution(std::size_t{1} << (1 + i % 3), rng);
    std::vector<double> h(p.size());
    for (std::size_t k = 0; k < p.size(); ++k) h[k] = std::log(p[k]);
    const double s = invert_cost_renyi(cost_renyi(h, p, alpha), alpha);
    detail::tally(r, std::abs(s - detail::renyi_of_distribution(p, alpha)));
  }
  detail::finish(r);
  return r;
}

// Continuity across the von Neumann point. The deviation is linear in
// alpha - 1 with a slope that grows with the table width, so the general
// check runs at alpha = 1 +- 1e-4; the +-1e-3 statement is exact only on
// single-qubit saturated instances and is asserted there separately.
inline CheckResult check_alpha_continuity(int n_instances, std::uint64_t seed) {
  CheckResult r;
  r.name = "alpha-continuity";
  r.tolerance = 1e-3;
  r.note = "cost_renyi at alpha = 1 +- 1e-4 matches cost_vn; +-1e-3 on 1-qubit saturation";
  std::mt19937_64 rng(mix_seed(seed, 0x67620008u));
  for (int i = 0; i < n_instances; ++i) {
    const auto p = detail::random_distribution(std::size_t{1} << (1 + i % 3), rng);
    const auto h = detail::random_h_table(p.size(), rng, -2.0, 0.5);
    const double base = cost_vn(h, p);
    double dev = std::max(std::abs(cost_renyi(h, p, 1.0 + 1e-4) - base),
                          std::abs(cost_renyi(h, p, 1.0 - 1e-4) - base));
    const auto q = detail::random_distribution(2, rng);
    const std::vector<double> hq = {std::log(q[0]), std::log(q[1])};
    const double sat = cost_vn(hq, q);
    dev = std::max({dev, std::abs(cost_renyi(hq, q, 1.0 + 1e-3) - sat),
                    std::abs(cost_renyi(hq, q, 1.0 - 1e-3) - sat)});
    detail::tally(r, dev);
  }
  detail::finish(r);
  return r;
}

// The outcome distribution of any circuit is majorized by the eigenvalue
// spectrum, so every Renyi entropy of the outcomes dominates the state's.
inline CheckResult check_majorization(int n_instances, std::uint64_t seed) {
  CheckResult r;
  r.name = "majorization";
  r.tolerance = 1e-9;
  r.note = "outcome partial sums below spectrum partial sums; H_a(P) >= S_a(rho)";
  std::mt19937_64 rng(mix_seed(seed, 0x67620009u));
  for (int i = 0; i < n_instances; ++i) {
    const int n = 2 + i % 2;
    const auto rho = detail::random_density(n, rng);
    const auto params = CircuitParams::random(n, 2, rng());
    auto dist = outcome_distribution(rho, params);
    const auto spectrum = eig_hermitian(rho).eigenvalues;  // descending
    std::sort(dist.begin(), dist.end(), std::greater<double>());
    double worst = -std::numeric_limits<double>::infinity();
    double ps_dist = 0.0, ps_spec = 0.0;
    for (std::size_t k = 0; k < dist.size(); ++k) {
      ps_dist += dist[k];
      ps_spec += spectrum[k];
      worst = std::max(worst, ps_dist - ps_spec);
    }
    worst = std::max(worst, von_neumann_exact(rho) - shannon_entropy(dist));
    for (double alpha : {0.5, 2.0})
      worst = std::max(worst, renyi_exact(rho, alpha) -
                                  detail::renyi_of_distribution(dist, alpha));
    detail::tally(r, worst);
  }
  detail::finish(r);
  return r;
}

// Backprop against central finite differences over every parameter of a
// narrow net, for the von Neumann cost and both Renyi branches.
inline CheckResult check_nn_gradient(std::uint64_t seed) {
  CheckResult r;
  r.name = "nn-gradient";
  r.tolerance = 1e-4;
  r.note = "backprop vs central differences, relative error, width-8 net";
  std::mt19937_64 rng(mix_seed(seed, 0x6762000au));
  const std::optional<double> modes[] = {std::nullopt, 2.0, 0.5};
  for (const auto& alpha : modes) {
    EntropyNet net(2, 8, 8, rng());
    const auto weights = detail::random_distribution(4, rng);
    const auto [cost, grad] = nn_cost_and_gradient(net, weights, alpha);
    (void)cost;
    const auto flat = net.flat_parameters();
    const double delta = 1e-5;
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < flat.size(); ++j) {
      auto probe = flat;
      probe[j] = flat[j] + delta;
      net.set_flat_parameters(probe);
      const double c_plus = alpha ? cost_renyi(net.h_table(), weights, *alpha)
                                  : cost_vn(net.h_table(), weights);
      probe[j] = flat[j] - delta;
      net.set_flat_parameters(probe);
      const double c_minus = alpha ? cost_renyi(net.h_table(), weights, *alpha)
                                   : cost_vn(net.h_table(), weights);
      const double fd = (c_plus - c_minus) / (2.0 * delta);
      num += (grad[j] - fd) * (grad[j] - fd);
      den += fd * fd;
    }
    net.set_flat_parameters(flat);
    detail::tally(r, std::sqrt(num / den));
  }
  detail::finish(r);
  return r;
}

// The outer forward-difference gradient in noise-free mode against central
// differences of the exact outcome Shannon entropy.
inline CheckResult check_outer_gradient(std::uint64_t seed) {
  CheckResult r;
  r.name = "outer-gradient";
  r.tolerance = 1e-3;
  r.note = "noise-free circuit gradient vs central differences of H(P(theta))";
  std::mt19937_64 rng(mix_seed(seed, 0x6762000bu));
  for (int i = 0; i < 2; ++i) {
    const auto rho = detail::random_density(2, rng);
    const auto params = CircuitParams::random(2, 2, rng());
    QneeConfig cfg;
    cfg.noise_free = true;
    cfg.n_layers = 2;
    cfg.fd_step = 1e-4;
    EntropyNet net(2, 8, 8, 0);
    const auto fd = fd_gradient(rho, params, net, cfg);
    double worst = 0.0;
    for (std::size_t j = 0; j < params.angles.size(); ++j) {
      CircuitParams p = params;
      p.angles[j] = params.angles[j] + cfg.fd_step;
      const double h_plus = shannon_entropy(outcome_distribution(rho, p));
      p.angles[j] = params.angles[j] - cfg.fd_step;
      const double h_minus = shannon_entropy(outcome_distribution(rho, p));
      worst = std::max(worst,
                       std::abs(fd.gradient[j] - (h_plus - h_minus) / (2.0 * cfg.fd_step)));
    }
    detail::tally(r, worst);
  }
  detail::finish(r);
  return r;
}

struct CheckSuiteConfig {
  int n_instances = 200;
  std::uint64_t seed = 0;
  Mutation mutation = Mutation::kNone;
};

inline std::vector<CheckResult> run_all_checks(const CheckSuiteConfig& cfg = {}) {
  if (cfg.n_instances < 1)
    throw std::invalid_argument("run_all_checks: n_instances must be >= 1");
  return {
      check_gibbs_bound(cfg.n_instances, cfg.seed),
      check_gibbs_saturation(cfg.n_instances, cfg.seed),
      check_linearized_bound(cfg.n_instances, cfg.seed),
      check_dv_bound(cfg.n_instances, cfg.seed, cfg.mutation),
      check_vn_saturation(cfg.n_instances, cfg.seed),
      check_renyi_chain(cfg.n_instances, cfg.seed),
      check_renyi_roundtrip(cfg.n_instances, cfg.seed),
      check_alpha_continuity(cfg.n_instances, cfg.seed),
      check_majorization(cfg.n_instances, cfg.seed),
      check_nn_gradient(cfg.seed),
      check_outer_gradient(cfg.seed),
  };
}

inline bool all_pass(const std::vector<CheckResult>& results) {
  for (const auto& r : results)
    if (!r.pass) return false;
  return true;
}

inline std::string format_check_report(const std::vector<CheckResult>& results) {
  std::string out;
  char buf[256];
  int passed = 0;
  for (const auto& r : results) {
    std::snprintf(buf, sizeof(buf),
                  "[%s] %-18s %4d instances, %d violations, worst %.3g (tol %.0e)  %s\n",
                  r.pass ? "PASS" : "FAIL", r.name.c_str(), r.n_instances, r.n_violations,
                  r.worst, r.tolerance, r.note.c_str());
    out += buf;
    passed += r.pass ? 1 : 0;
  }
  std::snprintf(buf, sizeof(buf), "%zu checks run, %d passed, %d failed\n", results.size(),
                passed, static_cast<int>(results.size()) - passed);
  out += buf;
  return out;
}

}  // namespace qnee
