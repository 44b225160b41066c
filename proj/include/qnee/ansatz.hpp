#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "qnee/quantum_core.hpp"
#include "qnee/rng.hpp"

namespace qnee {

struct BitString {
  int n_qubits = 0;
  std::size_t index = 0;

  BitString(int n, std::size_t idx) : n_qubits(n), index(idx) {
    if (idx >= dim_for_qubits(n)) throw std::invalid_argument("BitString: index out of range");
  }

  static BitString from_bits(const std::vector<int>& bits) {
    std::size_t idx = 0;
    for (int b : bits) {
      if (b != 0 && b != 1) throw std::invalid_argument("BitString: bits must be 0 or 1");
      idx = (idx << 1) | static_cast<std::size_t>(b);
    }
    return BitString(static_cast<int>(bits.size()), idx);
  }

  // bits[q] is qubit q, most significant first
  std::vector<int> bits() const {
    std::vector<int> out(static_cast<std::size_t>(n_qubits));
    for (int q = 0; q < n_qubits; ++q) out[static_cast<std::size_t>(q)] = bit_of(index, q, n_qubits);
    return out;
  }
};

// Layered hardware-efficient ansatz. Each two-qubit block is
//   (R_Y(a2) x R_Y(a3)) * CZ * (R_Y(a0) x R_Y(a1)),
// R_Y(t) = exp(-i t sigma_y / 2). Layer k places blocks on the chain bonds
// (l, l+1 mod n) for every l with l % 2 == k % 2: even layers pair
// (0,1),(2,3),..., odd layers pair (1,2),(3,4),... with a periodic wrap.
// Blocks within a layer are ordered by ascending l and consume 4 angles each,
// giving exactly 2*n*n_layers angles in total. For odd n the wrap bond moves
// to the even layers and the two layer parities alternate between
// ceil(n/2) and floor(n/2) blocks, so the total still comes out at
// 2*n*n_layers provided n_layers is even; odd n with odd n_layers cannot
// match that count and is rejected.
struct CircuitParams {
  int n_qubits = 0;
  int n_layers = 0;
  std::vector<double> angles;

  CircuitParams() = default;

  CircuitParams(int n, int layers, std::vector<double> theta)
      : n_qubits(n), n_layers(layers), angles(std::move(theta)) {
    validate();
  }

  static std::vector<std::pair<int, int>> layer_bonds(int n, int layer) {
    if (n < 2) throw std::invalid_argument("CircuitParams: need at least 2 qubits");
    std::vector<std::pair<int, int>> bonds;
    for (int l = layer % 2; l < n; l += 2) bonds.emplace_back(l, (l + 1) % n);
    return bonds;
  }

  static std::size_t expected_angle_count(int n, int layers) {
    if (layers < 1) throw std::invalid_argument("CircuitParams: need at least 1 layer");
    std::size_t c = 0;
    for (int k = 0; k < layers; ++k) c += 4 * layer_bonds(n, k).size();
    return c;
  }

  void validate() const {
    const std::size_t expected = expected_angle_count(n_qubits, n_layers);
    const std::size_t pinned = 2 * static_cast<std::size_t>(n_qubits) *
                               static_cast<std::size_t>(n_layers);
    if (expected != pinned)
      throw std::invalid_argument(
          "CircuitParams: layout cannot honor the 2*n*n_layers parameter count "
          "(odd qubit count needs an even layer count)");
    if (angles.size() != expected)
      throw std::invalid_argument("CircuitParams: angle vector must have length 2*n*n_layers");
  }

  static CircuitParams zeros(int n, int layers) {
    return CircuitParams(n, layers, std::vector<double>(expected_angle_count(n, layers), 0.0));
  }

  static CircuitParams random(int n, int layers, std::uint64_t seed) {
    std::mt19937_64 rng(mix_seed(seed, 0x7174));
    std::vector<double> theta(expected_angle_count(n, layers));
    for (auto& t : theta) t = uniform(rng, 0.0, 2.0 * M_PI);
    return CircuitParams(n, layers, std::move(theta));
  }
};

namespace detail {

struct Block {
  int qa = 0, qb = 0;       // qa carries the high bit of the 2-qubit subspace
  complex_t u[4][4] = {};   // block unitary in the |qa qb> basis
};

inline void rotation_y(double theta, double out[2][2]) {
  const double c = std::cos(0.5 * theta), s = std::sin(0.5 * theta);
  out[0][0] = c;
  out[0][1] = -s;
  out[1][0] = s;
  out[1][1] = c;
}

// (R_Y(a2) x R_Y(a3)) * CZ * (R_Y(a0) x R_Y(a1)); all entries real.
inline Block make_block(int qa, int qb, const double* a) {
  double pre_a[2][2], pre_b[2][2], post_a[2][2], post_b[2][2];
  rotation_y(a[0], pre_a);
  rotation_y(a[1], pre_b);
  rotation_y(a[2], post_a);
  rotation_y(a[3], post_b);
  Block blk;
  blk.qa = qa;
  blk.qb = qb;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) {
      double acc = 0.0;
      for (int k = 0; k < 4; ++k) {
        const double cz = (k == 3) ? -1.0 : 1.0;  // CZ = diag(1,1,1,-1)
        acc += post_a[r >> 1][k >> 1] * post_b[r & 1][k & 1] * cz *
               pre_a[k >> 1][c >> 1] * pre_b[k & 1][c & 1];
      }
      blk.u[r][c] = acc;
    }
  return blk;
}

inline Block dagger(const Block& b) {
  Block out;
  out.qa = b.qa;
  out.qb = b.qb;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) out.u[r][c] = std::conj(b.u[c][r]);
  return out;
}

inline std::vector<Block> circuit_blocks(const CircuitParams& p) {
  p.validate();
  std::vector<Block> blocks;
  std::size_t off = 0;
  for (int k = 0; k < p.n_layers; ++k) {
    for (auto [a, b] : CircuitParams::layer_bonds(p.n_qubits, k)) {
      blocks.push_back(make_block(a, b, p.angles.data() + off));
      off += 4;
    }
  }
  return blocks;
}

// psi <- U psi on the (qa, qb) subspace.
inline void apply_block_state(const Block& blk, int n, std::vector<complex_t>& psi) {
  const std::size_t ma = std::size_t{1} << (n - 1 - blk.qa);
  const std::size_t mb = std::size_t{1} << (n - 1 - blk.qb);
  const std::size_t d = psi.size();
  for (std::size_t base = 0; base < d; ++base) {
    if (base & (ma | mb)) continue;
    const std::size_t i[4] = {base, base | mb, base | ma, base | ma | mb};
    complex_t v[4];
    for (int r = 0; r < 4; ++r) {
      v[r] = complex_t{0.0, 0.0};
      for (int c = 0; c < 4; ++c) v[r] += blk.u[r][c] * psi[i[c]];
    }
    for (int r = 0; r < 4; ++r) psi[i[r]] = v[r];
  }
}

// rho <- U rho U^dag on the (qa, qb) subspace.
inline void apply_block_dm(const Block& blk, int n, ComplexMatrix& rho) {
  const std::size_t ma = std::size_t{1} << (n - 1 - blk.qa);
  const std::size_t mb = std::size_t{1} << (n - 1 - blk.qb);
  const std::size_t d = rho.dim();
  for (std::size_t base = 0; base < d; ++base) {  // left multiply
    if (base & (ma | mb)) continue;
    const std::size_t i[4] = {base, base | mb, base | ma, base | ma | mb};
    for (std::size_t col = 0; col < d; ++col) {
      complex_t v[4];
      for (int r = 0; r < 4; ++r) {
        v[r] = complex_t{0.0, 0.0};
        for (int c = 0; c < 4; ++c) v[r] += blk.u[r][c] * rho(i[c], col);
      }
      for (int r = 0; r < 4; ++r) rho(i[r], col) = v[r];
    }
  }
  for (std::size_t base = 0; base < d; ++base) {  // right multiply by U^dag
    if (base & (ma | mb)) continue;
    const std::size_t j[4] = {base, base | mb, base | ma, base | ma | mb};
    for (std::size_t row = 0; row < d; ++row) {
      complex_t v[4];
      for (int r = 0; r < 4; ++r) {
        v[r] = complex_t{0.0, 0.0};
        for (int c = 0; c < 4; ++c) v[r] += rho(row, j[c]) * std::conj(blk.u[r][c]);
      }
      for (int r = 0; r < 4; ++r) rho(row, j[r]) = v[r];
    }
  }
}

}  // namespace detail

inline DensityMatrix apply_circuit(const DensityMatrix& rho, const CircuitParams& params) {
  if (rho.n_qubits() != params.n_qubits)
    throw std::invalid_argument("apply_circuit: qubit-count mismatch");
  if (params.n_qubits < 2)
    throw std::invalid_argument("apply_circuit: ansatz needs at least 2 qubits");
  ComplexMatrix m = rho.matrix();
  for (const auto& blk : detail::circuit_blocks(params))
    detail::apply_block_dm(blk, params.n_qubits, m);
  return DensityMatrix(params.n_qubits, std::move(m));
}

inline StateVector apply_circuit(const StateVector& psi, const CircuitParams& params) {
  if (psi.n_qubits() != params.n_qubits)
    throw std::invalid_argument("apply_circuit: qubit-count mismatch");
  std::vector<complex_t> amps = psi.amplitudes();
  for (const auto& blk : detail::circuit_blocks(params))
    detail::apply_block_state(blk, params.n_qubits, amps);
  return StateVector(params.n_qubits, std::move(amps));
}

// V^dag |s>, the candidate eigenvector attached to outcome string s.
inline StateVector conjugate_column(const CircuitParams& params, const BitString& s) {
  if (s.n_qubits != params.n_qubits)
    throw std::invalid_argument("conjugate_column: qubit-count mismatch");
  std::vector<complex_t> amps(dim_for_qubits(params.n_qubits), complex_t{0.0, 0.0});
  amps[s.index] = 1.0;
  auto blocks = detail::circuit_blocks(params);
  for (auto it = blocks.rbegin(); it != blocks.rend(); ++it)
    detail::apply_block_state(detail::dagger(*it), params.n_qubits, amps);
  return StateVector(params.n_qubits, std::move(amps));
}

inline ComplexMatrix circuit_unitary(const CircuitParams& params) {
  ComplexMatrix v = ComplexMatrix::identity(dim_for_qubits(params.n_qubits));
  const std::size_t d = v.dim();
  for (const auto& blk : detail::circuit_blocks(params)) {
    // left-multiply the accumulated matrix, column by column
    const std::size_t ma = std::size_t{1} << (params.n_qubits - 1 - blk.qa);
    const std::size_t mb = std::size_t{1} << (params.n_qubits - 1 - blk.qb);
    for (std::size_t base = 0; base < d; ++base) {
      if (base & (ma | mb)) continue;
      const std::size_t i[4] = {base, base | mb, base | ma, base | ma | mb};
      for (std::size_t col = 0; col < d; ++col) {
        complex_t t[4];
        for (int r = 0; r < 4; ++r) {
          t[r] = complex_t{0.0, 0.0};
          for (int c = 0; c < 4; ++c) t[r] += blk.u[r][c] * v(i[c], col);
        }
        for (int r = 0; r < 4; ++r) v(i[r], col) = t[r];
      }
    }
  }
  return v;
}

// P_V(s; theta) = <s| V rho V^dag |s>.
inline std::vector<double> outcome_distribution(const DensityMatrix& rho,
                                                const CircuitParams& params) {
  auto rotated = apply_circuit(rho, params);
  auto p = rotated.diagonal_populations();
  for (auto& x : p)
    if (x < 0.0 && x > -1e-12) x = 0.0;
  return p;
}

struct ShotSet {
  int n_qubits = 0;
  std::vector<std::uint64_t> counts;  // indexed by bitstring index
  std::uint64_t total = 0;

  ShotSet() = default;
  ShotSet(int n, std::vector<std::uint64_t> c) : n_qubits(n), counts(std::move(c)) {
    if (counts.size() != dim_for_qubits(n))
      throw std::invalid_argument("ShotSet: counts length must be 2^n");
    for (auto k : counts) total += k;
  }

  std::uint64_t count(const BitString& s) const { return counts[s.index]; }

  std::vector<double> frequencies() const {
    if (total == 0) throw std::logic_error("ShotSet: empty");
    std::vector<double> f(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i)
      f[i] = static_cast<double>(counts[i]) / static_cast<double>(total);
    return f;
  }
};

inline ShotSet sample_shots(const std::vector<double>& dist, std::uint64_t n_shots,
                            std::uint64_t seed) {
  if (n_shots < 1) throw std::invalid_argument("sample_shots: need at least one shot");
  int n = 0;
  while ((std::size_t{1} << n) < dist.size()) ++n;
  if ((std::size_t{1} << n) != dist.size())
    throw std::invalid_argument("sample_shots: distribution length must be a power of two");
  double sum = 0.0;
  for (double p : dist) {
    if (p < -1e-9) throw std::invalid_argument("sample_shots: negative probability");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-6)
    throw std::invalid_argument("sample_shots: probabilities do not sum to 1");

  std::vector<double> cdf(dist.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    acc += std::max(dist[i], 0.0) / sum;
    cdf[i] = acc;
  }
  cdf.back() = 1.0;

  std::mt19937_64 rng(mix_seed(seed, 0x5a09));
  std::vector<std::uint64_t> counts(dist.size(), 0);
  for (std::uint64_t k = 0; k < n_shots; ++k) {
    const double u = uniform01(rng);
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    counts[static_cast<std::size_t>(std::min<std::ptrdiff_t>(
        it - cdf.begin(), static_cast<std::ptrdiff_t>(dist.size()) - 1))] += 1;
  }
  return ShotSet(n, std::move(counts));
}

}  // namespace qnee
