#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "qnee/linalg.hpp"

namespace qnee {

// Largest register the dense simulator accepts. Everything here is O(4^n) or
// worse, so this is a capacity guard, not a tuning knob.
inline constexpr int kMaxQubits = 12;

inline constexpr double kHermTol = 1e-10;
inline constexpr double kTraceTol = 1e-10;
inline constexpr double kNormTol = 1e-10;
inline constexpr double kEigNegTol = 1e-10;

inline std::size_t dim_for_qubits(int n_qubits) {
  if (n_qubits < 1 || n_qubits > kMaxQubits)
    throw std::invalid_argument("qubit count must be in [1, " +
                                std::to_string(kMaxQubits) + "]");
  return std::size_t{1} << n_qubits;
}

// Basis convention used throughout: index i labels the computational basis
// state whose big-endian binary expansion gives the qubit values, qubit 0
// being the most significant bit.
inline int bit_of(std::size_t index, int qubit, int n_qubits) {
  return static_cast<int>((index >> (n_qubits - 1 - qubit)) & 1u);
}

class StateVector {
 public:
  StateVector(int n_qubits, std::vector<complex_t> amplitudes)
      : n_qubits_(n_qubits), amps_(std::move(amplitudes)) {
    const std::size_t d = dim_for_qubits(n_qubits);
    if (amps_.size() != d)
      throw std::invalid_argument("StateVector: amplitude count does not match qubit count");
    double n2 = 0.0;
    for (const auto& a : amps_) n2 += std::norm(a);
    if (std::abs(n2 - 1.0) > 1e-8)
      throw std::invalid_argument("StateVector: not normalized");
  }

  static StateVector basis_state(int n_qubits, std::size_t index) {
    const std::size_t d = dim_for_qubits(n_qubits);
    if (index >= d) throw std::invalid_argument("StateVector: basis index out of range");
    std::vector<complex_t> a(d, complex_t{0.0, 0.0});
    a[index] = 1.0;
    return StateVector(n_qubits, std::move(a));
  }

  int n_qubits() const { return n_qubits_; }
  std::size_t dim() const { return amps_.size(); }
  complex_t& operator[](std::size_t i) { return amps_[i]; }
  const complex_t& operator[](std::size_t i) const { return amps_[i]; }
  const std::vector<complex_t>& amplitudes() const { return amps_; }

  double norm() const {
    double n2 = 0.0;
    for (const auto& a : amps_) n2 += std::norm(a);
    return std::sqrt(n2);
  }

 private:
  int n_qubits_;
  std::vector<complex_t> amps_;
};

inline complex_t inner_product(const StateVector& a, const StateVector& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("inner_product: dimension mismatch");
  complex_t s{0.0, 0.0};
  for (std::size_t i = 0; i < a.dim(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

class DensityMatrix {
 public:
  DensityMatrix(int n_qubits, ComplexMatrix m) : n_qubits_(n_qubits), m_(std::move(m)) {
    const std::size_t d = dim_for_qubits(n_qubits);
    if (m_.dim() != d)
      throw std::invalid_argument("DensityMatrix: matrix dimension does not match qubit count");
    if (!m_.is_hermitian(kHermTol))
      throw std::invalid_argument("DensityMatrix: matrix is not Hermitian within tolerance");
    if (std::abs(m_.trace() - complex_t{1.0, 0.0}) > 1e-8)
      throw std::invalid_argument("DensityMatrix: trace is not 1");
  }

  static DensityMatrix from_state(const StateVector& psi) {
    ComplexMatrix m(psi.dim());
    for (std::size_t r = 0; r < psi.dim(); ++r)
      for (std::size_t c = 0; c < psi.dim(); ++c) m(r, c) = psi[r] * std::conj(psi[c]);
    return DensityMatrix(psi.n_qubits(), std::move(m));
  }

  static DensityMatrix maximally_mixed(int n_qubits) {
    const std::size_t d = dim_for_qubits(n_qubits);
    ComplexMatrix m(d);
    for (std::size_t i = 0; i < d; ++i) m(i, i) = 1.0 / static_cast<double>(d);
    return DensityMatrix(n_qubits, std::move(m));
  }

  static DensityMatrix diagonal(std::vector<double> populations) {
    std::size_t d = populations.size();
    int n = 0;
    while ((std::size_t{1} << n) < d) ++n;
    if ((std::size_t{1} << n) != d)
      throw std::invalid_argument("DensityMatrix::diagonal: length must be a power of two");
    ComplexMatrix m(d);
    for (std::size_t i = 0; i < d; ++i) m(i, i) = populations[i];
    return DensityMatrix(n, std::move(m));
  }

  int n_qubits() const { return n_qubits_; }
  std::size_t dim() const { return m_.dim(); }
  const ComplexMatrix& matrix() const { return m_; }

  complex_t& operator()(std::size_t r, std::size_t c) { return m_(r, c); }
  const complex_t& operator()(std::size_t r, std::size_t c) const { return m_(r, c); }

  std::vector<double> diagonal_populations() const {
    std::vector<double> p(dim());
    for (std::size_t i = 0; i < dim(); ++i) p[i] = m_(i, i).real();
    return p;
  }

  // Full check including positive semidefiniteness; O(d^3).
  void validate() const {
    auto eig = hermitian_eig(m_, kHermTol);
    if (eig.values.front() < -kEigNegTol)
      throw std::invalid_argument("DensityMatrix: negative eigenvalue beyond tolerance");
  }

 private:
  int n_qubits_;
  ComplexMatrix m_;
};

struct Spectrum {
  std::vector<double> eigenvalues;  // descending
  ComplexMatrix eigenvectors;       // column k pairs with eigenvalues[k]
};

namespace detail {

// Deterministic order for equal eigenvalues: lexicographic comparison of the
// phase-fixed eigenvectors (component-wise real part, then imaginary part).
inline bool vector_lex_less(const ComplexMatrix& vecs, std::size_t a, std::size_t b) {
  const std::size_t d = vecs.dim();
  for (std::size_t r = 0; r < d; ++r) {
    const complex_t za = vecs(r, a), zb = vecs(r, b);
    if (za.real() != zb.real()) return za.real() < zb.real();
    if (za.imag() != zb.imag()) return za.imag() < zb.imag();
  }
  return false;
}

}  // namespace detail

inline Spectrum eig_hermitian(const DensityMatrix& rho) {
  auto eig = hermitian_eig(rho.matrix(), kHermTol);
  const std::size_t d = rho.dim();
  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (std::abs(eig.values[a] - eig.values[b]) > 1e-12)
      return eig.values[a] > eig.values[b];
    return detail::vector_lex_less(eig.vectors, a, b);
  });
  Spectrum out;
  out.eigenvalues.resize(d);
  out.eigenvectors = ComplexMatrix(d);
  for (std::size_t k = 0; k < d; ++k) {
    out.eigenvalues[k] = eig.values[order[k]];
    for (std::size_t r = 0; r < d; ++r) out.eigenvectors(r, k) = eig.vectors(r, order[k]);
  }
  return out;
}

namespace detail {

inline void check_keep_indices(const std::vector<int>& keep, int n_qubits) {
  if (keep.empty()) throw std::invalid_argument("partial_trace: keep set is empty");
  std::vector<int> sorted = keep;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (sorted[i] < 0 || sorted[i] >= n_qubits)
      throw std::invalid_argument("partial_trace: keep index out of range");
    if (i > 0 && sorted[i] == sorted[i - 1])
      throw std::invalid_argument("partial_trace: duplicate keep index");
  }
}

// Builds the full index from a kept-subsystem index and a traced-subsystem
// index. Kept qubits appear in ascending original order in the reduced space.
struct TraceIndexer {
  std::vector<int> keep_shift;   // full-register shift per kept qubit (MSB first)
  std::vector<int> trace_shift;  // full-register shift per traced qubit
  int n_keep = 0, n_trace = 0;

  TraceIndexer(const std::vector<int>& keep, int n_qubits) {
    std::vector<int> sorted = keep;
    std::sort(sorted.begin(), sorted.end());
    std::vector<bool> kept(static_cast<std::size_t>(n_qubits), false);
    for (int q : sorted) kept[static_cast<std::size_t>(q)] = true;
    for (int q : sorted) keep_shift.push_back(n_qubits - 1 - q);
    for (int q = 0; q < n_qubits; ++q)
      if (!kept[static_cast<std::size_t>(q)]) trace_shift.push_back(n_qubits - 1 - q);
    n_keep = static_cast<int>(keep_shift.size());
    n_trace = static_cast<int>(trace_shift.size());
  }

  std::size_t full_index(std::size_t kept_idx, std::size_t traced_idx) const {
    std::size_t full = 0;
    for (int b = 0; b < n_keep; ++b)
      if ((kept_idx >> (n_keep - 1 - b)) & 1u) full |= std::size_t{1} << keep_shift[b];
    for (int b = 0; b < n_trace; ++b)
      if ((traced_idx >> (n_trace - 1 - b)) & 1u) full |= std::size_t{1} << trace_shift[b];
    return full;
  }
};

}  // namespace detail

inline DensityMatrix partial_trace(const DensityMatrix& rho, const std::vector<int>& keep) {
  detail::check_keep_indices(keep, rho.n_qubits());
  detail::TraceIndexer ix(keep, rho.n_qubits());
  const std::size_t dk = std::size_t{1} << ix.n_keep;
  const std::size_t dt = std::size_t{1} << ix.n_trace;
  ComplexMatrix out(dk);
  for (std::size_t a = 0; a < dk; ++a)
    for (std::size_t b = 0; b < dk; ++b) {
      complex_t s{0.0, 0.0};
      for (std::size_t e = 0; e < dt; ++e)
        s += rho(ix.full_index(a, e), ix.full_index(b, e));
      out(a, b) = s;
    }
  return DensityMatrix(ix.n_keep, std::move(out));
}

inline DensityMatrix partial_trace(const StateVector& psi, const std::vector<int>& keep) {
  detail::check_keep_indices(keep, psi.n_qubits());
  detail::TraceIndexer ix(keep, psi.n_qubits());
  const std::size_t dk = std::size_t{1} << ix.n_keep;
  const std::size_t dt = std::size_t{1} << ix.n_trace;
  ComplexMatrix out(dk);
  for (std::size_t a = 0; a < dk; ++a)
    for (std::size_t b = a; b < dk; ++b) {
      complex_t s{0.0, 0.0};
      for (std::size_t e = 0; e < dt; ++e)
        s += psi[ix.full_index(a, e)] * std::conj(psi[ix.full_index(b, e)]);
      out(a, b) = s;
      out(b, a) = std::conj(s);
    }
  return DensityMatrix(ix.n_keep, std::move(out));
}

// Shannon entropy in nats; zero entries contribute zero. Input must be a
// probability vector up to small numerical slack.
inline double shannon_entropy(const std::vector<double>& p) {
  double sum = 0.0, h = 0.0;
  for (double x : p) {
    if (x < -1e-9) throw std::invalid_argument("shannon_entropy: negative probability");
    sum += x;
    if (x > 0.0) h -= x * std::log(x);
  }
  if (std::abs(sum - 1.0) > 1e-6)
    throw std::invalid_argument("shannon_entropy: probabilities do not sum to 1");
  return h;
}

inline double von_neumann_exact(const DensityMatrix& rho) {
  auto eig = hermitian_eig(rho.matrix(), kHermTol);
  double s = 0.0;
  for (double v : eig.values) {
    if (v < -kEigNegTol)
      throw std::invalid_argument("von_neumann_exact: negative eigenvalue beyond tolerance");
    if (v > 0.0) s -= v * std::log(v);
  }
  const double smax = rho.n_qubits() * std::log(2.0);
  return std::clamp(s, 0.0, smax);
}

inline double renyi_exact(const DensityMatrix& rho, double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("renyi_exact: alpha must be positive");
  if (std::abs(alpha - 1.0) < 1e-9)
    throw std::invalid_argument("renyi_exact: alpha too close to 1, use von_neumann_exact");
  auto eig = hermitian_eig(rho.matrix(), kHermTol);
  double a = 0.0;
  for (double v : eig.values) {
    if (v < -kEigNegTol)
      throw std::invalid_argument("renyi_exact: negative eigenvalue beyond tolerance");
    if (v > 0.0) a += std::pow(v, alpha);
  }
  return std::log(a) / (1.0 - alpha);
}

}  // namespace qnee
