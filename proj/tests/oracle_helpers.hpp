#pragma once

// Test-side oracles, written independently of the library implementations on
// purpose: different index conventions, different algorithms, direct Eigen
// calls. Agreement between the two routes is the point of the tests.

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "qnee/quantum_core.hpp"
#include "qnee/rng.hpp"

namespace oracle {

using qnee::complex_t;
using qnee::ComplexMatrix;
using qnee::DensityMatrix;
using qnee::StateVector;

using CMat = Eigen::MatrixXcd;

inline CMat to_eigen(const ComplexMatrix& m) {
  CMat out(m.dim(), m.dim());
  for (std::size_t r = 0; r < m.dim(); ++r)
    for (std::size_t c = 0; c < m.dim(); ++c) out(r, c) = m(r, c);
  return out;
}

inline ComplexMatrix from_eigen(const CMat& m) {
  ComplexMatrix out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      out(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = m(r, c);
  return out;
}

// Partial trace by brute force: walk every full-register entry (i, j), keep it
// only when the traced-out bits agree, and accumulate into the reduced entry
// addressed by the kept bits. Qubit q lives at big-endian bit (n-1-q).
inline ComplexMatrix naive_partial_trace(const ComplexMatrix& rho, int n_qubits,
                                         std::vector<int> keep) {
  std::sort(keep.begin(), keep.end());
  const std::size_t d = rho.dim();
  const int nk = static_cast<int>(keep.size());
  ComplexMatrix out(std::size_t{1} << nk);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      bool traced_match = true;
      for (int q = 0; q < n_qubits && traced_match; ++q) {
        bool kept = false;
        for (int k : keep) kept = kept || (k == q);
        if (kept) continue;
        const int bi = static_cast<int>((i >> (n_qubits - 1 - q)) & 1u);
        const int bj = static_cast<int>((j >> (n_qubits - 1 - q)) & 1u);
        traced_match = (bi == bj);
      }
      if (!traced_match) continue;
      std::size_t a = 0, b = 0;
      for (int k = 0; k < nk; ++k) {
        const int q = keep[static_cast<std::size_t>(k)];
        a = (a << 1) | ((i >> (n_qubits - 1 - q)) & 1u);
        b = (b << 1) | ((j >> (n_qubits - 1 - q)) & 1u);
      }
      out(a, b) += rho(i, j);
    }
  }
  return out;
}

inline std::vector<double> eigenvalues_of(const ComplexMatrix& herm) {
  Eigen::SelfAdjointEigenSolver<CMat> es(to_eigen(herm));
  std::vector<double> v(es.eigenvalues().data(),
                        es.eigenvalues().data() + es.eigenvalues().size());
  return v;  // ascending
}

inline double vn_entropy_of(const ComplexMatrix& rho) {
  double s = 0.0;
  for (double v : eigenvalues_of(rho))
    if (v > 1e-15) s -= v * std::log(v);
  return s;
}

// tr exp(O) and exp(O) for Hermitian O, via direct spectral calculus.
inline double trace_exp(const ComplexMatrix& herm) {
  double t = 0.0;
  for (double v : eigenvalues_of(herm)) t += std::exp(v);
  return t;
}

inline CMat matrix_func(const ComplexMatrix& herm, double (*f)(double)) {
  Eigen::SelfAdjointEigenSolver<CMat> es(to_eigen(herm));
  Eigen::VectorXd fv = es.eigenvalues();
  for (Eigen::Index i = 0; i < fv.size(); ++i) fv(i) = f(fv(i));
  return es.eigenvectors() * fv.asDiagonal() * es.eigenvectors().adjoint();
}

// log of a strictly positive density matrix (eigenvalues floored well above 0
// is the caller's responsibility; full-rank inputs only).
inline ComplexMatrix matrix_log(const ComplexMatrix& rho) {
  return from_eigen(matrix_func(rho, [](double x) { return std::log(x); }));
}

inline double trace_product_real(const ComplexMatrix& a, const ComplexMatrix& b) {
  complex_t t{0.0, 0.0};
  for (std::size_t r = 0; r < a.dim(); ++r)
    for (std::size_t c = 0; c < a.dim(); ++c) t += a(r, c) * b(c, r);
  return t.real();
}

// Random full-rank density matrix from a Ginibre draw, G G^dag normalized.
inline DensityMatrix random_density(int n_qubits, std::uint64_t seed) {
  std::mt19937_64 rng(qnee::mix_seed(seed, 0xd3));
  std::normal_distribution<double> gauss(0.0, 1.0);
  const std::size_t d = std::size_t{1} << n_qubits;
  CMat g(d, d);
  for (std::size_t r = 0; r < d; ++r)
    for (std::size_t c = 0; c < d; ++c) g(r, c) = complex_t(gauss(rng), gauss(rng));
  CMat rho = g * g.adjoint();
  rho /= rho.trace().real();
  rho = 0.5 * (rho + rho.adjoint().eval());
  return DensityMatrix(n_qubits, from_eigen(rho));
}

inline StateVector random_pure(int n_qubits, std::uint64_t seed) {
  std::mt19937_64 rng(qnee::mix_seed(seed, 0x9e));
  std::normal_distribution<double> gauss(0.0, 1.0);
  const std::size_t d = std::size_t{1} << n_qubits;
  std::vector<complex_t> a(d);
  double n2 = 0.0;
  for (auto& z : a) {
    z = complex_t(gauss(rng), gauss(rng));
    n2 += std::norm(z);
  }
  const double inv = 1.0 / std::sqrt(n2);
  for (auto& z : a) z *= inv;
  return StateVector(n_qubits, std::move(a));
}

inline ComplexMatrix random_hermitian(std::size_t dim, double scale, std::uint64_t seed) {
  std::mt19937_64 rng(qnee::mix_seed(seed, 0x48));
  std::normal_distribution<double> gauss(0.0, scale);
  ComplexMatrix m(dim);
  for (std::size_t r = 0; r < dim; ++r) {
    m(r, r) = gauss(rng);
    for (std::size_t c = r + 1; c < dim; ++c) {
      m(r, c) = complex_t(gauss(rng), gauss(rng));
      m(c, r) = std::conj(m(r, c));
    }
  }
  return m;
}

inline std::vector<double> random_distribution(std::size_t d, std::uint64_t seed,
                                               double floor = 1e-3) {
  std::mt19937_64 rng(qnee::mix_seed(seed, 0x17));
  std::vector<double> p(d);
  double sum = 0.0;
  for (auto& x : p) {
    x = floor + qnee::uniform01(rng);
    sum += x;
  }
  for (auto& x : p) x /= sum;
  return p;
}

// Descending-order partial sums, for majorization checks.
inline std::vector<double> partial_sums_desc(std::vector<double> v) {
  std::sort(v.begin(), v.end(), std::greater<double>());
  for (std::size_t i = 1; i < v.size(); ++i) v[i] += v[i - 1];
  return v;
}

// Frozen scalar references, each computed by hand from the defining formula.
inline constexpr double kEntropy075 = 0.5623351446188083;   // -0.75 ln 0.75 - 0.25 ln 0.25
inline constexpr double kRenyi2_075 = 0.4700036292457356;   // -ln(0.75^2 + 0.25^2)
inline constexpr double kLn2 = 0.6931471805599453;
inline constexpr double kEntropy09 = 0.3250829733914482;    // -0.9 ln 0.9 - 0.1 ln 0.1

}  // namespace oracle
