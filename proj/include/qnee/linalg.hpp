#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace qnee {

using complex_t = std::complex<double>;

using EigenCMat =
    Eigen::Matrix<complex_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Dense square complex matrix, row major. Thin wrapper so the quantum types
// own their storage; heavy numerics (products, eigensolves) go through Eigen.
class ComplexMatrix {
 public:
  ComplexMatrix() = default;

  explicit ComplexMatrix(std::size_t dim)
      : dim_(dim), data_(dim * dim, complex_t{0.0, 0.0}) {}

  static ComplexMatrix identity(std::size_t dim) {
    ComplexMatrix m(dim);
    for (std::size_t i = 0; i < dim; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t dim() const { return dim_; }

  complex_t& operator()(std::size_t r, std::size_t c) {
    return data_[r * dim_ + c];
  }
  const complex_t& operator()(std::size_t r, std::size_t c) const {
    return data_[r * dim_ + c];
  }

  complex_t* data() { return data_.data(); }
  const complex_t* data() const { return data_.data(); }

  Eigen::Map<EigenCMat> map() {
    return Eigen::Map<EigenCMat>(data_.data(), static_cast<Eigen::Index>(dim_),
                                 static_cast<Eigen::Index>(dim_));
  }
  Eigen::Map<const EigenCMat> map() const {
    return Eigen::Map<const EigenCMat>(data_.data(),
                                       static_cast<Eigen::Index>(dim_),
                                       static_cast<Eigen::Index>(dim_));
  }

  ComplexMatrix dagger() const {
    ComplexMatrix out(dim_);
    for (std::size_t r = 0; r < dim_; ++r)
      for (std::size_t c = 0; c < dim_; ++c) out(c, r) = std::conj((*this)(r, c));
    return out;
  }

  complex_t trace() const {
    complex_t t{0.0, 0.0};
    for (std::size_t i = 0; i < dim_; ++i) t += (*this)(i, i);
    return t;
  }

  double max_abs() const {
    double m = 0.0;
    for (const auto& z : data_) m = std::max(m, std::abs(z));
    return m;
  }

  bool is_hermitian(double tol) const {
    for (std::size_t r = 0; r < dim_; ++r)
      for (std::size_t c = r; c < dim_; ++c)
        if (std::abs((*this)(r, c) - std::conj((*this)(c, r))) > tol) return false;
    return true;
  }

  ComplexMatrix& operator+=(const ComplexMatrix& o) {
    require_same_dim(o);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }
  ComplexMatrix& operator-=(const ComplexMatrix& o) {
    require_same_dim(o);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
  }
  ComplexMatrix& operator*=(complex_t s) {
    for (auto& z : data_) z *= s;
    return *this;
  }

  friend ComplexMatrix operator+(ComplexMatrix a, const ComplexMatrix& b) {
    a += b;
    return a;
  }
  friend ComplexMatrix operator-(ComplexMatrix a, const ComplexMatrix& b) {
    a -= b;
    return a;
  }
  friend ComplexMatrix operator*(complex_t s, ComplexMatrix a) {
    a *= s;
    return a;
  }

  friend ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b) {
    a.require_same_dim(b);
    ComplexMatrix out(a.dim_);
    out.map().noalias() = a.map() * b.map();
    return out;
  }

 private:
  void require_same_dim(const ComplexMatrix& o) const {
    if (dim_ != o.dim_) throw std::invalid_argument("ComplexMatrix: dimension mismatch");
  }

  std::size_t dim_ = 0;
  std::vector<complex_t> data_;
};

inline ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  const std::size_t da = a.dim(), db = b.dim();
  ComplexMatrix out(da * db);
  for (std::size_t ra = 0; ra < da; ++ra)
    for (std::size_t ca = 0; ca < da; ++ca) {
      const complex_t f = a(ra, ca);
      if (f == complex_t{0.0, 0.0}) continue;
      for (std::size_t rb = 0; rb < db; ++rb)
        for (std::size_t cb = 0; cb < db; ++cb)
          out(ra * db + rb, ca * db + cb) = f * b(rb, cb);
    }
  return out;
}

inline double frobenius_distance(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("frobenius_distance: dimension mismatch");
  double s = 0.0;
  for (std::size_t r = 0; r < a.dim(); ++r)
    for (std::size_t c = 0; c < a.dim(); ++c) {
      const complex_t d = a(r, c) - b(r, c);
      s += std::norm(d);
    }
  return std::sqrt(s);
}

struct HermitianEig {
  std::vector<double> values;  // ascending
  ComplexMatrix vectors;       // column k pairs with values[k]
};

// Fixes a deterministic global phase: the first component with magnitude
// above tol is made real and positive.
inline void fix_phase(ComplexMatrix& vectors, std::size_t col, double tol = 1e-12) {
  const std::size_t d = vectors.dim();
  for (std::size_t r = 0; r < d; ++r) {
    const complex_t z = vectors(r, col);
    if (std::abs(z) > tol) {
      const complex_t phase = std::conj(z) / std::abs(z);
      for (std::size_t k = 0; k < d; ++k) vectors(k, col) *= phase;
      return;
    }
  }
}

// Eigendecomposition of a Hermitian matrix, eigenvalues ascending,
// eigenvector phases fixed. Throws if the input is not Hermitian.
inline HermitianEig hermitian_eig(const ComplexMatrix& m, double herm_tol = 1e-10) {
  if (m.dim() == 0) throw std::invalid_argument("hermitian_eig: empty matrix");
  if (!m.is_hermitian(herm_tol))
    throw std::invalid_argument("hermitian_eig: matrix is not Hermitian within tolerance");
  Eigen::SelfAdjointEigenSolver<EigenCMat> solver(m.map());
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("hermitian_eig: eigensolver failed to converge");
  HermitianEig out;
  const std::size_t d = m.dim();
  out.values.resize(d);
  out.vectors = ComplexMatrix(d);
  for (std::size_t k = 0; k < d; ++k) {
    out.values[k] = solver.eigenvalues()(static_cast<Eigen::Index>(k));
    for (std::size_t r = 0; r < d; ++r)
      out.vectors(r, k) = solver.eigenvectors()(static_cast<Eigen::Index>(r),
                                                static_cast<Eigen::Index>(k));
    fix_phase(out.vectors, k);
  }
  return out;
}

}  // namespace qnee
