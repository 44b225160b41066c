#include <catch2/catch_amalgamated.hpp>

#include <unsupported/Eigen/KroneckerProduct>

#include <cmath>
#include <complex>
#include <vector>

#include "oracle_helpers.hpp"
#include "qnee/ansatz.hpp"

using namespace qnee;

namespace {

// 2x2 R_Y and explicit Kronecker assembly, used as an independent route to
// the block unitary.
oracle::CMat ry(double t) {
  oracle::CMat m(2, 2);
  m << std::cos(t / 2), -std::sin(t / 2), std::sin(t / 2), std::cos(t / 2);
  return m;
}

oracle::CMat block_oracle(double a0, double a1, double a2, double a3) {
  oracle::CMat cz = oracle::CMat::Identity(4, 4);
  cz(3, 3) = -1.0;
  return Eigen::kroneckerProduct(ry(a2), ry(a3)).eval() * cz *
         Eigen::kroneckerProduct(ry(a0), ry(a1)).eval();
}

}  // namespace

TEST_CASE("bitstring conventions", "[ansatz]") {
  BitString s = BitString::from_bits({1, 0});
  CHECK(s.index == 2);  // qubit 0 is the most significant bit
  CHECK(s.bits() == std::vector<int>{1, 0});
  BitString t(3, 5);
  CHECK(t.bits() == std::vector<int>{1, 0, 1});
  CHECK_THROWS_AS(BitString(2, 4), std::invalid_argument);
  CHECK_THROWS_AS(BitString::from_bits({0, 2}), std::invalid_argument);
}

TEST_CASE("parameter layout and counts", "[ansatz]") {
  CHECK(CircuitParams::expected_angle_count(2, 1) == 4);
  CHECK(CircuitParams::expected_angle_count(2, 8) == 32);
  CHECK(CircuitParams::expected_angle_count(3, 8) == 48);   // 2*n*N_l
  CHECK(CircuitParams::expected_angle_count(4, 10) == 80);
  CHECK(CircuitParams::expected_angle_count(5, 2) == 20);

  CHECK_NOTHROW(CircuitParams::zeros(3, 2));
  // odd qubit count with odd layer count cannot honor the 2*n*N_l contract
  CHECK_THROWS_AS(CircuitParams::zeros(3, 1), std::invalid_argument);
  CHECK_THROWS_AS(CircuitParams(2, 1, {0.0, 0.0}), std::invalid_argument);

  auto bonds0 = CircuitParams::layer_bonds(4, 0);
  REQUIRE(bonds0.size() == 2);
  CHECK(bonds0[0] == std::pair<int, int>{0, 1});
  CHECK(bonds0[1] == std::pair<int, int>{2, 3});
  auto bonds1 = CircuitParams::layer_bonds(4, 1);
  REQUIRE(bonds1.size() == 2);
  CHECK(bonds1[0] == std::pair<int, int>{1, 2});
  CHECK(bonds1[1] == std::pair<int, int>{3, 0});  // periodic wrap on odd layers
}

TEST_CASE("zero angles act as the identity on |0..0>", "[ansatz]") {
  for (int n : {2, 3, 4}) {
    auto rho = DensityMatrix::from_state(StateVector::basis_state(n, 0));
    auto out = apply_circuit(rho, CircuitParams::zeros(n, 2));
    CHECK(frobenius_distance(out.matrix(), rho.matrix()) < 1e-12);
  }
}

TEST_CASE("zero angles leave any diagonal state unchanged", "[ansatz]") {
  // CZ phases cancel in rho = V rho V^dag when rho is diagonal
  auto rho = DensityMatrix::diagonal({0.4, 0.3, 0.2, 0.1});
  auto out = apply_circuit(rho, CircuitParams::zeros(2, 2));
  CHECK(frobenius_distance(out.matrix(), rho.matrix()) < 1e-12);
}

TEST_CASE("single R_Y(pi) flips the first qubit", "[ansatz]") {
  std::vector<double> theta(4, 0.0);
  theta[0] = M_PI;
  auto rho = DensityMatrix::from_state(StateVector::basis_state(2, 0));
  auto dist = outcome_distribution(rho, CircuitParams(2, 1, theta));
  REQUIRE(dist.size() == 4);
  CHECK(dist[2] == Catch::Approx(1.0).margin(1e-12));  // |10>
  CHECK(dist[0] + dist[1] + dist[3] < 1e-12);
}

TEST_CASE("circuit matches the explicit matrix product oracle", "[ansatz]") {
  std::mt19937_64 rng(1234);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> theta(8);
    for (auto& t : theta) t = uniform(rng, 0.0, 2.0 * M_PI);
    CircuitParams p(2, 2, theta);

    // layer 0 block on (0,1), layer 1 block on (1,0): swap factor order via
    // the basis permutation |q1 q0> = SWAP |q0 q1>
    oracle::CMat swap = oracle::CMat::Zero(4, 4);
    swap(0, 0) = swap(3, 3) = 1.0;
    swap(1, 2) = swap(2, 1) = 1.0;
    oracle::CMat b0 = block_oracle(theta[0], theta[1], theta[2], theta[3]);
    oracle::CMat b1 = swap * block_oracle(theta[4], theta[5], theta[6], theta[7]) * swap;
    oracle::CMat v_ref = b1 * b0;

    auto v = circuit_unitary(p);
    CHECK((oracle::to_eigen(v) - v_ref).cwiseAbs().maxCoeff() < 1e-12);

    auto rho = oracle::random_density(2, 5000 + static_cast<std::uint64_t>(rep));
    auto out = apply_circuit(rho, p);
    oracle::CMat ref = v_ref * oracle::to_eigen(rho.matrix()) * v_ref.adjoint();
    CHECK((oracle::to_eigen(out.matrix()) - ref).cwiseAbs().maxCoeff() < 1e-12);

    auto dist = outcome_distribution(rho, p);
    for (std::size_t i = 0; i < 4; ++i)
      CHECK(dist[i] == Catch::Approx(ref(i, i).real()).margin(1e-12));
  }
}

TEST_CASE("unitary invariants", "[ansatz]") {
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    const int n = 3;
    auto p = CircuitParams::random(n, 4, seed);
    auto rho = oracle::random_density(n, seed + 400);
    auto out = apply_circuit(rho, p);

    CHECK(std::abs(out.matrix().trace() - complex_t{1.0, 0.0}) < 1e-10);

    auto ev_in = oracle::eigenvalues_of(rho.matrix());
    auto ev_out = oracle::eigenvalues_of(out.matrix());
    for (std::size_t k = 0; k < ev_in.size(); ++k)
      CHECK(std::abs(ev_in[k] - ev_out[k]) < 1e-10);

    // V V^dag = I
    auto v = circuit_unitary(p);
    auto vv = v * v.dagger();
    CHECK(frobenius_distance(vv, ComplexMatrix::identity(v.dim())) < 1e-10);
  }
}

TEST_CASE("conjugate_column produces orthonormal candidate eigenvectors", "[ansatz]") {
  auto p0 = CircuitParams::zeros(3, 2);
  auto e0 = conjugate_column(p0, BitString(3, 0));
  CHECK(std::abs(e0[0] - complex_t{1.0, 0.0}) < 1e-12);

  auto p = CircuitParams::random(3, 4, 77);
  std::vector<StateVector> cols;
  for (std::size_t s = 0; s < 8; ++s) cols.push_back(conjugate_column(p, BitString(3, s)));
  for (std::size_t a = 0; a < 8; ++a)
    for (std::size_t b = 0; b < 8; ++b) {
      const complex_t ip = inner_product(cols[a], cols[b]);
      CHECK(std::abs(ip - (a == b ? complex_t{1.0, 0.0} : complex_t{0.0, 0.0})) < 1e-10);
    }

  // <s| V rho V^dag |s> = <col_s| rho |col_s>
  auto rho = oracle::random_density(3, 901);
  auto dist = outcome_distribution(rho, p);
  for (std::size_t s = 0; s < 8; ++s) {
    complex_t q{0.0, 0.0};
    for (std::size_t r = 0; r < 8; ++r)
      for (std::size_t c = 0; c < 8; ++c)
        q += std::conj(cols[s][r]) * rho(r, c) * cols[s][c];
    CHECK(q.real() == Catch::Approx(dist[s]).margin(1e-10));
  }
}

TEST_CASE("outcome distribution basics", "[ansatz]") {
  auto rho00 = DensityMatrix::from_state(StateVector::basis_state(2, 0));
  auto d0 = outcome_distribution(rho00, CircuitParams::zeros(2, 2));
  CHECK(d0[0] == Catch::Approx(1.0).margin(1e-12));

  auto mixed = DensityMatrix::maximally_mixed(3);
  auto dm = outcome_distribution(mixed, CircuitParams::random(3, 4, 9));
  for (double x : dm) CHECK(x == Catch::Approx(0.125).margin(1e-12));
}

TEST_CASE("measured distribution is majorized by the spectrum", "[ansatz]") {
  for (std::uint64_t seed = 100; seed < 200; ++seed) {
    const int n = 2 + static_cast<int>(seed % 2);
    auto rho = oracle::random_density(n, seed);
    auto p = CircuitParams::random(n, 2, seed * 3 + 1);
    auto dist = outcome_distribution(rho, p);

    double total = 0.0;
    for (double x : dist) {
      CHECK(x >= 0.0);
      total += x;
    }
    CHECK(std::abs(total - 1.0) < 1e-10);

    auto ps_dist = oracle::partial_sums_desc(dist);
    auto ps_eig = oracle::partial_sums_desc(oracle::eigenvalues_of(rho.matrix()));
    for (std::size_t k = 0; k < ps_dist.size(); ++k)
      CHECK(ps_dist[k] <= ps_eig[k] + 1e-10);

    // Schur concavity consequence
    CHECK(shannon_entropy(dist) >= von_neumann_exact(rho) - 1e-10);
  }
}

TEST_CASE("circuit composition", "[ansatz]") {
  auto pa = CircuitParams::random(2, 2, 31);
  auto pb = CircuitParams::random(2, 2, 32);
  auto rho = oracle::random_density(2, 33);
  auto stepwise = apply_circuit(apply_circuit(rho, pa), pb);
  oracle::CMat v = oracle::to_eigen(circuit_unitary(pb)) * oracle::to_eigen(circuit_unitary(pa));
  oracle::CMat ref = v * oracle::to_eigen(rho.matrix()) * v.adjoint();
  CHECK((oracle::to_eigen(stepwise.matrix()) - ref).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("apply_circuit argument errors", "[ansatz]") {
  auto rho = DensityMatrix::maximally_mixed(3);
  CHECK_THROWS_AS(apply_circuit(rho, CircuitParams::zeros(2, 2)), std::invalid_argument);
}

TEST_CASE("sampling determinism and exactness", "[ansatz]") {
  auto shots = sample_shots({1.0, 0.0, 0.0, 0.0}, 100, 42);
  CHECK(shots.total == 100);
  CHECK(shots.counts[0] == 100);
  CHECK(shots.count(BitString(2, 0)) == 100);

  auto a = sample_shots({0.25, 0.25, 0.25, 0.25}, 1000, 7);
  auto b = sample_shots({0.25, 0.25, 0.25, 0.25}, 1000, 7);
  CHECK(a.counts == b.counts);
  auto c = sample_shots({0.25, 0.25, 0.25, 0.25}, 1000, 8);
  CHECK(a.counts != c.counts);
}

TEST_CASE("sampling statistics within 5 sigma", "[ansatz]") {
  const std::uint64_t n_shots = 40000;
  auto shots = sample_shots({0.25, 0.25, 0.25, 0.25}, n_shots, 1337);
  const double sigma = std::sqrt(n_shots * 0.25 * 0.75);
  for (auto k : shots.counts)
    CHECK(std::abs(static_cast<double>(k) - 10000.0) < 5.0 * sigma);

  // empirical frequencies approach the sampled distribution
  std::vector<double> p = {0.7, 0.2, 0.06, 0.04};
  auto s2 = sample_shots(p, n_shots, 2024);
  auto f = s2.frequencies();
  for (std::size_t i = 0; i < 4; ++i) {
    const double sd = std::sqrt(p[i] * (1 - p[i]) / n_shots);
    CHECK(std::abs(f[i] - p[i]) < 5.0 * sd);
  }
}

TEST_CASE("sampling rejects malformed distributions", "[ansatz]") {
  CHECK_THROWS_AS(sample_shots({0.5, 0.4}, 10, 1), std::invalid_argument);
  CHECK_THROWS_AS(sample_shots({0.7, -0.3, 0.6, 0.0}, 10, 1), std::invalid_argument);
  CHECK_THROWS_AS(sample_shots({0.5, 0.25, 0.25}, 10, 1), std::invalid_argument);
  CHECK_THROWS_AS(sample_shots({1.0, 0.0, 0.0, 0.0}, 0, 1), std::invalid_argument);
}
