#include <gtest/gtest.h>

#include <random>

#include "oracle.hpp"
#include "qcm/hamiltonian.hpp"
#include "qcm/pauli.hpp"

using namespace qcm;

namespace {

double max_abs(const oracle::Mat& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST(PauliString, SingleQubitProducts) {
  const auto x = pauli_x(0), y = pauli_y(0), z = pauli_z(0);
  auto xy = multiply(x, y);
  EXPECT_EQ(xy.result, z);
  EXPECT_EQ(xy.phase, 1);
  auto yx = multiply(y, x);
  EXPECT_EQ(yx.result, z);
  EXPECT_EQ(yx.phase, 3);
  EXPECT_EQ(multiply(y, y).result, PauliString{});
  EXPECT_EQ(multiply(y, y).phase, 0);
}

TEST(PauliString, ProductsMatchDenseMatrices) {
  std::mt19937_64 rng(5);
  const std::complex<double> iphase[] = {1.0, {0, 1}, -1.0, {0, -1}};
  for (int trial = 0; trial < 300; ++trial) {
    const int q = 1 + static_cast<int>(rng() % 5);
    const auto a = parse_pauli_string(oracle::random_letters(rng, q));
    const auto b = parse_pauli_string(oracle::random_letters(rng, q));
    const auto ab = multiply(a, b);
    const oracle::Mat lhs = oracle::dense(a, q) * oracle::dense(b, q);
    const oracle::Mat rhs = iphase[ab.phase] * oracle::dense(ab.result, q);
    ASSERT_LT(max_abs(lhs - rhs), 1e-12) << to_string(a, q) << " * " << to_string(b, q);
    const oracle::Mat comm = oracle::dense(a, q) * oracle::dense(b, q) - oracle::dense(b, q) * oracle::dense(a, q);
    ASSERT_EQ(commutes(a, b), max_abs(comm) < 1e-12);
  }
}

TEST(PauliString, QubitwiseCommutation) {
  EXPECT_TRUE(qubitwise_commutes(parse_pauli_string("XIZ"), parse_pauli_string("XYI")));
  EXPECT_FALSE(qubitwise_commutes(parse_pauli_string("XX"), parse_pauli_string("YY")));
  EXPECT_TRUE(commutes(parse_pauli_string("XX"), parse_pauli_string("YY")));
}

TEST(PauliString, TextRoundTrip) {
  for (const char* s : {"I", "XYZ", "IIZX", "YYYYYYYY"}) {
    const auto p = parse_pauli_string(s);
    EXPECT_EQ(to_string(p, static_cast<int>(std::string(s).size())), s);
  }
  EXPECT_THROW(parse_pauli_string("XQ"), std::invalid_argument);
}

TEST(PauliSum, FromTermsMergesAndPrunes) {
  const std::vector<PauliTerm> t = {{pauli_x(0), 1.0}, {pauli_x(0), -1.0}, {pauli_z(1), 2.0}, {pauli_z(1), 0.5}};
  const auto h = PauliSum::from_terms(2, t);
  ASSERT_EQ(h.size(), 1u);
  EXPECT_DOUBLE_EQ(h.coefficient(pauli_z(1)).real(), 2.5);
  EXPECT_EQ(h.coefficient(pauli_x(0)), Complex{});
}

TEST(PauliSum, TwoQubitHeisenbergSquare) {
  const auto h = heisenberg_ring(2);
  const auto h2 = multiply(h, h);
  ASSERT_EQ(h2.size(), 4u);
  EXPECT_NEAR(h2.coefficient(PauliString{}).real(), 3.0 / 64, 1e-15);
  for (const char* s : {"XX", "YY", "ZZ"}) EXPECT_NEAR(h2.coefficient(parse_pauli_string(s)).real(), -2.0 / 64, 1e-15);
  EXPECT_NEAR(identity_coefficient(h2), (oracle::dense(h) * oracle::dense(h)).trace().real() / 4, 1e-15);
}

TEST(PauliSum, MultiplyMatchesDense) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    const auto a = oracle::random_sum(rng, 3, 6, false);
    const auto b = oracle::random_sum(rng, 3, 5, false);
    EXPECT_LT(max_abs(oracle::dense(multiply(a, b)) - oracle::dense(a) * oracle::dense(b)), 1e-12);
    EXPECT_LT(max_abs(oracle::dense(a + b) - oracle::dense(a) - oracle::dense(b)), 1e-12);
  }
}

TEST(PauliSum, PowersMatchDense) {
  std::mt19937_64 rng(12);
  const auto h = oracle::random_sum(rng, 4, 8);
  const auto hk = powers(h, 5);
  oracle::Mat m = oracle::dense(h);
  oracle::Mat acc = m;
  for (int k = 1; k <= 5; ++k) {
    EXPECT_LT(max_abs(oracle::dense(hk[static_cast<std::size_t>(k - 1)]) - acc), 1e-9 * max_abs(acc)) << k;
    EXPECT_TRUE(hk[static_cast<std::size_t>(k - 1)].is_hermitian(1e-12 * max_abs(acc)));
    acc = acc * m;
  }
  EXPECT_THROW((void)power(h, 6), std::invalid_argument);
  EXPECT_THROW((void)power(h, 0), std::invalid_argument);
}

TEST(PauliSum, QubitMismatchThrows) {
  EXPECT_THROW((void)multiply(heisenberg_ring(2), heisenberg_ring(4)), std::invalid_argument);
}

// Term counts of H^k from the Pauli decomposition of the dense matrix power.
TEST(PauliSum, HeisenbergPowerTermCountsMatchDenseDecomposition) {
  const int q = 6;
  const auto h = heisenberg_ring(q);
  const auto hk = powers(h, 4);
  const oracle::Mat m = oracle::dense(h);
  oracle::Mat acc = m;
  for (int k = 1; k <= 4; ++k) {
    std::size_t nonzero = 0;
    for (Mask x = 0; x < (1u << q); ++x)
      for (Mask z = 0; z < (1u << q); ++z) {
        const auto c = (oracle::dense(PauliString{x, z}, q) * acc).trace() / double(1 << q);
        if (std::abs(c) > 1e-12) ++nonzero;
      }
    EXPECT_EQ(hk[static_cast<std::size_t>(k - 1)].size(), nonzero) << "k=" << k;
    acc = acc * m;
  }
}

TEST(PauliSum, ApplyAndExpectationMatchDense) {
  std::mt19937_64 rng(13);
  const int q = 4;
  const auto h = oracle::random_sum(rng, q, 12);
  const oracle::Vec psi = oracle::random_state(rng, 1 << q);
  const auto v = oracle::to_std(psi);
  std::vector<Complex> out(v.size());
  apply(h, v, out);
  const oracle::Vec ref = oracle::dense(h) * psi;
  for (std::size_t i = 0; i < out.size(); ++i) EXPECT_LT(std::abs(out[i] - ref(static_cast<Eigen::Index>(i))), 1e-12);
  EXPECT_NEAR(expectation(h, v), psi.dot(ref).real(), 1e-12);

  const auto p = parse_pauli_string("XYZI");
  EXPECT_LT(std::abs(expectation(p, v) - psi.dot(oracle::dense(p, q) * psi)), 1e-12);
  const oracle::Mat rho = psi * psi.adjoint();
  EXPECT_LT(std::abs(expectation_dm(p, oracle::row_major(rho), q) - (rho * oracle::dense(p, q)).trace()), 1e-12);
}

TEST(PauliSum, TextAndJsonRoundTrip) {
  std::mt19937_64 rng(14);
  const auto h = oracle::random_sum(rng, 5, 10, false);
  EXPECT_EQ(from_text(to_text(h)), h);
  EXPECT_EQ(pauli_sum_from_json(to_json(h)), h);
  EXPECT_THROW((void)from_text("1.0 XQ\n"), std::invalid_argument);
}
