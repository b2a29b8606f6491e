#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracle.hpp"
#include "qcm/hamiltonian.hpp"
#include "qcm/sim.hpp"

using namespace qcm;
using oracle::Mat;

namespace {

Mat to_mat(const Matrix2& u) {
  Mat m(2, 2);
  m << u[0], u[1], u[2], u[3];
  return m;
}

Mat to_mat(const Matrix4& u) {
  Mat m(4, 4);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) m(r, c) = u[static_cast<std::size_t>(4 * r + c)];
  return m;
}

Mat dm_of(const QuantumState& s) {
  const auto d = s.to_density_matrix();
  return oracle::from_row_major({d.data().begin(), d.data().end()}, static_cast<int>(d.dim()));
}

QuantumState state_of(const Mat& rho, int q) { return QuantumState::from_density_matrix(q, oracle::row_major(rho)); }

// (1 - 3p/4) rho + p/4 sum_P P rho P on one qubit.
Mat depolarize_oracle(const Mat& rho, int qubit, int q, double p) {
  Mat out = (1 - 3 * p / 4) * rho;
  for (char c : {'X', 'Y', 'Z'}) {
    const Mat k = oracle::embed1(oracle::letter(c), qubit, q);
    out += p / 4 * k * rho * k.adjoint();
  }
  return out;
}

// Average over all 16 two-qubit Paulis is the full pair depolarizer.
Mat pair_oracle(const Mat& rho, int a, int b, int q, double p) {
  Mat out = (1 - p) * rho;
  for (char ca : {'I', 'X', 'Y', 'Z'})
    for (char cb : {'I', 'X', 'Y', 'Z'}) {
      const Mat k = oracle::embed1(oracle::letter(ca), a, q) * oracle::embed1(oracle::letter(cb), b, q);
      out += p / 16 * k * rho * k.adjoint();
    }
  return out;
}

Mat random_rho(std::mt19937_64& rng, int q) {
  const int dim = 1 << q;
  Mat a(dim, dim);
  std::normal_distribution<double> n;
  for (int r = 0; r < dim; ++r)
    for (int c = 0; c < dim; ++c) a(r, c) = {n(rng), n(rng)};
  Mat rho = a * a.adjoint();
  return rho / rho.trace().real();
}

double max_abs(const Mat& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST(Gates, Unitary) {
  for (const auto& u : {gates::x(), gates::h(), gates::s(), gates::sdg(), gates::rz(0.7)})
    EXPECT_LT(max_abs(to_mat(u) * to_mat(u).adjoint() - Mat::Identity(2, 2)), 1e-15);
  for (const auto& u : {gates::cnot(), gates::eswap(1.3), gates::swap()})
    EXPECT_LT(max_abs(to_mat(u) * to_mat(u).adjoint() - Mat::Identity(4, 4)), 1e-15);
  const double t = 0.9;
  const Mat ref = std::cos(t / 2) * Mat::Identity(4, 4) - Complex(0, std::sin(t / 2)) * to_mat(gates::swap());
  EXPECT_LT(max_abs(to_mat(gates::eswap(t)) - ref), 1e-15);
}

TEST(Gates, StatevectorMatchesDenseEmbedding) {
  std::mt19937_64 rng(1);
  const int q = 4;
  for (int trial = 0; trial < 20; ++trial) {
    const oracle::Vec psi = oracle::random_state(rng, 1 << q);
    auto s = QuantumState::from_statevector(oracle::to_std(psi));
    const int a = static_cast<int>(rng() % q);
    int b = static_cast<int>(rng() % q);
    if (b == a) b = (a + 1) % q;
    apply_gate(s, gates::rz(0.3 * trial), a);
    apply_gate(s, gates::eswap(0.2 * trial), a, b);
    apply_gate(s, gates::cnot(), b, a);
    const oracle::Vec ref = oracle::embed2(to_mat(gates::cnot()), b, a, q) *
                            oracle::embed2(to_mat(gates::eswap(0.2 * trial)), a, b, q) *
                            oracle::embed1(to_mat(gates::rz(0.3 * trial)), a, q) * psi;
    for (int i = 0; i < (1 << q); ++i) ASSERT_LT(std::abs(s.data()[static_cast<std::size_t>(i)] - ref(i)), 1e-12);
  }
}

TEST(Gates, DensityMatrixConjugation) {
  std::mt19937_64 rng(2);
  const int q = 3;
  const Mat rho = random_rho(rng, q);
  auto s = state_of(rho, q);
  apply_gate(s, gates::h(), 1);
  apply_gate(s, gates::cnot(), 2, 0);
  const Mat u = oracle::embed2(to_mat(gates::cnot()), 2, 0, q) * oracle::embed1(to_mat(gates::h()), 1, q);
  EXPECT_LT(max_abs(dm_of(s) - u * rho * u.adjoint()), 1e-13);
}

TEST(Channels, GlobalWhiteNoise) {
  std::mt19937_64 rng(3);
  const Mat rho = random_rho(rng, 2);
  const auto out = channel_global(state_of(rho, 2), 0.3);
  EXPECT_LT(max_abs(dm_of(out) - (0.7 * rho + 0.3 / 4 * Mat::Identity(4, 4))), 1e-15);
  EXPECT_LT(trace_distance(channel_global(state_of(rho, 2), 1.0), QuantumState::maximally_mixed(2)), 1e-15);
  EXPECT_THROW((void)channel_global(state_of(rho, 2), 1.5), std::invalid_argument);
}

TEST(Channels, LocalDepolarizeMatchesKraus) {
  std::mt19937_64 rng(4);
  const int q = 3;
  const Mat rho = random_rho(rng, q);
  Mat ref = rho;
  for (int j = 0; j < q; ++j) ref = depolarize_oracle(ref, j, q, 0.17);
  EXPECT_LT(max_abs(dm_of(channel_local(state_of(rho, q), 0.17, LocalChannel::depolarize)) - ref), 1e-14);
}

TEST(Channels, LocalDephaseMatchesKraus) {
  std::mt19937_64 rng(5);
  const int q = 3;
  const Mat rho = random_rho(rng, q);
  Mat ref = rho;
  for (int j = 0; j < q; ++j) {
    const Mat z = oracle::embed1(oracle::letter('Z'), j, q);
    ref = (1 - 0.4 / 2) * ref + 0.4 / 2 * z * ref * z;
  }
  EXPECT_LT(max_abs(dm_of(channel_local(state_of(rho, q), 0.4, LocalChannel::dephase)) - ref), 1e-14);
}

TEST(Channels, FullDepolarizationAndPureFidelity) {
  auto plus = QuantumState::from_statevector({1 / std::numbers::sqrt2, 1 / std::numbers::sqrt2});
  EXPECT_LT(trace_distance(channel_local(plus, 1.0, LocalChannel::depolarize), QuantumState::maximally_mixed(1)), 1e-15);
  for (double p : {0.0, 0.1, 0.5, 1.0}) {
    const auto rho = channel_local(plus, p, LocalChannel::depolarize);
    EXPECT_NEAR(fidelity(rho, plus.data()), 1 - p / 2, 1e-15);
  }
}

TEST(Channels, DepolarizedSingletFidelity) {
  const double r = 1 / std::numbers::sqrt2;
  const std::vector<Complex> singlet{0, r, -r, 0};
  const auto s = QuantumState::from_statevector(singlet);
  const Mat ref = depolarize_oracle(depolarize_oracle(dm_of(s), 0, 2, 0.2), 1, 2, 0.2);
  const oracle::Vec v = Eigen::Map<const oracle::Vec>(singlet.data(), 4);
  const double f_oracle = v.dot(ref * v).real();
  EXPECT_NEAR(f_oracle, 0.73, 1e-15);
  EXPECT_NEAR(fidelity(channel_local(s, 0.2, LocalChannel::depolarize), singlet), f_oracle, 1e-15);
}

TEST(Channels, PairAndQubitDepolarizersMatchKraus) {
  std::mt19937_64 rng(6);
  const int q = 3;
  const Mat rho = random_rho(rng, q);
  auto s = state_of(rho, q);
  depolarize_pair(s, 2, 0, 0.3);
  EXPECT_LT(max_abs(dm_of(s) - pair_oracle(rho, 2, 0, q, 0.3)), 1e-14);
  auto t = state_of(rho, q);
  depolarize_qubit(t, 1, 0.25);
  EXPECT_LT(max_abs(dm_of(t) - depolarize_oracle(rho, 1, q, 0.25)), 1e-14);
}

TEST(Channels, OutputsArePositiveWithUnitTrace) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const Mat rho = random_rho(rng, 3);
    const double p = std::uniform_real_distribution<double>(0, 1)(rng);
    for (auto kind : {LocalChannel::depolarize, LocalChannel::dephase}) {
      const auto out = channel_local(state_of(rho, 3), p, kind);
      EXPECT_NEAR(out.trace(), 1.0, 1e-13);
      EXPECT_GT(min_eigenvalue(out), -1e-13);
    }
  }
}

TEST(Readout, SingleBitFlip) {
  const std::vector<double> probs{0.9, 0.1};
  const auto out = readout_noise(probs, 0.02);
  EXPECT_NEAR(out[0], 0.884, 1e-15);
  EXPECT_NEAR(out[1], 0.116, 1e-15);
}

TEST(Readout, TwoBitFlipIsProductOfBitChannels) {
  const std::vector<double> probs{0.5, 0.2, 0.2, 0.1};
  const double f = 0.1;
  const auto out = readout_noise(probs, f);
  for (int y = 0; y < 4; ++y) {
    double ref = 0;
    for (int x = 0; x < 4; ++x) {
      const int d = std::popcount(static_cast<unsigned>(x ^ y));
      ref += probs[static_cast<std::size_t>(x)] * std::pow(f, d) * std::pow(1 - f, 2 - d);
    }
    EXPECT_NEAR(out[static_cast<std::size_t>(y)], ref, 1e-15);
  }
}

TEST(Expectation, StatevectorAndDensityMatrixAgree) {
  std::mt19937_64 rng(8);
  const auto h = heisenberg_ring(4);
  const auto psi = QuantumState::from_statevector(oracle::to_std(oracle::random_state(rng, 16)));
  EXPECT_NEAR(expectation_exact(h, psi), expectation_exact(h, psi.to_density_matrix()), 1e-14);
  const Mat rho = random_rho(rng, 4);
  EXPECT_NEAR(expectation_exact(h, state_of(rho, 4)), (rho * oracle::dense(h)).trace().real(), 1e-14);
  EXPECT_THROW((void)expectation_exact(heisenberg_ring(6), psi), std::invalid_argument);
}

TEST(NoiseSpec, Validation) {
  NoiseSpec n;
  n.channel = NoiseChannel::device;
  n.device.alpha = 1.5;
  EXPECT_THROW(n.validate(), std::invalid_argument);
  n.device.alpha = 0.5;
  n.device.readout_flip = 0.6;
  EXPECT_THROW(n.validate(), std::invalid_argument);
  n.device.readout_flip = 0.04;
  EXPECT_NO_THROW(n.validate());
  EXPECT_DOUBLE_EQ(n.effective_readout_flip(), 0.02);
  EXPECT_EQ(channel_from_name(channel_name(NoiseChannel::dephase)), NoiseChannel::dephase);
  EXPECT_THROW((void)channel_from_name("amplitude"), std::invalid_argument);
  EXPECT_EQ(device_params_from_json(to_json(n.device)).readout_flip, 0.04);
}

TEST(DeviceNoise, MatchesGateByGateKrausOracle) {
  Circuit c;
  c.num_qubits = 2;
  c.params = {0.8};
  c.gates = {{GateKind::X, 0}, {GateKind::H, 1}, {GateKind::CNOT, 1, 0}, {GateKind::ESWAP, 0, 1, 0}};
  NoiseSpec n{NoiseChannel::device, 0.0, {0.1, 0.05, 0.0, 0.5}};
  const auto out = apply_circuit(c, QuantumState::zero(2, StateKind::density_matrix), n);

  const double p2 = 0.5 * 0.1, p1 = 0.5 * 0.05;
  Mat rho = Mat::Zero(4, 4);
  rho(0, 0) = 1;
  auto gate1 = [&](const Mat& u, int qb) {
    const Mat g = oracle::embed1(u, qb, 2);
    rho = depolarize_oracle(g * rho * g.adjoint(), qb, 2, p1);
  };
  gate1(oracle::letter('X'), 0);
  gate1(to_mat(gates::h()), 1);
  Mat g = oracle::embed2(to_mat(gates::cnot()), 1, 0, 2);
  rho = pair_oracle(g * rho * g.adjoint(), 1, 0, 2, p2);
  g = oracle::embed2(to_mat(gates::eswap(0.8)), 0, 1, 2);
  rho = g * rho * g.adjoint();
  for (int k = 0; k < 3; ++k) rho = pair_oracle(rho, 0, 1, 2, p2);
  EXPECT_LT(max_abs(dm_of(out) - rho), 1e-14);
}

TEST(DeviceNoise, AlphaZeroIsNoiseless) {
  Circuit c;
  c.num_qubits = 3;
  c.params = {0.4, 1.1};
  c.gates = {{GateKind::H, 0}, {GateKind::CNOT, 0, 1}, {GateKind::ESWAP, 1, 2, 0}, {GateKind::RZ, 2, -1, 1}};
  NoiseSpec n{NoiseChannel::device, 0.0, {0.01, 0.001, 0.02, 0.0}};
  const auto noisy = apply_circuit(c, QuantumState::zero(3, StateKind::density_matrix), n);
  const auto clean = apply_circuit(c, QuantumState::zero(3));
  EXPECT_LT(trace_distance(noisy, clean), 1e-14);
}

TEST(OutputNoise, WhiteChannelOnCircuitOutput) {
  Circuit c;
  c.num_qubits = 2;
  c.gates = {{GateKind::H, 0}, {GateKind::CNOT, 0, 1}};
  const auto clean = apply_circuit(c, QuantumState::zero(2));
  const auto white = apply_circuit(c, QuantumState::zero(2), NoiseSpec{NoiseChannel::white, 0.25, {}});
  EXPECT_LT(trace_distance(white, channel_global(clean.to_density_matrix(), 0.25)), 1e-15);
}
