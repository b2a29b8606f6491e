#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <random>

#include "oracle.hpp"
#include "qcm/ansatz.hpp"
#include "qcm/hamiltonian.hpp"
#include "qcm/measure.hpp"
#include "qcm/parallel.hpp"
#include "qcm/sim.hpp"

using namespace qcm;

namespace {

QuantumState random_rvb(int q, int d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0, 6.28);
  std::vector<double> theta(static_cast<std::size_t>(q * d));
  for (auto& t : theta) t = u(rng);
  return apply_circuit(rvb_circuit(q, d, theta), QuantumState::zero(q));
}

}  // namespace

TEST(Grouping, RandomSumsPassCheck) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<PauliSum> sums{oracle::random_sum(rng, 5, 40), oracle::random_sum(rng, 5, 30)};
    const auto g = group_tpb(sums);
    EXPECT_EQ(check_grouping(g, sums), "");
    for (const auto& grp : g.groups)
      for (std::size_t i = 0; i < grp.members.size(); ++i)
        for (std::size_t j = i + 1; j < grp.members.size(); ++j)
          ASSERT_TRUE(qubitwise_commutes(grp.members[i], grp.members[j]));
  }
}

TEST(Grouping, CheckDetectsViolations) {
  const auto h = heisenberg_ring(4);
  const std::vector<PauliSum> sums{h};
  auto g = group_tpb(h);
  EXPECT_EQ(check_grouping(g, sums), "");
  auto missing = g;
  missing.groups.back().members.pop_back();
  EXPECT_NE(check_grouping(missing, sums), "");
  auto clash = g;
  clash.groups.front().members.push_back(parse_pauli_string("YYII"));
  clash.groups.front().members.push_back(parse_pauli_string("XXII"));
  EXPECT_NE(check_grouping(clash, sums), "");
}

TEST(Grouping, HeisenbergHamiltonianNeedsThreeBases) {
  const auto g = group_tpb(heisenberg_ring(8));
  EXPECT_EQ(g.groups.size(), 3u);
  EXPECT_EQ(g.term_count(), 24u);
}

TEST(Grouping, TwelveQubitPowersRegression) {
  const auto hk = powers(heisenberg_ring(12), 4);
  const auto g = group_tpb(hk);
  EXPECT_EQ(check_grouping(g, hk), "");
  EXPECT_EQ(g.groups.size(), 1018u);
  const auto j = to_json(g);
  EXPECT_EQ(j.at("groups").size(), 1018u);
}

TEST(Sampling, ExactModeMatchesExpectation) {
  const int q = 6;
  const auto hk = powers(heisenberg_ring(q), 5);
  const auto g = group_tpb(hk);
  const auto psi = random_rvb(q, 2, 3);
  const auto exact = exact_moments(hk, psi);
  const auto sv = sample_moments(hk, g, psi, {});
  const auto dm = sample_moments(hk, g, psi.to_density_matrix(), {});
  for (int k = 1; k <= 5; ++k) {
    EXPECT_NEAR(sv[k], exact[k], 1e-12);
    EXPECT_NEAR(dm[k], exact[k], 1e-12);
    EXPECT_NEAR(exact[k], expectation_exact(hk[static_cast<std::size_t>(k - 1)], psi), 1e-14);
  }
  const auto rep = statevector_moments(heisenberg_ring(q), psi.data(), 5);
  for (int k = 1; k <= 5; ++k) EXPECT_NEAR(rep[k], exact[k], 1e-13);
}

TEST(Sampling, ReadoutFlipDampsByWeight) {
  const int q = 4;
  const auto hk = powers(heisenberg_ring(q), 3);
  const auto g = group_tpb(hk);
  const auto psi = random_rvb(q, 1, 4);
  const double f = 0.05;
  const auto m = sample_moments(hk, g, psi, {std::nullopt, f});
  for (int k = 1; k <= 3; ++k) {
    double ref = 0;
    for (const auto& t : hk[static_cast<std::size_t>(k - 1)].terms())
      ref += (t.coeff * expectation(t.op, psi.data())).real() * std::pow(1 - 2 * f, std::popcount(t.op.support()));
    EXPECT_NEAR(m[k], ref, 1e-13) << k;
  }
}

TEST(Sampling, SeededAndThreadIndependent) {
  const int q = 6;
  const auto hk = powers(heisenberg_ring(q), 4);
  const auto g = group_tpb(hk);
  const auto psi = random_rvb(q, 1, 5);
  const SamplingOptions o{ShotPlan{500, 9}, 0.0};
  set_num_threads(1);
  const auto a = sample_moments(hk, g, psi, o);
  set_num_threads(3);
  const auto b = sample_moments(hk, g, psi, o);
  set_num_threads(0);
  EXPECT_EQ(a.values, b.values);
  EXPECT_EQ(a.std_errs, b.std_errs);
  const auto c = sample_moments(hk, g, psi, {ShotPlan{500, 10}, 0.0});
  EXPECT_NE(a.values, c.values);
}

TEST(Sampling, UnbiasedWithinStandardErrors) {
  const int q = 4;
  const auto hk = powers(heisenberg_ring(q), 4);
  const auto g = group_tpb(hk);
  const auto psi = random_rvb(q, 2, 6);
  const auto exact = exact_moments(hk, psi);
  const auto m = sample_moments(hk, g, psi, {ShotPlan{20000, 1}, 0.0});
  for (int k = 1; k <= 4; ++k) {
    ASSERT_GT(m.std_errs[static_cast<std::size_t>(k - 1)], 0.0);
    EXPECT_LT(std::abs(m[k] - exact[k]), 5 * m.std_errs[static_cast<std::size_t>(k - 1)]) << k;
  }
}

TEST(Sampling, RejectsBadInputs) {
  EXPECT_THROW((ShotPlan{0, 1}.validate()), std::invalid_argument);
  const auto hk = powers(heisenberg_ring(4), 2);
  const auto g = group_tpb(hk[0]);
  const auto psi = random_rvb(4, 0, 1);
  EXPECT_THROW((void)sample_moments(hk, g, psi, {}), std::invalid_argument);
  EXPECT_THROW((void)sample_moments(hk, group_tpb(hk), psi, {std::nullopt, 0.7}), std::invalid_argument);
}
