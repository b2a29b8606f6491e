// Acceptance checks: one PASS/FAIL line per criterion. Arguments select a
// subset by number; no arguments runs all ten. Exit status is 1 if any fails.

#include <fmt/core.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "qcm/ansatz.hpp"
#include "qcm/estimators.hpp"
#include "qcm/experiment.hpp"
#include "qcm/hamiltonian.hpp"
#include "qcm/measure.hpp"
#include "qcm/sim.hpp"
#include "qcm/vqe.hpp"
#include "qcm/whitenoise.hpp"

using namespace qcm;

namespace {

// Pinned tolerances and budgets.
constexpr std::size_t kH4Terms = 282796;
constexpr double kH4Budget = 60;
constexpr std::size_t kMaxGroups = 2500;
constexpr double kGroupBudget = 120;
constexpr int kTwoLevelPairs = 500;
constexpr double kTwoLevelTol = 1e-9;
constexpr double kWorkedCaseTol = 1e-15;
constexpr double kTwoLevelBudget = 1;
constexpr double kVarDevTol = 0.01;
constexpr double kCmxDevTol = 0.05;
constexpr double kSpreadFraction = 0.10;
constexpr double kDoublingTol = 0.30;
constexpr double kWhiteNoiseBudget = 1;
constexpr double kVqeErr = 0.05;
constexpr double kVqeBudget = 30 * 60;
constexpr double kFig3VarFraction = 0.90;
constexpr double kFig3CmxFraction = 0.80;
constexpr double kFig3Budget = 10 * 60;
constexpr double kHtTol = 1e-9;
constexpr double kHtBudget = 2 * 60;
constexpr double kSlope = -0.5;
constexpr double kSlopeTol = 0.1;
constexpr double kExactSamplingTol = 1e-10;
constexpr double kSamplingBudget = 5 * 60;
constexpr double kMixTol = 1e-9;
constexpr int kMixPairs = 100;
constexpr double kMixBudget = 60;
constexpr double kAlphaMin = 0.05;
constexpr double kAlphaBudget = 20 * 60;

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string budget(double seconds, double limit) { return fmt::format("t={:.2f}s (<= {:.0f}s)", seconds, limit); }

// ---- 1 -------------------------------------------------------------------

Outcome h4_term_count() {
  const auto t0 = Clock::now();
  const auto hk = powers(heisenberg_ring(20), 4);
  const double t = since(t0);
  const auto n = hk[3].size();
  return {n == kH4Terms && t <= kH4Budget, fmt::format("H^4 terms={} (want {}) {}", n, kH4Terms, budget(t, kH4Budget))};
}

// ---- 2 -------------------------------------------------------------------

Outcome tpb_grouping() {
  const auto hk = powers(heisenberg_ring(20), 4);
  const auto t0 = Clock::now();
  const auto g = group_tpb(hk);
  const double t = since(t0);
  const auto problem = check_grouping(g, hk);
  return {g.groups.size() <= kMaxGroups && problem.empty() && t <= kGroupBudget,
          fmt::format("groups={} (<= {}) check={} {}", g.groups.size(), kMaxGroups, problem.empty() ? "ok" : problem,
                      budget(t, kGroupBudget))};
}

// ---- 3 -------------------------------------------------------------------

using C = std::complex<double>;

// Moments <psi|h^k|psi> of a 2x2 Hermitian h = [[a, b], [b*, d]].
MomentSet two_level_moments(double a, C b, double d, C u, C v) {
  C m00 = 1, m01 = 0, m10 = 0, m11 = 1;
  MomentSet m;
  for (int k = 1; k <= 5; ++k) {
    const C n00 = m00 * a + m01 * std::conj(b), n01 = m00 * b + m01 * d;
    const C n10 = m10 * a + m11 * std::conj(b), n11 = m10 * b + m11 * d;
    m00 = n00, m01 = n01, m10 = n10, m11 = n11;
    m.values.push_back((std::conj(u) * (m00 * u + m01 * v) + std::conj(v) * (m10 * u + m11 * v)).real());
  }
  return m;
}

Outcome two_level_exactness() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(20220101);
  std::normal_distribution<double> n;
  double worst = 0;
  int flagged = 0;
  for (int i = 0; i < kTwoLevelPairs; ++i) {
    const double a = n(rng), d = n(rng);
    const C b{n(rng), n(rng)};
    C u{n(rng), n(rng)}, v{n(rng), n(rng)};
    const double norm = std::sqrt(std::norm(u) + std::norm(v));
    u /= norm, v /= norm;
    const double e0 = (a + d) / 2 - std::sqrt((a - d) * (a - d) / 4 + std::norm(b));
    const auto e = lanczos4(cumulants(two_level_moments(a, b, d, u, v)));
    flagged += e.degenerate;
    worst = std::max(worst, std::abs(e.value - e0));
  }
  // Levels +-1 with weights 3/4 and 1/4, where cmx5 gives 13/14.
  const auto worked = lanczos4(cumulants(MomentSet{{0.5, 1, 0.5, 1, 0.5}, {}}));
  const double t = since(t0);
  const bool ok = worst <= kTwoLevelTol && flagged == 0 && std::abs(worked.value + 1) <= kWorkedCaseTol &&
                  t <= kTwoLevelBudget;
  return {ok, fmt::format("max|lanczos4-E0|={:.2e} over {} pairs (<= {:.0e}) flagged={} worked={:.17g} {}", worst,
                          kTwoLevelPairs, kTwoLevelTol, flagged, worked.value, budget(t, kTwoLevelBudget))};
}

// ---- 4 -------------------------------------------------------------------

Outcome white_noise_cancellation() {
  const auto t0 = Clock::now();
  const OscillatorSpectrum spec{-1.0, 1e-3, std::uint64_t{1} << 20};
  const auto grid = default_p_grid();
  const auto table = cancellation_experiment(spec, grid, MomentModel::exact);
  const double n = static_cast<double>(spec.num_levels);
  const double slope = std::abs(spec.ground_energy) + spec.gap * (n - 1) / 2;
  double var_dev = 0, cmx_dev = 0;
  for (const auto& r : table.rows) {
    const double want = r.p * slope;
    var_dev = std::max(var_dev, std::abs((r.variational - spec.ground_energy) / want - 1));
    cmx_dev = std::max(cmx_dev, std::abs((r.cmx5 - spec.ground_energy) / (want / 3) - 1));
  }
  const double spread_ratio = table.lanczos4_spread / table.lanczos4_offset;
  const auto doubled = cancellation_experiment({spec.ground_energy, spec.gap, 2 * spec.num_levels}, grid);
  const double halving = doubled.lanczos4_spread / table.lanczos4_spread;
  const double t = since(t0);

  const auto first = cancellation_experiment(spec, grid, MomentModel::first_order);
  const auto first2 =
      cancellation_experiment({spec.ground_energy, spec.gap, 2 * spec.num_levels}, grid, MomentModel::first_order);
  fmt::print("  info: first-order model spread/offset={:.4f} N-doubling ratio={:.4f}\n",
             first.lanczos4_spread / first.lanczos4_offset, first2.lanczos4_spread / first.lanczos4_spread);

  const bool ok = var_dev <= kVarDevTol && cmx_dev <= kCmxDevTol && spread_ratio < kSpreadFraction &&
                  std::abs(halving - 0.5) <= kDoublingTol * 0.5 && t <= kWhiteNoiseBudget;
  return {ok, fmt::format("exact sums: var dev rel={:.2e} (<= {}) cmx5 dev rel={:.2e} (<= {}) "
                          "spread/offset={:.4g} (< {}) N-doubling ratio={:.4f} (0.5 +- 30%) {}",
                          var_dev, kVarDevTol, cmx_dev, kCmxDevTol, spread_ratio, kSpreadFraction, halving,
                          budget(t, kWhiteNoiseBudget))};
}

// ---- 5 -------------------------------------------------------------------

Outcome vqe_quality() {
  const auto t0 = Clock::now();
  const auto h = heisenberg_ring(12);
  const double e0 = exact_ground(h).energy;
  const auto curve = convergence_curve(h, 7, OptimizeConfig{}, e0, "uniform");
  const double t = since(t0);
  bool ok = t <= kVqeBudget;
  std::string detail;
  for (const auto& p : curve) {
    const double ev = *p.report.err_variational(), el = *p.report.err_lanczos4();
    if (p.run.depth >= 4 && !(ev < kVqeErr)) ok = false;
    if (!(el <= ev)) ok = false;
    detail += fmt::format(" D{}:{:.4f}/{:.4f}", p.run.depth, ev, el);
  }
  return {ok, fmt::format("err var/lanczos4{} (D>=4 var < {}, lanczos4 <= var) {}", detail, kVqeErr,
                          budget(t, kVqeBudget))};
}

// ---- 6 -------------------------------------------------------------------

Outcome fig3_robustness() {
  const auto t0 = Clock::now();
  auto o = default_config(ExperimentKind::fig3).fig3;
  o.num_qubits = 6;
  o.hamiltonian = Fig3Hamiltonian::heisenberg;
  o.channel = LocalChannel::depolarize;
  const auto cells = fig3_grid(o);
  const double t = since(t0);
  int beat_var = 0, beat_cmx = 0;
  for (const auto& c : cells) {
    const auto ev = c.report.err_variational(), el = c.report.err_lanczos4(), ec = c.report.err_cmx5();
    if (el && ev && *el < *ev) ++beat_var;
    if (el && ec && *el < *ec) ++beat_cmx;
  }
  const double n = static_cast<double>(cells.size());
  const double fv = beat_var / n, fc = beat_cmx / n;
  return {fv >= kFig3VarFraction && fc >= kFig3CmxFraction && t <= kFig3Budget,
          fmt::format("cells={} lanczos4<var {:.1f}% (>= {:.0f}%) lanczos4<cmx5 {:.1f}% (>= {:.0f}%) {}", cells.size(),
                      100 * fv, 100 * kFig3VarFraction, 100 * fc, 100 * kFig3CmxFraction, budget(t, kFig3Budget))};
}

// ---- 7 -------------------------------------------------------------------

Outcome ht_benchmark() {
  const auto t0 = Clock::now();
  double worst = 0;
  for (int q : {2, 4, 6, 8}) {
    const auto hk = powers(heisenberg_ring(q), 4);
    const auto ht = ht_limit(hk, HtEstimator::lanczos4);
    const auto m = sample_moments(hk, group_tpb(hk), QuantumState::maximally_mixed(q), {});
    const auto piped = lanczos4(cumulants(m));
    worst = std::max(worst, std::abs(piped.value - ht.value) / std::max(1.0, std::abs(ht.value)));
  }

  auto cfg = default_config(ExperimentKind::fig2b);
  cfg.num_qubits = 8;
  cfg.max_depth = 3;
  cfg.ensemble_count = 3;
  cfg.optimizer.restarts = 1;
  cfg.output_dir = std::filesystem::temp_directory_path() / "qcm_acceptance_ht";
  const auto cells = ht_advantage_map(cfg);
  const auto below = std::count_if(cells.begin(), cells.end(), [](const HtCell& c) { return c.below; });
  const double t = since(t0);
  return {worst <= kHtTol && below == static_cast<long>(cells.size()) && t <= kHtBudget,
          fmt::format("identity vs pipeline max rel diff={:.2e} (<= {:.0e}, q=2..8) map cells true {}/{} (q=8) {}",
                      worst, kHtTol, below, cells.size(), budget(t, kHtBudget))};
}

// ---- 8 -------------------------------------------------------------------

QuantumState random_rvb(int q, int depth, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0, 2 * M_PI);
  std::vector<double> theta(static_cast<std::size_t>(q * depth));
  for (auto& x : theta) x = u(rng);
  return apply_circuit(rvb_circuit(q, depth, theta), QuantumState::zero(q));
}

double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) sx += x[i], sy += y[i], sxx += x[i] * x[i], sxy += x[i] * y[i];
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

Outcome sampling_statistics() {
  const auto t0 = Clock::now();
  const int q = 6, order = 4, reps = 40;
  const auto hk = powers(heisenberg_ring(q), order);
  const auto g = group_tpb(hk);
  const auto psi = random_rvb(q, 2, 8);
  const auto exact = exact_moments(hk, psi);
  const std::vector<int> shots{64, 256, 1024, 4096, 16384};
  std::vector<double> lx;
  std::vector<std::vector<double>> ly(order);
  for (int s : shots) {
    lx.push_back(std::log(s));
    std::vector<double> sq(order, 0.0);
    for (int r = 0; r < reps; ++r) {
      const auto m = sample_moments(hk, g, psi, {ShotPlan{s, static_cast<std::uint64_t>(1000 * s + r)}, 0.0});
      for (int k = 1; k <= order; ++k) sq[static_cast<std::size_t>(k - 1)] += std::pow(m[k] - exact[k], 2);
    }
    for (int k = 0; k < order; ++k) ly[static_cast<std::size_t>(k)].push_back(0.5 * std::log(sq[static_cast<std::size_t>(k)] / reps));
  }
  bool ok = true;
  std::string slopes;
  for (int k = 0; k < order; ++k) {
    const double s = fit_slope(lx, ly[static_cast<std::size_t>(k)]);
    ok = ok && std::abs(s - kSlope) <= kSlopeTol;
    slopes += fmt::format(" k{}:{:.3f}", k + 1, s);
  }

  double worst = 0;
  for (int qq : {6, 8}) {
    const auto hq = powers(heisenberg_ring(qq), 5);
    const auto gq = group_tpb(hq);
    const auto state = random_rvb(qq, 2, 9);
    for (const auto& st : {state, state.to_density_matrix()}) {
      const auto m = sample_moments(hq, gq, st, {});
      for (int k = 1; k <= 5; ++k)
        worst = std::max(worst, std::abs(m[k] - expectation_exact(hq[static_cast<std::size_t>(k - 1)], st)) /
                                    std::max(1.0, std::abs(m[k])));
    }
  }
  const double t = since(t0);
  ok = ok && worst <= kExactSamplingTol && t <= kSamplingBudget;
  return {ok, fmt::format("RMS log-log slopes{} ({} +- {}) exact-mode max rel diff={:.2e} (<= {:.0e}) {}", slopes, kSlope,
                          kSlopeTol, worst, kExactSamplingTol, budget(t, kSamplingBudget))};
}

// ---- 9 -------------------------------------------------------------------

QuantumState random_mixed(int q, std::mt19937_64& rng) {
  const std::size_t dim = std::size_t{1} << q;
  std::normal_distribution<double> n;
  std::vector<Complex> g(dim * dim), rho(dim * dim);
  for (auto& x : g) x = {n(rng), n(rng)};
  double tr = 0;
  for (std::size_t r = 0; r < dim; ++r) {
    for (std::size_t c = 0; c < dim; ++c) {
      Complex s = 0;
      for (std::size_t j = 0; j < dim; ++j) s += g[r * dim + j] * std::conj(g[c * dim + j]);
      rho[r * dim + c] = s;
    }
    tr += rho[r * dim + r].real();
  }
  for (auto& x : rho) x /= tr;
  return QuantumState::from_density_matrix(q, std::move(rho));
}

Outcome mixing_identity() {
  const auto t0 = Clock::now();
  const int q = 4;
  const auto hk = powers(heisenberg_ring(q), 5);
  const auto ht = ht_limit(hk, HtEstimator::lanczos4);
  std::vector<double> traces;
  for (const auto& h : hk) traces.push_back(identity_coefficient(h));
  std::mt19937_64 rng(55);
  std::uniform_real_distribution<double> up(0, 1);
  double worst = 0;
  int flag_mismatch = 0;
  auto diff = [](double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); };
  for (int i = 0; i < kMixPairs; ++i) {
    const auto rho = random_mixed(q, rng);
    const double p = up(rng);
    const auto piped = make_report(exact_moments(hk, channel_global(rho, p)), ht.value, std::nullopt);
    const auto clean = exact_moments(hk, rho);
    MomentSet mixed;
    for (int k = 1; k <= 5; ++k) mixed.values.push_back((1 - p) * clean[k] + p * traces[static_cast<std::size_t>(k - 1)]);
    const auto ref = make_report(mixed, ht.value, std::nullopt);
    worst = std::max({worst, diff(piped.variational, ref.variational), diff(piped.lanczos4, ref.lanczos4)});
    if (piped.cmx5 && ref.cmx5) worst = std::max(worst, diff(*piped.cmx5, *ref.cmx5));
    flag_mismatch += piped.lanczos4_degenerate != ref.lanczos4_degenerate || piped.cmx5.has_value() != ref.cmx5.has_value();
  }
  const double t = since(t0);
  return {worst <= kMixTol && flag_mismatch == 0 && t <= kMixBudget,
          fmt::format("{} pairs max rel diff={:.2e} (<= {:.0e}) flag mismatches={} {}", kMixPairs, worst, kMixTol,
                      flag_mismatch, budget(t, kMixBudget))};
}

// ---- 10 ------------------------------------------------------------------

Outcome alpha_ordering() {
  const auto t0 = Clock::now();
  const auto cfg = default_config(ExperimentKind::fig4);
  const auto h = heisenberg_ring(8);
  const double e0 = exact_ground(h).energy;
  const auto curve = convergence_curve(h, cfg.max_depth, cfg.optimizer, e0, "uniform");
  std::vector<OptimizationRun> runs;
  for (const auto& p : curve) runs.push_back(p.run);
  const auto points = alpha_sweep(h, runs, cfg.alphas, cfg.noise.device, std::nullopt, e0);
  const double t = since(t0);
  bool ok = t <= kAlphaBudget;
  std::string detail;
  for (int d = 0; d <= cfg.max_depth; ++d) {
    std::optional<double> l4_full;
    double var_min = INFINITY;
    for (const auto& pt : points) {
      if (pt.depth != d) continue;
      if (pt.alpha == 1.0) l4_full = pt.report.err_lanczos4();
      if (pt.alpha >= kAlphaMin) var_min = std::min(var_min, *pt.report.err_variational());
    }
    const bool cell = l4_full && *l4_full < var_min;
    ok = ok && cell;
    detail += fmt::format(" D{}:{:.4f}<{:.4f}{}", d, l4_full.value_or(NAN), var_min, cell ? "" : "!");
  }
  return {ok, fmt::format("err lanczos4(alpha=1) < min err var(alpha>={}):{} {}", kAlphaMin, detail,
                          budget(t, kAlphaBudget))};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"H4 term count", h4_term_count},
      {"TPB grouping", tpb_grouping},
      {"two-level exactness", two_level_exactness},
      {"white-noise cancellation", white_noise_cancellation},
      {"zero-noise VQE quality", vqe_quality},
      {"noise robustness", fig3_robustness},
      {"high-temperature limit", ht_benchmark},
      {"sampling statistics", sampling_statistics},
      {"global-noise mixing identity", mixing_identity},
      {"alpha-sweep ordering", alpha_ordering},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i + 1);
    if (!selected.empty() && !selected.contains(id)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, fmt::format("exception: {}", e.what())};
    }
    failures += !o.pass;
    fmt::print("criterion {:>2} {} [{}] {}\n", id, o.pass ? "PASS" : "FAIL", criteria[i].first, o.detail);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
