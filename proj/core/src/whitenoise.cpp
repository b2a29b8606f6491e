#include "qcm/whitenoise.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace qcm {
namespace {

// The first-order model has c2 < 0, so the guarded estimators would reject it;
// its comparison curve uses the closed forms as written.
Estimate<long double> lanczos4_unguarded(const BasicCumulantSet<long double>& c) {
  const long double radicand = 3 * c[3] * c[3] - 2 * c[2] * c[4];
  const long double denom = c[3] * c[3] - c[2] * c[4];
  if (radicand < 0 || denom == 0) return {c[1], true};
  return {c[1] - c[2] * c[2] / denom * (std::sqrt(radicand) - c[3]), false};
}

Estimate<long double> cmx5_unguarded(const BasicCumulantSet<long double>& c) {
  const long double denom = c[3] * c[5] - c[4] * c[4];
  if (c[3] == 0 || denom == 0) return {c[1], true};
  const long double num = c[2] * c[4] - c[3] * c[3];
  return {c[1] - c[2] * c[2] / c[3] - num * num / (c[3] * denom), false};
}

}  // namespace

void WhiteNoiseScenario::validate() const {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument(fmt::format("p = {} outside [0, 1]", p));
  if (spec.num_levels < 1) throw std::invalid_argument("oscillator needs at least one level");
  if (!(spec.gap >= 0.0)) throw std::invalid_argument(fmt::format("negative gap {}", spec.gap));
}

BasicMomentSet<long double> noisy_moments_exact(const WhiteNoiseScenario& s, int max_order) {
  s.validate();
  detail::check_order(max_order, 1, "noisy_moments_exact");
  const long double e0 = s.spec.ground_energy;
  const long double p = s.p;
  const auto n = static_cast<long double>(s.spec.num_levels);
  BasicMomentSet<long double> m;
  for (int k = 1; k <= max_order; ++k)
    m.values.push_back((1 - p) * std::pow(e0, k) + p / n * oscillator_trace(s.spec, k));
  return m;
}

BasicMomentSet<long double> noisy_moments_first_order(const WhiteNoiseScenario& s, int max_order) {
  s.validate();
  detail::check_order(max_order, 1, "noisy_moments_first_order");
  const long double e0 = s.spec.ground_energy;
  const long double p = s.p;
  const auto n = static_cast<long double>(s.spec.num_levels);
  const long double gap = s.spec.gap;
  BasicMomentSet<long double> m;
  for (int k = 1; k <= max_order; ++k) m.values.push_back(std::pow(e0, k) * (1 - p + p / 2 * n * k * gap / e0));
  return m;
}

BasicCumulantSet<long double> noisy_cumulants_exact(const WhiteNoiseScenario& s, int max_order) {
  s.validate();
  detail::check_order(max_order, 1, "noisy_cumulants_exact");
  const long double p = s.p;
  const auto n = static_cast<long double>(s.spec.num_levels);
  const long double gap = s.spec.gap;
  BasicMomentSet<long double> shifted;
  for (int k = 1; k <= max_order; ++k)
    shifted.values.push_back(p / n * std::pow(gap, k) * power_sum(k, s.spec.num_levels - 1));
  auto c = cumulants(shifted);
  c.values[0] += s.spec.ground_energy;
  return c;
}

AsymptoticEstimates asymptotic_estimates(const WhiteNoiseScenario& s) {
  s.validate();
  const double e0 = s.spec.ground_energy;
  const double gap = s.spec.gap;
  if (!(e0 < 0.0) || !(gap > 0.0)) throw std::invalid_argument("asymptotic forms need E0 < 0 and gap > 0");
  const double n = static_cast<double>(s.spec.num_levels);
  const double shift = std::abs(e0) + gap * n / 2;
  return {e0 + s.p * shift, e0 + s.p / 3 * shift, e0 + std::sqrt(2 * std::pow(std::abs(e0), 3) / (gap * n))};
}

CancellationTable cancellation_experiment(const OscillatorSpectrum& spec, std::span<const double> p_grid,
                                          MomentModel model) {
  if (p_grid.empty()) throw std::invalid_argument("empty p grid");
  CancellationTable t;
  t.spec = spec;
  t.model = model;
  t.degenerate_input = spec.gap == 0.0;
  t.lanczos4_offset = spec.gap > 0.0 && spec.ground_energy < 0.0
                          ? std::sqrt(2 * std::pow(std::abs(spec.ground_energy), 3) /
                                      (spec.gap * static_cast<double>(spec.num_levels)))
                          : 0.0;
  for (const double p : p_grid) {
    const WhiteNoiseScenario s{spec, p};
    const bool exact = model == MomentModel::exact;
    const BasicCumulantSet<long double> c = exact ? noisy_cumulants_exact(s, 5) : cumulants(noisy_moments_first_order(s, 5));
    const auto l4 = exact ? lanczos4(c) : lanczos4_unguarded(c);
    const auto x5 = exact ? cmx5(c) : cmx5_unguarded(c);
    t.rows.push_back({p, static_cast<double>(c[1]), static_cast<double>(x5.value), static_cast<double>(l4.value),
                      x5.degenerate, l4.degenerate});
  }
  const auto [lo, hi] = std::minmax_element(t.rows.begin(), t.rows.end(),
                                            [](const auto& a, const auto& b) { return a.lanczos4 < b.lanczos4; });
  t.lanczos4_spread = hi->lanczos4 - lo->lanczos4;
  return t;
}

std::string to_csv(const CancellationTable& t) {
  std::string out = "p,variational,cmx5,lanczos4,dev_variational,dev_cmx5,dev_lanczos4,flags\n";
  const double e0 = t.spec.ground_energy;
  for (const auto& r : t.rows) {
    std::string flags = t.degenerate_input ? "degenerate_input" : "";
    if (r.lanczos4_degenerate) flags += flags.empty() ? "lanczos4_degenerate" : ";lanczos4_degenerate";
    if (r.cmx5_degenerate) flags += flags.empty() ? "cmx5_degenerate" : ";cmx5_degenerate";
    out += fmt::format("{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{}\n", r.p, r.variational, r.cmx5,
                       r.lanczos4, r.variational - e0, r.cmx5 - e0, r.lanczos4 - e0, flags.empty() ? "none" : flags);
  }
  return out;
}

std::vector<double> default_p_grid() {
  std::vector<double> g;
  for (int i = 1; i <= 50; ++i) g.push_back(i / 100.0);
  return g;
}

}  // namespace qcm
