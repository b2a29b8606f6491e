#include "qcm/estimators.hpp"

#include <algorithm>

#include <fmt/format.h>
#include <fmt/ranges.h>

namespace qcm {
namespace {

// dc_n / dm_j from differentiating the cumulant recursion, m_0 = 1 fixed.
std::vector<std::vector<double>> cumulant_jacobian(const MomentSet& m, const CumulantSet& c) {
  const int k_max = m.order();
  std::vector<std::vector<double>> jac(static_cast<std::size_t>(k_max + 1),
                                       std::vector<double>(static_cast<std::size_t>(k_max + 1), 0.0));
  auto moment = [&](int k) { return k == 0 ? 1.0 : m[k]; };
  for (int n = 1; n <= k_max; ++n) {
    for (int j = 1; j <= k_max; ++j) {
      double d = (n == j) ? 1.0 : 0.0;
      for (int p = 0; p <= n - 2; ++p) {
        const double b = detail::binomial(n - 1, p);
        d -= b * jac[static_cast<std::size_t>(p + 1)][static_cast<std::size_t>(j)] * moment(n - 1 - p);
        if (n - 1 - p == j) d -= b * c[p + 1];
      }
      jac[static_cast<std::size_t>(n)][static_cast<std::size_t>(j)] = d;
    }
  }
  return jac;
}

template <class F>
std::vector<double> moment_gradient(const MomentSet& m, int order, F estimator) {
  const CumulantSet c = cumulants(m);
  std::vector<double> grad(static_cast<std::size_t>(m.order()), 0.0);
  if (estimator(c).degenerate) {
    grad[0] = 1.0;
    return grad;
  }
  std::vector<double> dc(static_cast<std::size_t>(order + 1), 0.0);
  dc[1] = 1.0;
  const double width = std::sqrt(std::max(c[2], 0.0));
  for (int k = 2; k <= order; ++k) {
    const double h = 1e-5 * std::pow(width, k);
    CumulantSet up = c, down = c;
    up.values[static_cast<std::size_t>(k - 1)] += h;
    down.values[static_cast<std::size_t>(k - 1)] -= h;
    const auto eu = estimator(up);
    const auto ed = estimator(down);
    dc[static_cast<std::size_t>(k)] = (eu.degenerate || ed.degenerate) ? 0.0 : (eu.value - ed.value) / (2 * h);
  }
  const auto jac = cumulant_jacobian(m, c);
  for (int j = 1; j <= m.order(); ++j) {
    double g = 0;
    for (int n = 1; n <= order; ++n)
      g += dc[static_cast<std::size_t>(n)] * jac[static_cast<std::size_t>(n)][static_cast<std::size_t>(j)];
    grad[static_cast<std::size_t>(j - 1)] = g;
  }
  return grad;
}

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt::format("{:.17g}", *v) : std::string("nan"); }

}  // namespace

Estimate<double> ht_limit(std::span<const PauliSum> powers, HtEstimator estimator) {
  if (powers.size() < 4) throw std::invalid_argument("high-temperature limit needs H^1 .. H^4");
  MomentSet m;
  for (std::size_t k = 0; k < 4; ++k) m.values.push_back(identity_coefficient(powers[k]));
  if (estimator == HtEstimator::variational) return {m[1], false};
  return lanczos4(cumulants(m));
}

std::vector<double> lanczos4_gradient(const MomentSet& m) {
  detail::check_order(m.order(), 4, "lanczos4");
  return moment_gradient(m, 4, [](const CumulantSet& c) { return lanczos4(c); });
}

std::vector<double> cmx5_gradient(const MomentSet& m) {
  detail::check_order(m.order(), 5, "cmx5");
  return moment_gradient(m, 5, [](const CumulantSet& c) { return cmx5(c); });
}

double propagate_error(const MomentSet& m, std::span<const double> gradient) {
  if (m.std_errs.empty()) return 0.0;
  double v = 0;
  for (std::size_t k = 0; k < gradient.size() && k < m.std_errs.size(); ++k) {
    const double t = gradient[k] * m.std_errs[k];
    v += t * t;
  }
  return std::sqrt(v);
}

std::optional<double> EstimateReport::err_variational() const {
  if (!e0) return std::nullopt;
  return approx_error(variational, *e0);
}

std::optional<double> EstimateReport::err_lanczos4() const {
  if (!e0) return std::nullopt;
  return approx_error(lanczos4, *e0);
}

std::optional<double> EstimateReport::err_cmx5() const {
  if (!e0 || !cmx5) return std::nullopt;
  return approx_error(*cmx5, *e0);
}

std::string EstimateReport::flags() const {
  std::vector<std::string> raised;
  if (lanczos4_degenerate) raised.emplace_back("lanczos4_degenerate");
  if (cmx5_degenerate) raised.emplace_back("cmx5_degenerate");
  if (ht_degenerate) raised.emplace_back("ht_degenerate");
  return raised.empty() ? "none" : fmt::format("{}", fmt::join(raised, ";"));
}

EstimateReport make_report(const MomentSet& m, double ht_lanczos4, std::optional<double> e0, bool ht_degenerate) {
  detail::check_order(m.order(), 4, "estimate report");
  const CumulantSet c = cumulants(m);
  EstimateReport r;
  r.variational = m[1];
  const auto l4 = lanczos4(c);
  r.lanczos4 = l4.value;
  r.lanczos4_degenerate = l4.degenerate;
  if (m.order() >= 5) {
    const auto x5 = cmx5(c);
    r.cmx5 = x5.value;
    r.cmx5_degenerate = x5.degenerate;
  }
  r.ht_lanczos4 = ht_lanczos4;
  r.ht_degenerate = ht_degenerate;
  r.e0 = e0;
  if (!m.std_errs.empty()) {
    r.sigma_variational = m.std_errs.at(0);
    r.sigma_lanczos4 = propagate_error(m, lanczos4_gradient(m));
    if (m.order() >= 5) r.sigma_cmx5 = propagate_error(m, cmx5_gradient(m));
  }
  return r;
}

nlohmann::json to_json(const EstimateReport& r) {
  nlohmann::json j{{"variational", r.variational},
                   {"lanczos4", r.lanczos4},
                   {"ht_lanczos4", r.ht_lanczos4},
                   {"sigma_variational", r.sigma_variational},
                   {"sigma_lanczos4", r.sigma_lanczos4},
                   {"degenerate", {{"lanczos4", r.lanczos4_degenerate}, {"cmx5", r.cmx5_degenerate},
                                   {"ht_lanczos4", r.ht_degenerate}}}};
  if (r.cmx5) j["cmx5"] = *r.cmx5;
  if (r.sigma_cmx5) j["sigma_cmx5"] = *r.sigma_cmx5;
  if (r.e0) {
    j["e0"] = *r.e0;
    j["approx_errors"] = {{"variational", *r.err_variational()}, {"lanczos4", *r.err_lanczos4()}};
    if (r.cmx5) j["approx_errors"]["cmx5"] = *r.err_cmx5();
  }
  return j;
}

std::string estimate_csv_header() {
  return "instance_id,D,n_cx,variational,lanczos4,cmx5,ht_lanczos4,err_variational,err_lanczos4,flags,e0";
}

std::string estimate_csv_row(const CsvRowKey& key, const EstimateReport& r) {
  return fmt::format("{},{},{},{:.17g},{:.17g},{},{:.17g},{},{},{},{}", key.instance_id, key.depth, key.n_cx,
                     r.variational, r.lanczos4, fmt_opt(r.cmx5), r.ht_lanczos4, fmt_opt(r.err_variational()),
                     fmt_opt(r.err_lanczos4()), r.flags(), fmt_opt(r.e0));
}

}  // namespace qcm
