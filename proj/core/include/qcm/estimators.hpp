#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qcm/pauli.hpp"

namespace qcm {

inline constexpr int kMaxMomentOrder = 5;

/// Relative tolerance for the cancellations that make the estimators 0/0.
inline constexpr double kDegenerateTol = 1e-12;

/// m_k = <H^k> for k = 1 .. K, stored at index k - 1.
template <class T>
struct BasicMomentSet {
  std::vector<T> values;
  /// Per-moment standard errors; empty when the moments are exact.
  std::vector<T> std_errs;

  [[nodiscard]] int order() const { return static_cast<int>(values.size()); }
  [[nodiscard]] T operator[](int k) const { return values.at(static_cast<std::size_t>(k - 1)); }
};

template <class T>
struct BasicCumulantSet {
  std::vector<T> values;

  [[nodiscard]] int order() const { return static_cast<int>(values.size()); }
  [[nodiscard]] T operator[](int k) const { return values.at(static_cast<std::size_t>(k - 1)); }
};

using MomentSet = BasicMomentSet<double>;
using CumulantSet = BasicCumulantSet<double>;

template <class T>
struct Estimate {
  T value{};
  bool degenerate = false;
};

namespace detail {

inline double binomial(int n, int k) {
  double r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

inline void check_order(int k, int lo, std::string_view what) {
  if (k < lo || k > kMaxMomentOrder)
    throw std::invalid_argument(std::string(what) + " needs between " + std::to_string(lo) + " and " +
                                std::to_string(kMaxMomentOrder) + " moments, got " + std::to_string(k));
}

}  // namespace detail

/// c_n = m_n - sum_{p=0}^{n-2} C(n-1, p) c_{p+1} m_{n-1-p}.
template <class T>
[[nodiscard]] BasicCumulantSet<T> cumulants(const BasicMomentSet<T>& m) {
  detail::check_order(m.order(), 1, "cumulants");
  const int k_max = m.order();
  BasicCumulantSet<T> c;
  c.values.resize(static_cast<std::size_t>(k_max));
  for (int n = 1; n <= k_max; ++n) {
    T v = m[n];
    for (int p = 0; p <= n - 2; ++p) v -= T(detail::binomial(n - 1, p)) * c[p + 1] * m[n - 1 - p];
    c.values[static_cast<std::size_t>(n - 1)] = v;
  }
  return c;
}

namespace detail {

template <class T>
bool flat_distribution(T c1, T c2) {
  using std::abs;
  return !(c2 > T(kDegenerateTol) * (c1 * c1 + abs(c2)));
}

}  // namespace detail

/// E = c1 - c2^2 / (c3^2 - c2 c4) * (sqrt(3 c3^2 - 2 c2 c4) - c3), evaluated
/// as c1 - 2 c2^2 / (sqrt(3 c3^2 - 2 c2 c4) + c3), which has no pole where
/// c3^2 = c2 c4. Returns c1 flagged as degenerate when c2 vanishes relative to
/// m2, when the radicand is negative, or when sqrt(radicand) + c3 cancels to
/// within kDegenerateTol of its terms.
template <class T>
[[nodiscard]] Estimate<T> lanczos4(const BasicCumulantSet<T>& c) {
  using std::abs;
  using std::sqrt;
  detail::check_order(c.order(), 4, "lanczos4");
  const T c1 = c[1], c2 = c[2], c3 = c[3], c4 = c[4];
  if (detail::flat_distribution(c1, c2)) return {c1, true};
  const T radicand = 3 * c3 * c3 - 2 * c2 * c4;
  if (radicand < 0) return {c1, true};
  const T root = sqrt(radicand);
  const T denom = root + c3;
  if (abs(denom) <= T(kDegenerateTol) * (root + abs(c3))) return {c1, true};
  return {c1 - 2 * c2 * c2 / denom, false};
}

/// E = c1 - c2^2 / c3 - (c2 c4 - c3^2)^2 / (c3 (c3 c5 - c4^2)).
/// Returns c1 flagged as degenerate when c2 or c3 vanish on the scale of the
/// distribution width, or when c3 c5 - c4^2 cancels.
template <class T>
[[nodiscard]] Estimate<T> cmx5(const BasicCumulantSet<T>& c) {
  using std::abs;
  using std::pow;
  detail::check_order(c.order(), 5, "cmx5");
  const T c1 = c[1], c2 = c[2], c3 = c[3], c4 = c[4], c5 = c[5];
  if (detail::flat_distribution(c1, c2)) return {c1, true};
  if (abs(c3) <= T(kDegenerateTol) * pow(c2, T(1.5))) return {c1, true};
  const T denom = c3 * c5 - c4 * c4;
  if (abs(denom) <= T(kDegenerateTol) * (abs(c3 * c5) + c4 * c4)) return {c1, true};
  const T num = c2 * c4 - c3 * c3;
  return {c1 - c2 * c2 / c3 - num * num / (c3 * denom), false};
}

/// |1 - e / e0|. Throws std::invalid_argument for e0 = 0.
[[nodiscard]] inline double approx_error(double e, double e0) {
  if (e0 == 0.0) throw std::invalid_argument("approximation error needs a nonzero reference energy");
  return std::abs(1.0 - e / e0);
}

enum class HtEstimator { variational, lanczos4 };

/// Estimate on the maximally mixed state: m_k is the identity coefficient of
/// H^k. `powers` holds H^1 .. H^K with K >= 4.
[[nodiscard]] Estimate<double> ht_limit(std::span<const PauliSum> powers, HtEstimator estimator);

/// First-order error propagation from moment standard errors. Entry k - 1 of
/// the result is d estimate / d m_k; the cumulant Jacobian is exact and the
/// estimator gradient is taken by central differences in cumulant space.
[[nodiscard]] std::vector<double> lanczos4_gradient(const MomentSet& m);
[[nodiscard]] std::vector<double> cmx5_gradient(const MomentSet& m);

/// sqrt(sum_k (g_k s_k)^2); zero when `m` has no standard errors.
[[nodiscard]] double propagate_error(const MomentSet& m, std::span<const double> gradient);

struct EstimateReport {
  double variational = 0.0;
  double lanczos4 = 0.0;
  std::optional<double> cmx5;
  double ht_lanczos4 = 0.0;
  std::optional<double> e0;

  bool lanczos4_degenerate = false;
  bool cmx5_degenerate = false;
  bool ht_degenerate = false;

  double sigma_variational = 0.0;
  double sigma_lanczos4 = 0.0;
  std::optional<double> sigma_cmx5;

  [[nodiscard]] std::optional<double> err_variational() const;
  [[nodiscard]] std::optional<double> err_lanczos4() const;
  [[nodiscard]] std::optional<double> err_cmx5() const;
  /// "none", or the raised flags joined by ';'.
  [[nodiscard]] std::string flags() const;
};

/// All estimates from one moment set (K = 4 or 5).
[[nodiscard]] EstimateReport make_report(const MomentSet& m, double ht_lanczos4, std::optional<double> e0,
                                         bool ht_degenerate = false);

[[nodiscard]] nlohmann::json to_json(const EstimateReport& r);

struct CsvRowKey {
  std::string instance_id;
  int depth = 0;
  int n_cx = 0;
};

[[nodiscard]] std::string estimate_csv_header();
[[nodiscard]] std::string estimate_csv_row(const CsvRowKey& key, const EstimateReport& r);

}  // namespace qcm
