#pragma once

#include <span>
#include <string>
#include <vector>

#include "qcm/estimators.hpp"
#include "qcm/hamiltonian.hpp"

namespace qcm {

/// Equally spaced N-level spectrum whose ground state is mixed with the
/// maximally mixed state: rho = (1 - p) |E0><E0| + p I / N.
struct WhiteNoiseScenario {
  OscillatorSpectrum spec;
  double p = 0.0;

  /// Throws std::invalid_argument unless p is in [0, 1], N >= 1 and gap >= 0.
  void validate() const;
};

/// m_k = (1 - p) E0^k + (p / N) tr(H^k) with closed-form trace sums.
[[nodiscard]] BasicMomentSet<long double> noisy_moments_exact(const WhiteNoiseScenario& s, int max_order);

/// The linearized model m_k = E0^k (1 - p + (p/2) N k gap / E0), which keeps
/// only the leading term of tr(H^k) in gap / E0.
[[nodiscard]] BasicMomentSet<long double> noisy_moments_first_order(const WhiteNoiseScenario& s, int max_order);

/// Cumulants of the exact noisy moments, computed from moments about E0 so
/// that the large common offset never enters the recursion.
[[nodiscard]] BasicCumulantSet<long double> noisy_cumulants_exact(const WhiteNoiseScenario& s, int max_order);

struct AsymptoticEstimates {
  double variational = 0.0;
  double cmx5 = 0.0;
  double lanczos4 = 0.0;
};

/// Large-N closed forms:
///   variational  E0 + p (|E0| + gap N / 2)
///   cmx5         E0 + (p / 3) (|E0| + gap N / 2)
///   lanczos4     E0 + sqrt(2 |E0|^3 / (gap N))
/// Throws std::invalid_argument unless E0 < 0 and gap > 0.
[[nodiscard]] AsymptoticEstimates asymptotic_estimates(const WhiteNoiseScenario& s);

enum class MomentModel { exact, first_order };

struct CancellationRow {
  double p = 0.0;
  double variational = 0.0;
  double cmx5 = 0.0;
  double lanczos4 = 0.0;
  bool cmx5_degenerate = false;
  bool lanczos4_degenerate = false;
};

struct CancellationTable {
  OscillatorSpectrum spec;
  MomentModel model = MomentModel::exact;
  std::vector<CancellationRow> rows;
  /// max - min of lanczos4 over the grid.
  double lanczos4_spread = 0.0;
  /// sqrt(2 |E0|^3 / (gap N)), the large-N lanczos4 offset.
  double lanczos4_offset = 0.0;
  /// Set for a flat spectrum (gap = 0), where every state is a ground state.
  bool degenerate_input = false;
};

[[nodiscard]] CancellationTable cancellation_experiment(const OscillatorSpectrum& spec, std::span<const double> p_grid,
                                                        MomentModel model = MomentModel::exact);

/// Columns: p, variational, cmx5, lanczos4, dev_variational, dev_cmx5,
/// dev_lanczos4, flags (deviations are estimate - E0).
[[nodiscard]] std::string to_csv(const CancellationTable& t);

/// {0.01, 0.02, ..., 0.50}.
[[nodiscard]] std::vector<double> default_p_grid();

}  // namespace qcm
