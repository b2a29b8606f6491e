#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qcm/estimators.hpp"
#include "qcm/pauli.hpp"
#include "qcm/sim.hpp"

namespace qcm {

/// One simultaneously measurable set. `basis` carries a letter on every qubit
/// some member touches; the remaining qubits are measured in Z.
struct TpbGroup {
  PauliString basis;
  std::vector<PauliString> members;
  /// Sum over members of |coefficient|, summed over every grouped sum.
  double coeff_l1 = 0.0;
};

struct TpbGrouping {
  int num_qubits = 0;
  std::vector<TpbGroup> groups;

  [[nodiscard]] std::size_t term_count() const;
};

/// Greedy first-fit grouping of the non-identity terms of `sums`, taken as a
/// union so a string shared by several sums is measured once. Terms are
/// visited by descending total weight sum_k |c_k| (ties in key order) and each
/// joins the first group whose basis agrees on their common support,
/// extending the basis on its identity slots.
[[nodiscard]] TpbGrouping group_tpb(std::span<const PauliSum> sums);
[[nodiscard]] TpbGrouping group_tpb(const PauliSum& h);

/// The measured setting of a group: basis letters, Z on unconstrained qubits.
[[nodiscard]] PauliString measured_basis(const TpbGroup& g, int num_qubits);

/// Empty when every non-identity term of `sums` sits in exactly one group and
/// every group is qubit-wise commuting and consistent with its basis;
/// otherwise a description of the first violation.
[[nodiscard]] std::string check_grouping(const TpbGrouping& grouping, std::span<const PauliSum> sums);

/// [{basis_string, term_count, coeff_l1}] per group.
[[nodiscard]] nlohmann::json to_json(const TpbGrouping& grouping);

struct ShotPlan {
  int shots_per_group = 8192;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument when shots_per_group < 1.
  void validate() const;
};

struct SamplingOptions {
  /// No plan means the infinite-shot limit: exact outcome distributions.
  std::optional<ShotPlan> plan;
  /// Symmetric per-bit readout flip probability in [0, 0.5].
  double readout_flip = 0.0;
};

/// Estimates <H^k> for every element of `powers` (H^1 .. H^K, K <= 5) by
/// measuring `state` in each group's basis. Each member string's expectation
/// is the parity of the outcome bits on its support; identity contributions
/// are added exactly. Groups are sampled in parallel, each with an RNG stream
/// split from the plan seed by group index, so results do not depend on the
/// thread count. Standard errors ignore covariances between terms.
[[nodiscard]] MomentSet sample_moments(std::span<const PauliSum> powers, const TpbGrouping& grouping,
                                       const QuantumState& state, const SamplingOptions& options);

/// Exact moments <H^k>, k = 1 .. max_order, of a statevector by repeated
/// application of H.
[[nodiscard]] MomentSet statevector_moments(const PauliSum& h, std::span<const Complex> psi, int max_order);

/// Exact tr(rho H^k) (or <psi|H^k|psi>) for each supplied power.
[[nodiscard]] MomentSet exact_moments(std::span<const PauliSum> powers, const QuantumState& state);

}  // namespace qcm
