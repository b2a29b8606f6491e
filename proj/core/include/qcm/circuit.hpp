#pragma once

#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace qcm {

enum class GateKind { X, H, S, Sdg, RZ, CNOT, ESWAP };

[[nodiscard]] std::string_view gate_name(GateKind kind);
[[nodiscard]] GateKind gate_from_name(std::string_view name);
[[nodiscard]] bool is_two_qubit(GateKind kind);

struct Gate {
  GateKind kind = GateKind::X;
  int q0 = 0;
  int q1 = -1;
  /// Index into Circuit::params, or -1 when the gate uses `angle` (or none).
  int param = -1;
  double angle = 0.0;
};

/// Ordered gate list with a bound parameter vector. RZ(t) = diag(e^{-it/2},
/// e^{it/2}); ESWAP(t) = exp(-i t/2 SWAP) = cos(t/2) I - i sin(t/2) SWAP.
struct Circuit {
  int num_qubits = 0;
  int depth = 0;
  std::vector<double> params;
  std::vector<Gate> gates;

  [[nodiscard]] double angle_of(const Gate& g) const {
    return g.param >= 0 ? params.at(static_cast<std::size_t>(g.param)) : g.angle;
  }
  /// Throws std::invalid_argument for out-of-range qubits or parameter slots.
  void validate() const;
};

[[nodiscard]] nlohmann::json to_json(const Circuit& c);
[[nodiscard]] Circuit circuit_from_json(const nlohmann::json& j);

}  // namespace qcm
