#pragma once

#include <span>

#include "qcm/circuit.hpp"

namespace qcm {

/// Resonating-valence-bond trial circuit on a ring of q (even) qubits.
///
/// Singlets (|01> - |10>)/sqrt(2) are prepared on pairs (0,1), (2,3), ...
/// with X, X, H, CNOT each. Every mixing layer then applies q eSWAP gates in
/// two brickwork sublayers: first the odd bonds (1,2), (3,4), ..., (q-1,0),
/// then the even bonds (0,1), (2,3), .... Gate k of layer d reads theta[d*q+k].
/// Starting a layer on the odd bonds keeps every angle meaningful: an eSWAP on
/// an intact singlet only contributes a global phase.
[[nodiscard]] Circuit rvb_circuit(int num_qubits, int depth, std::span<const double> theta);

/// CNOTs after decomposition: each eSWAP costs 3, each explicit CNOT 1.
/// rvb_circuit gives 3*D*q + q/2.
[[nodiscard]] int cnot_count(const Circuit& c);

/// Single-qubit gates outside eSWAP decompositions.
[[nodiscard]] int single_qubit_gate_count(const Circuit& c);

/// 1 - (1 - eps_cx)^n_cx.
[[nodiscard]] double prima_facie_error(int n_cx, double eps_cx);

}  // namespace qcm
