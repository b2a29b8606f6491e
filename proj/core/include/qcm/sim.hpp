#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "qcm/circuit.hpp"
#include "qcm/pauli.hpp"

namespace qcm {

/// Largest qubit count accepted for density matrices (2^24 complex entries).
inline constexpr int kDensityMatrixQubitCap = 12;

enum class StateKind { statevector, density_matrix };

/// Statevector (2^q amplitudes) or row-major density matrix (2^q x 2^q).
/// Basis index bit j is qubit j.
class QuantumState {
 public:
  /// |0...0>, or |0...0><0...0| for a density matrix.
  static QuantumState zero(int num_qubits, StateKind kind = StateKind::statevector);
  static QuantumState from_statevector(std::vector<Complex> amplitudes);
  static QuantumState from_density_matrix(int num_qubits, std::vector<Complex> rho);
  static QuantumState maximally_mixed(int num_qubits);

  [[nodiscard]] int num_qubits() const { return num_qubits_; }
  [[nodiscard]] StateKind kind() const { return kind_; }
  [[nodiscard]] bool is_density_matrix() const { return kind_ == StateKind::density_matrix; }
  [[nodiscard]] std::size_t dim() const { return std::size_t{1} << num_qubits_; }

  [[nodiscard]] std::span<const Complex> data() const { return data_; }
  [[nodiscard]] std::span<Complex> data() { return data_; }

  /// rho(r, c); only valid for density matrices.
  [[nodiscard]] Complex entry(std::size_t r, std::size_t c) const { return data_[r * dim() + c]; }

  /// |psi><psi| for a statevector, a copy for a density matrix.
  [[nodiscard]] QuantumState to_density_matrix() const;

  /// Norm squared (statevector) or real trace (density matrix).
  [[nodiscard]] double trace() const;

  /// Computational-basis outcome probabilities.
  [[nodiscard]] std::vector<double> probabilities() const;

 private:
  QuantumState(int num_qubits, StateKind kind, std::vector<Complex> data);
  int num_qubits_;
  StateKind kind_;
  std::vector<Complex> data_;
};

using Matrix2 = std::array<Complex, 4>;   // row-major
using Matrix4 = std::array<Complex, 16>;  // row-major, local index = bit(q0) + 2 bit(q1)

namespace gates {
[[nodiscard]] Matrix2 x();
[[nodiscard]] Matrix2 h();
[[nodiscard]] Matrix2 s();
[[nodiscard]] Matrix2 sdg();
[[nodiscard]] Matrix2 rz(double theta);
[[nodiscard]] Matrix4 cnot();  // control q0, target q1
[[nodiscard]] Matrix4 eswap(double theta);
[[nodiscard]] Matrix4 swap();
}  // namespace gates

void apply_gate(QuantumState& s, const Matrix2& u, int qubit);
void apply_gate(QuantumState& s, const Matrix4& u, int q0, int q1);
/// exp(-i (theta/2) SWAP) on qubits q0, q1 of a raw statevector; no checks.
void apply_eswap(std::span<Complex> psi, int q0, int q1, double theta);

enum class NoiseChannel { none, white, depolarize, dephase, device };

[[nodiscard]] std::string_view channel_name(NoiseChannel c);
[[nodiscard]] NoiseChannel channel_from_name(std::string_view name);

/// Per-gate error rates for the circuit-level model. Every rate is scaled by
/// alpha. The defaults are representative placeholders, not calibration data
/// of any particular device, except eps_cx which sits at the ~1% CNOT error
/// level typical of current hardware.
struct DeviceParams {
  double eps_cx = 0.01;
  double eps_1q = 0.001;
  double readout_flip = 0.02;
  double alpha = 1.0;
};

struct NoiseSpec {
  NoiseChannel channel = NoiseChannel::none;
  /// Channel strength for white / depolarize / dephase.
  double p = 0.0;
  DeviceParams device;

  /// Throws std::invalid_argument when a probability lies outside [0, 1].
  void validate() const;
  /// alpha * readout_flip for the device channel, zero otherwise.
  [[nodiscard]] double effective_readout_flip() const;
};

[[nodiscard]] nlohmann::json to_json(const DeviceParams& d);
[[nodiscard]] DeviceParams device_params_from_json(const nlohmann::json& j);

/// Runs the circuit on `s`. With no noise (or channel none) the gates act on
/// the state as given. For the device channel the state must be a density
/// matrix: every CNOT is followed by a two-qubit depolarizing channel of
/// strength alpha*eps_cx, every eSWAP by the same channel composed three times
/// (its three-CNOT cost), and every single-qubit gate by a one-qubit
/// depolarizing channel of strength alpha*eps_1q. For white / depolarize /
/// dephase the circuit runs noiselessly and the channel is applied once to the
/// output (promoted to a density matrix).
[[nodiscard]] QuantumState apply_circuit(const Circuit& c, const QuantumState& s,
                                         const std::optional<NoiseSpec>& noise = std::nullopt);

/// rho -> (1 - p) rho + p I / 2^q.
[[nodiscard]] QuantumState channel_global(const QuantumState& s, double p);

enum class LocalChannel { depolarize, dephase };

/// The single-qubit channel applied to every qubit:
///   depolarize: rho -> (1 - 3p/4) rho + p/4 (X rho X + Y rho Y + Z rho Z)
///   dephase:    rho -> (1 - p/2) rho + p/2 Z rho Z
[[nodiscard]] QuantumState channel_local(const QuantumState& s, double p, LocalChannel kind);

// In-place single-site channels on density matrices.
void depolarize_qubit(QuantumState& rho, int qubit, double p);
void dephase_qubit(QuantumState& rho, int qubit, double p);
/// rho -> (1 - p) rho + p (I/4 (x) tr_{a,b} rho).
void depolarize_pair(QuantumState& rho, int a, int b, double p);

/// <phi0| rho |phi0>, or |<phi0|psi>|^2 for a statevector.
[[nodiscard]] double fidelity(const QuantumState& s, std::span<const Complex> phi0);

/// Each bit of every outcome flips independently with probability `flip`.
[[nodiscard]] std::vector<double> readout_noise(std::span<const double> probs, double flip);

/// Exact <h> (statevector) or tr(rho h) (density matrix). Throws on a
/// dimension mismatch or an imaginary part above 1e-9.
[[nodiscard]] double expectation_exact(const PauliSum& h, const QuantumState& s);

/// 1/2 ||a - b||_1 between two states (promoted to density matrices).
[[nodiscard]] double trace_distance(const QuantumState& a, const QuantumState& b);

/// Smallest eigenvalue of a density matrix.
[[nodiscard]] double min_eigenvalue(const QuantumState& rho);

}  // namespace qcm
