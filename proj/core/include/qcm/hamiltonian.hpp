#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "qcm/pauli.hpp"

namespace qcm {

/// One undirected coupling of a spin graph: Jx XX + Jy YY + Jz ZZ on (i, j).
struct Edge {
  int i = 0;
  int j = 0;
  double jx = 1.0;
  double jy = 1.0;
  double jz = 1.0;
};

struct SpinGraph {
  int num_qubits = 0;
  std::vector<Edge> edges;

  /// Throws std::invalid_argument on out-of-range, self or duplicate edges.
  void validate() const;
};

/// Nearest-neighbour ring with periodic boundary; q = 2 gives the single edge
/// (0, 1). All couplings set to j.
[[nodiscard]] SpinGraph ring_graph(int num_qubits, double j = 1.0);

/// H = 1/(4q) * sum over edges of (Jx XX + Jy YY + Jz ZZ).
[[nodiscard]] PauliSum to_pauli_sum(const SpinGraph& graph);

/// Uniform periodic Heisenberg ring (all J = 1).
[[nodiscard]] PauliSum heisenberg_ring(int num_qubits);

/// Periodic ring with one (Jx, Jy, Jz) triple per edge, edge e joining e and
/// e + 1 mod q.
[[nodiscard]] PauliSum heisenberg_ring(int num_qubits, std::span<const Edge> couplings);

struct EnsembleInstance {
  std::uint64_t seed = 0;
  SpinGraph graph;
};

/// `count` periodic rings whose edges carry one coupling J ~ U[0, 1] shared by
/// the x, y and z axes. Instance k is generated from its own seed, derived from
/// (seed, k), so any single instance can be regenerated in isolation.
[[nodiscard]] std::vector<EnsembleInstance> random_heisenberg_ensemble(int num_qubits, int count,
                                                                      std::uint64_t seed);
[[nodiscard]] SpinGraph random_heisenberg_instance(int num_qubits, std::uint64_t instance_seed);

struct DenseHamiltonian {
  Eigen::MatrixXcd matrix;
  [[nodiscard]] int dim() const { return static_cast<int>(matrix.rows()); }
};

inline constexpr int kMaxDenseDim = 4096;

/// (A + A^dagger) / 2 with A having iid standard complex Gaussian entries.
[[nodiscard]] DenseHamiltonian random_gue(int dim, std::uint64_t seed);

/// Dense matrix of a Pauli sum, q <= 12.
[[nodiscard]] Eigen::MatrixXcd to_dense(const PauliSum& h);

struct GroundState {
  double energy = 0.0;
  std::vector<Complex> state;
  int matvecs = 0;
};

struct LanczosOptions {
  int krylov_dim = 60;
  int max_matvecs = 20000;
  /// Converged once ||H x - E x|| falls below this.
  double residual_tol = 1e-9;
  std::uint64_t seed = 7;
};

[[nodiscard]] GroundState exact_ground(const DenseHamiltonian& h);

/// Dense diagonalization for q <= 8, restarted Lanczos with full
/// reorthogonalization above that.
[[nodiscard]] GroundState exact_ground(const PauliSum& h);
[[nodiscard]] GroundState exact_ground_dense(const PauliSum& h);

/// Matrix-free: H is applied term by term to the amplitude vector. Throws
/// std::runtime_error when max_matvecs is exhausted.
[[nodiscard]] GroundState exact_ground_lanczos(const PauliSum& h, const LanczosOptions& options = {});

/// Equally spaced spectrum E_j = E0 + j * gap for j = 0 .. num_levels - 1.
struct OscillatorSpectrum {
  double ground_energy = -1.0;
  double gap = 1e-3;
  std::uint64_t num_levels = 2;
};

/// sum_j j^r for j = 0 .. n, closed form, 0 <= r <= 5.
[[nodiscard]] long double power_sum(int r, std::uint64_t n);

/// tr(H^k) = sum_j (E0 + j gap)^k over all levels, 1 <= k <= 5, by Faulhaber
/// sums (no loop over levels).
[[nodiscard]] long double oscillator_trace(const OscillatorSpectrum& spec, int k);

[[nodiscard]] nlohmann::json to_json(const SpinGraph& graph);
[[nodiscard]] SpinGraph spin_graph_from_json(const nlohmann::json& j);

}  // namespace qcm
