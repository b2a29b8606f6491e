#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qcm/estimators.hpp"
#include "qcm/hamiltonian.hpp"
#include "qcm/measure.hpp"
#include "qcm/sim.hpp"
#include "qcm/vqe.hpp"
#include "qcm/whitenoise.hpp"

namespace qcm {

inline constexpr std::string_view kVersion = "0.1.0";

/// Raised for malformed or out-of-range experiment configurations.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class ExperimentKind { fig1d, fig1_moments_only, fig2b, fig2c_sim, fig3, fig4, whitenoise, custom };

[[nodiscard]] std::string_view experiment_name(ExperimentKind k);
[[nodiscard]] ExperimentKind experiment_from_name(std::string_view name);

enum class Fig3Hamiltonian { heisenberg, gue };

struct Fig3Options {
  int num_qubits = 6;
  Fig3Hamiltonian hamiltonian = Fig3Hamiltonian::heisenberg;
  LocalChannel channel = LocalChannel::depolarize;
  std::vector<double> f_grid;
  std::vector<double> p_grid;
  std::uint64_t gue_seed = 11;
  /// Seed of the random Hamiltonian when hamiltonian = gue.
  std::uint64_t hamiltonian_seed = 3;
};

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::fig1d;
  int num_qubits = 12;
  int max_depth = 7;
  std::uint64_t seed = 1;
  int ensemble_count = 10;
  std::uint64_t ensemble_seed = 2022;
  NoiseSpec noise;
  /// No plan means exact (infinite-shot) moments.
  std::optional<ShotPlan> shots;
  std::filesystem::path output_dir = "out";
  OptimizeConfig optimizer;
  Fig3Options fig3;
  std::vector<double> alphas;
  OscillatorSpectrum oscillator{-1.0, 1e-3, std::uint64_t{1} << 20};
  std::vector<double> whitenoise_p_grid;
  /// Pauli text or SpinGraph JSON, used by custom runs.
  std::optional<std::filesystem::path> hamiltonian_file;
  /// Archive written by a previous campaign; skips the optimization.
  std::optional<std::filesystem::path> theta_file;
  /// Exit status 3 once more than this fraction of rows carries a lanczos4 flag.
  double max_flag_fraction = 0.5;

  /// Throws ConfigError on any inconsistency.
  void validate() const;
};

/// Parses and validates; unknown keys are rejected. Missing keys take the
/// defaults for the chosen experiment.
[[nodiscard]] ExperimentConfig config_from_json(const nlohmann::json& j);
[[nodiscard]] nlohmann::json to_json(const ExperimentConfig& cfg);
/// Defaults used when a key is absent, per experiment.
[[nodiscard]] ExperimentConfig default_config(ExperimentKind kind);

struct ExperimentResult {
  std::vector<std::filesystem::path> files;
  nlohmann::json manifest;
  std::size_t rows = 0;
  std::size_t flagged_rows = 0;

  [[nodiscard]] bool flags_exceeded(double max_fraction) const {
    return rows > 0 && static_cast<double>(flagged_rows) > max_fraction * static_cast<double>(rows);
  }
};

/// Runs the configured experiment and writes its CSV files plus manifest.json
/// into output_dir. CSV contents depend only on the configuration.
[[nodiscard]] ExperimentResult run_experiment(const ExperimentConfig& cfg);

struct Fig3Cell {
  double target_fidelity = 0.0;
  double fidelity = 0.0;
  double epsilon = 0.0;
  double p = 0.0;
  EstimateReport report;
  bool fidelity_reached = true;
};

/// Pure states exp(-i eps M) |phi0> from the exact ground state |phi0>, with
/// M drawn from the GUE and eps chosen by bisection so that the zero-noise
/// fidelity hits each target, then the local channel at every p. Moments are
/// exact traces of rho H^k.
[[nodiscard]] std::vector<Fig3Cell> fig3_grid(const Fig3Options& options);

struct Fig3Crossing {
  double target_fidelity = 0.0;
  /// Smallest p at which the lanczos4 error reaches the high-temperature
  /// error, by linear interpolation; empty when no crossing on the grid.
  std::optional<double> p;
};

[[nodiscard]] std::vector<Fig3Crossing> fig3_crossings(std::span<const Fig3Cell> cells);

struct AlphaPoint {
  int depth = 0;
  double alpha = 0.0;
  int n_cx = 0;
  double prima_facie = 0.0;
  EstimateReport report;
};

/// Replays each optimized circuit under the device model at every alpha.
/// Moments come from TPB measurements with the scaled readout flip, either
/// exact or sampled with `shots`.
[[nodiscard]] std::vector<AlphaPoint> alpha_sweep(const PauliSum& h, std::span<const OptimizationRun> runs,
                                                  std::span<const double> alphas, const DeviceParams& device,
                                                  const std::optional<ShotPlan>& shots, double e0);

struct HtCell {
  std::string instance_id;
  int depth = 0;
  double lanczos4 = 0.0;
  double ht_lanczos4 = 0.0;
  /// ht_lanczos4 - lanczos4.
  double margin = 0.0;
  bool below = false;
};

struct HtRow {
  std::string instance_id;
  int depth = 0;
  double lanczos4 = 0.0;
  double ht_lanczos4 = 0.0;
};

/// A cell is true when lanczos4 lies below the high-temperature limit by more
/// than 1e-9 max(1, |E_HT|).
[[nodiscard]] std::vector<HtCell> ht_advantage_map(std::span<const HtRow> rows);

/// Runs a fig2b or fig2c_sim configuration and maps its rows.
[[nodiscard]] std::vector<HtCell> ht_advantage_map(const ExperimentConfig& cfg);

/// Reads a Pauli text file or a SpinGraph JSON file.
[[nodiscard]] PauliSum load_hamiltonian(const std::filesystem::path& path);

}  // namespace qcm
