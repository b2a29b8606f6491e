#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qcm/estimators.hpp"
#include "qcm/pauli.hpp"

namespace qcm {

struct NelderMeadOptions {
  int max_iters = 1000;
  /// Stop once every vertex lies within tol of the best one (infinity norm).
  double tol = 1e-7;
  double initial_step = 0.25;
};

struct NelderMeadResult {
  std::vector<double> x;
  double fx = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
};

/// Downhill simplex with dimension-adaptive coefficients (reflection 1,
/// expansion 1 + 2/n, contraction 3/4 - 1/(2n), shrink 1 - 1/n). The returned
/// point is never worse than x0.
[[nodiscard]] NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& f,
                                           std::span<const double> x0, const NelderMeadOptions& options);

/// Noiseless RVB statevector for the given angles.
[[nodiscard]] std::vector<Complex> rvb_state(int num_qubits, int depth, std::span<const double> theta);
[[nodiscard]] double rvb_energy(const PauliSum& h, int depth, std::span<const double> theta);

struct OptimizeConfig {
  /// Iteration cap per start; 0 means 2000 * D * q.
  int max_iters = 0;
  double tol = 1e-7;
  int restarts = 4;
  std::uint64_t seed = 1;
  double initial_step = 0.25;
};

struct OptimizationRun {
  std::string hamiltonian_id;
  int num_qubits = 0;
  int depth = 0;
  std::vector<double> theta_star;
  double energy_star = 0.0;
  int iterations = 0;
  int evaluations = 0;
  int restarts = 0;
  std::uint64_t seed = 0;
  bool converged = false;
};

/// Minimizes <H> over the D q angles of the RVB circuit. Start 0 is the warm
/// start (`warm` padded with zero angles, or all zeros); starts 1 .. restarts-1
/// draw angles uniformly from [0, 2 pi) with seeds split from config.seed.
/// Returns the best start; the result never exceeds the warm-start energy.
[[nodiscard]] OptimizationRun optimize(const PauliSum& h, int depth, const OptimizeConfig& config,
                                       std::span<const double> warm = {}, std::string hamiltonian_id = "");

struct ConvergencePoint {
  OptimizationRun run;
  int n_cx = 0;
  EstimateReport report;
};

/// Optimizes depths 0 .. max_depth in sequence, each warm-started from the
/// previous depth, and evaluates the estimators on exact moments at theta*.
[[nodiscard]] std::vector<ConvergencePoint> convergence_curve(const PauliSum& h, int max_depth,
                                                              const OptimizeConfig& config, double e0,
                                                              std::string hamiltonian_id = "");

[[nodiscard]] nlohmann::json to_json(const OptimizationRun& run);
[[nodiscard]] OptimizationRun optimization_run_from_json(const nlohmann::json& j);

}  // namespace qcm
