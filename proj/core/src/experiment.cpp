#include "qcm/experiment.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <complex>
#include <fstream>
#include <set>
#include <sstream>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "qcm/ansatz.hpp"
#include "qcm/parallel.hpp"
#include "qcm/rng.hpp"

namespace qcm {
namespace {

using Clock = std::chrono::steady_clock;
using nlohmann::json;

constexpr std::array<std::string_view, 8> kExperimentNames = {
    "fig1d", "fig1_moments_only", "fig2b", "fig2c_sim", "fig3", "fig4", "whitenoise", "custom"};

std::vector<double> linear_grid(double lo, double hi, int n) {
  std::vector<double> g;
  for (int i = 0; i < n; ++i) g.push_back(lo + (hi - lo) * i / (n - 1));
  return g;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

void write_file(const std::filesystem::path& path, const std::string& text, ExperimentResult& result) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(fmt::format("cannot write {}", path.string()));
  out << text;
  result.files.push_back(path);
}

std::string num(double v) { return fmt::format("{:.17g}", v); }
std::string num(const std::optional<double>& v) { return v ? num(*v) : std::string("nan"); }

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

void check_grid(const std::vector<double>& g, double lo, double hi, std::string_view name) {
  require(!g.empty(), fmt::format("{} is empty", name));
  for (double v : g) require(v >= lo && v <= hi, fmt::format("{} value {} outside [{}, {}]", name, v, lo, hi));
}

// ---------------------------------------------------------------------------
// Hamiltonian instances and optimization campaigns.

struct Instance {
  std::string id;
  std::uint64_t seed = 0;
  PauliSum h;
};

std::vector<Instance> ensemble_instances(const ExperimentConfig& cfg) {
  std::vector<Instance> out;
  out.push_back({"uniform", 0, heisenberg_ring(cfg.num_qubits)});
  for (const auto& inst : random_heisenberg_ensemble(cfg.num_qubits, cfg.ensemble_count, cfg.ensemble_seed)) {
    out.push_back({fmt::format("rand{:02}", out.size() - 1), inst.seed, to_pauli_sum(inst.graph)});
  }
  return out;
}

std::vector<OptimizationRun> load_archive(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot read theta archive {}", path.string()));
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("theta archive {}: {}", path.string(), e.what()));
  }
  std::vector<OptimizationRun> runs;
  for (const auto& r : j.at("runs")) runs.push_back(optimization_run_from_json(r));
  return runs;
}

json archive_json(std::span<const OptimizationRun> runs) {
  json arr = json::array();
  for (const auto& r : runs) arr.push_back(to_json(r));
  return {{"runs", std::move(arr)}};
}

OptimizeConfig optimizer_for(const ExperimentConfig& cfg, std::size_t instance) {
  OptimizeConfig o = cfg.optimizer;
  o.seed = CounterRng::mix(cfg.seed + 0x9e3779b97f4a7c15ULL * (instance + 1));
  return o;
}

// Depths 0 .. max_depth for one Hamiltonian, from the archive when it has them.
std::vector<OptimizationRun> campaign(const PauliSum& h, const std::string& id, const ExperimentConfig& cfg,
                                      std::size_t instance, const std::vector<OptimizationRun>& archive) {
  std::vector<OptimizationRun> runs;
  std::vector<double> warm;
  for (int d = 0; d <= cfg.max_depth; ++d) {
    auto it = std::find_if(archive.begin(), archive.end(), [&](const OptimizationRun& r) {
      return r.hamiltonian_id == id && r.depth == d && r.num_qubits == h.num_qubits();
    });
    if (it != archive.end()) {
      runs.push_back(*it);
    } else {
      runs.push_back(optimize(h, d, optimizer_for(cfg, instance), warm, id));
    }
    warm = runs.back().theta_star;
  }
  return runs;
}

struct Row {
  std::string instance_id;
  int depth = 0;
  int n_cx = 0;
  double prima_facie = 0.0;
  EstimateReport report;
};

std::string rows_csv(std::span<const Row> rows) {
  std::string out = estimate_csv_header() + ",prima_facie\n";
  for (const auto& r : rows)
    out += estimate_csv_row({r.instance_id, r.depth, r.n_cx}, r.report) + "," + num(r.prima_facie) + "\n";
  return out;
}

std::vector<HtRow> ht_rows(std::span<const Row> rows) {
  std::vector<HtRow> out;
  for (const auto& r : rows) out.push_back({r.instance_id, r.depth, r.report.lanczos4, r.report.ht_lanczos4});
  return out;
}

std::string ht_csv(std::span<const HtCell> cells) {
  std::string out = "instance_id,D,lanczos4,ht_lanczos4,margin,below\n";
  for (const auto& c : cells)
    out += fmt::format("{},{},{},{},{},{}\n", c.instance_id, c.depth, num(c.lanczos4), num(c.ht_lanczos4),
                       num(c.margin), c.below ? 1 : 0);
  return out;
}

QuantumState prepare_state(const Circuit& c, const NoiseSpec& noise) {
  if (noise.channel == NoiseChannel::none) return apply_circuit(c, QuantumState::zero(c.num_qubits));
  const auto kind = noise.channel == NoiseChannel::device ? StateKind::density_matrix : StateKind::statevector;
  return apply_circuit(c, QuantumState::zero(c.num_qubits, kind), noise);
}

ShotPlan plan_for(const ShotPlan& base, std::size_t instance, int depth, std::size_t extra = 0) {
  ShotPlan p = base;
  p.seed = CounterRng::mix(base.seed ^ CounterRng::mix((instance << 20) ^ (static_cast<std::uint64_t>(depth) << 8) ^
                                                       (extra + 1)));
  return p;
}

// Noiseless campaign (fig2b) or noisy replay with TPB sampling (fig2c_sim).
std::vector<Row> ensemble_rows(const ExperimentConfig& cfg, json& manifest_instances,
                               std::vector<OptimizationRun>& all_runs) {
  const bool noisy = cfg.experiment == ExperimentKind::fig2c_sim;
  const auto archive = cfg.theta_file ? load_archive(*cfg.theta_file) : std::vector<OptimizationRun>{};
  const auto instances = ensemble_instances(cfg);
  std::vector<Row> rows;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const auto& inst = instances[i];
    const double e0 = exact_ground(inst.h).energy;
    const auto hk = powers(inst.h, 5);
    const auto ht = ht_limit(hk, HtEstimator::lanczos4);
    manifest_instances.push_back({{"id", inst.id}, {"seed", inst.seed}, {"e0", e0}, {"ht_lanczos4", ht.value}});
    const auto runs = campaign(inst.h, inst.id, cfg, i, archive);
    const TpbGrouping grouping = noisy ? group_tpb(hk) : TpbGrouping{};
    for (const auto& run : runs) {
      const Circuit c = rvb_circuit(cfg.num_qubits, run.depth, run.theta_star);
      Row row{inst.id, run.depth, cnot_count(c), 0.0, {}};
      row.prima_facie = prima_facie_error(row.n_cx, cfg.noise.device.alpha * cfg.noise.device.eps_cx);
      MomentSet m;
      if (noisy) {
        const QuantumState s = prepare_state(c, cfg.noise);
        SamplingOptions so;
        if (cfg.shots) so.plan = plan_for(*cfg.shots, i, run.depth);
        so.readout_flip = cfg.noise.effective_readout_flip();
        m = sample_moments(hk, grouping, s, so);
      } else {
        m = statevector_moments(inst.h, rvb_state(cfg.num_qubits, run.depth, run.theta_star), 5);
      }
      row.report = make_report(m, ht.value, e0, ht.degenerate);
      rows.push_back(std::move(row));
    }
    all_runs.insert(all_runs.end(), runs.begin(), runs.end());
  }
  return rows;
}

std::size_t count_flagged(std::span<const Row> rows) {
  return static_cast<std::size_t>(
      std::count_if(rows.begin(), rows.end(), [](const Row& r) { return r.report.lanczos4_degenerate; }));
}

// ---------------------------------------------------------------------------
// Experiments.

void run_fig1d(const ExperimentConfig& cfg, ExperimentResult& result, json& m) {
  const PauliSum h = heisenberg_ring(cfg.num_qubits);
  const double e0 = exact_ground(h).energy;
  m["e0"] = e0;
  const auto curve = convergence_curve(h, cfg.max_depth, optimizer_for(cfg, 0), e0, "uniform");
  std::vector<Row> rows;
  std::vector<OptimizationRun> runs;
  for (const auto& pt : curve) {
    rows.push_back({"uniform", pt.run.depth, pt.n_cx, prima_facie_error(pt.n_cx, cfg.noise.device.eps_cx), pt.report});
    runs.push_back(pt.run);
  }
  write_file(cfg.output_dir / "estimates.csv", rows_csv(rows), result);
  write_file(cfg.output_dir / "theta_archive.json", archive_json(runs).dump(2) + "\n", result);
  result.rows = rows.size();
  result.flagged_rows = count_flagged(rows);
}

void run_fig1_moments_only(const ExperimentConfig& cfg, ExperimentResult& result, json& m) {
  const PauliSum h = heisenberg_ring(cfg.num_qubits);
  auto t0 = Clock::now();
  const auto hk = powers(h, 4);
  m["wall_time_s"]["powers"] = seconds_since(t0);
  t0 = Clock::now();
  const auto grouping = group_tpb(hk);
  m["wall_time_s"]["grouping"] = seconds_since(t0);
  std::string csv = "k,terms,identity_coefficient\n";
  for (std::size_t k = 0; k < hk.size(); ++k)
    csv += fmt::format("{},{},{}\n", k + 1, hk[k].size(), num(identity_coefficient(hk[k])));
  const auto ht = ht_limit(hk, HtEstimator::lanczos4);
  csv += fmt::format("# groups {}\n# ht_lanczos4 {}\n", grouping.groups.size(), num(ht.value));
  write_file(cfg.output_dir / "moments.csv", csv, result);
  write_file(cfg.output_dir / "grouping.json", to_json(grouping).dump(1) + "\n", result);
  m["groups"] = grouping.groups.size();
  m["h4_terms"] = hk[3].size();
  result.rows = hk.size();
}

void run_ensemble(const ExperimentConfig& cfg, ExperimentResult& result, json& m) {
  json instances = json::array();
  std::vector<OptimizationRun> runs;
  const auto rows = ensemble_rows(cfg, instances, runs);
  m["instances"] = std::move(instances);
  write_file(cfg.output_dir / "estimates.csv", rows_csv(rows), result);
  write_file(cfg.output_dir / "theta_archive.json", archive_json(runs).dump(2) + "\n", result);
  write_file(cfg.output_dir / "ht_map.csv", ht_csv(ht_advantage_map(ht_rows(rows))), result);
  result.rows = rows.size();
  result.flagged_rows = count_flagged(rows);
}

void run_fig3(const ExperimentConfig& cfg, ExperimentResult& result, json&) {
  Fig3Options opt = cfg.fig3;
  opt.num_qubits = cfg.num_qubits;
  const auto cells = fig3_grid(opt);
  std::string csv =
      "target_F,F,epsilon,p,variational,lanczos4,cmx5,ht_lanczos4,err_variational,err_lanczos4,err_cmx5,"
      "err_ht_lanczos4,flags,e0\n";
  std::size_t flagged = 0;
  for (const auto& c : cells) {
    const auto& r = c.report;
    std::string flags = r.flags();
    if (!c.fidelity_reached) flags = flags == "none" ? "fidelity_unreached" : flags + ";fidelity_unreached";
    csv += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", num(c.target_fidelity), num(c.fidelity),
                       num(c.epsilon), num(c.p), num(r.variational), num(r.lanczos4), num(r.cmx5),
                       num(r.ht_lanczos4), num(r.err_variational()), num(r.err_lanczos4()), num(r.err_cmx5()),
                       num(approx_error(r.ht_lanczos4, *r.e0)), flags, num(r.e0));
    if (r.lanczos4_degenerate) ++flagged;
  }
  write_file(cfg.output_dir / "fig3_grid.csv", csv, result);
  std::string cross = "target_F,p_crossing\n";
  for (const auto& c : fig3_crossings(cells)) cross += fmt::format("{},{}\n", num(c.target_fidelity), num(c.p));
  write_file(cfg.output_dir / "fig3_ht_contour.csv", cross, result);
  result.rows = cells.size();
  result.flagged_rows = flagged;
}

void run_fig4(const ExperimentConfig& cfg, ExperimentResult& result, json& m) {
  const PauliSum h = heisenberg_ring(cfg.num_qubits);
  const double e0 = exact_ground(h).energy;
  m["e0"] = e0;
  const auto archive = cfg.theta_file ? load_archive(*cfg.theta_file) : std::vector<OptimizationRun>{};
  const auto runs = campaign(h, "uniform", cfg, 0, archive);
  const auto points = alpha_sweep(h, runs, cfg.alphas, cfg.noise.device, cfg.shots, e0);
  std::string csv = "alpha," + estimate_csv_header() + ",prima_facie,err_cmx5\n";
  std::size_t flagged = 0;
  for (const auto& p : points) {
    csv += fmt::format("{},{},{},{}\n", num(p.alpha), estimate_csv_row({"uniform", p.depth, p.n_cx}, p.report),
                       num(p.prima_facie), num(p.report.err_cmx5()));
    if (p.report.lanczos4_degenerate) ++flagged;
  }
  write_file(cfg.output_dir / "alpha_sweep.csv", csv, result);
  write_file(cfg.output_dir / "theta_archive.json", archive_json(runs).dump(2) + "\n", result);
  result.rows = points.size();
  result.flagged_rows = flagged;
}

void run_whitenoise(const ExperimentConfig& cfg, ExperimentResult& result, json& m) {
  const auto exact = cancellation_experiment(cfg.oscillator, cfg.whitenoise_p_grid, MomentModel::exact);
  const auto first = cancellation_experiment(cfg.oscillator, cfg.whitenoise_p_grid, MomentModel::first_order);
  write_file(cfg.output_dir / "whitenoise.csv", to_csv(exact), result);
  write_file(cfg.output_dir / "whitenoise_first_order.csv", to_csv(first), result);
  m["lanczos4_spread"] = {{"exact", exact.lanczos4_spread}, {"first_order", first.lanczos4_spread}};
  m["lanczos4_offset"] = exact.lanczos4_offset;
  result.rows = exact.rows.size();
  result.flagged_rows = static_cast<std::size_t>(std::count_if(
      exact.rows.begin(), exact.rows.end(), [](const CancellationRow& r) { return r.lanczos4_degenerate; }));
}

void run_custom(const ExperimentConfig& cfg, ExperimentResult& result, json& m) {
  const PauliSum h = load_hamiltonian(*cfg.hamiltonian_file);
  require(h.num_qubits() == cfg.num_qubits,
          fmt::format("hamiltonian has {} qubits, config q = {}", h.num_qubits(), cfg.num_qubits));
  const double e0 = exact_ground(h).energy;
  m["e0"] = e0;
  const auto hk = powers(h, 5);
  const auto ht = ht_limit(hk, HtEstimator::lanczos4);
  const auto archive = cfg.theta_file ? load_archive(*cfg.theta_file) : std::vector<OptimizationRun>{};
  std::vector<OptimizationRun> runs;
  if (cfg.theta_file) {
    for (const auto& r : archive)
      if (r.num_qubits == cfg.num_qubits) runs.push_back(r);
    require(!runs.empty(), "theta archive has no runs for this qubit count");
  } else {
    runs = campaign(h, "custom", cfg, 0, archive);
  }
  const TpbGrouping grouping = group_tpb(hk);
  std::vector<Row> rows;
  for (const auto& run : runs) {
    const Circuit c = rvb_circuit(cfg.num_qubits, run.depth, run.theta_star);
    Row row{run.hamiltonian_id.empty() ? "custom" : run.hamiltonian_id, run.depth, cnot_count(c), 0.0, {}};
    row.prima_facie = prima_facie_error(row.n_cx, cfg.noise.device.alpha * cfg.noise.device.eps_cx);
    SamplingOptions so;
    if (cfg.shots) so.plan = plan_for(*cfg.shots, 0, run.depth);
    so.readout_flip = cfg.noise.effective_readout_flip();
    row.report = make_report(sample_moments(hk, grouping, prepare_state(c, cfg.noise), so), ht.value, e0,
                             ht.degenerate);
    rows.push_back(std::move(row));
  }
  write_file(cfg.output_dir / "estimates.csv", rows_csv(rows), result);
  result.rows = rows.size();
  result.flagged_rows = count_flagged(rows);
}

// ---------------------------------------------------------------------------
// JSON config parsing.

template <class T>
T get(const json& j, std::string_view key, T fallback) {
  const auto it = j.find(key);
  if (it == j.end()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("config key '{}': {}", key, e.what()));
  }
}

void reject_unknown(const json& j, std::initializer_list<std::string_view> keys, std::string_view where) {
  if (!j.is_object()) throw ConfigError(fmt::format("{} must be a JSON object", where));
  for (const auto& [k, v] : j.items()) {
    if (std::find(keys.begin(), keys.end(), k) == keys.end())
      throw ConfigError(fmt::format("unknown key '{}' in {}", k, where));
  }
}

}  // namespace

std::string_view experiment_name(ExperimentKind k) { return kExperimentNames.at(static_cast<std::size_t>(k)); }

ExperimentKind experiment_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kExperimentNames.size(); ++i)
    if (kExperimentNames[i] == name) return static_cast<ExperimentKind>(i);
  throw ConfigError(fmt::format("unknown experiment '{}'", name));
}

ExperimentConfig default_config(ExperimentKind kind) {
  ExperimentConfig c;
  c.experiment = kind;
  c.fig3.f_grid = linear_grid(0.5, 1.0, 11);
  c.fig3.p_grid = linear_grid(0.0, 0.5, 11);
  c.alphas = {0.0, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0};
  c.whitenoise_p_grid = default_p_grid();
  switch (kind) {
    case ExperimentKind::fig1_moments_only: c.num_qubits = 20; break;
    case ExperimentKind::fig2c_sim:
      c.num_qubits = 8;
      c.noise.channel = NoiseChannel::device;
      c.shots = ShotPlan{8192, 7};
      break;
    case ExperimentKind::fig3: c.num_qubits = 6; break;
    case ExperimentKind::fig4:
      c.num_qubits = 8;
      c.noise.channel = NoiseChannel::device;
      break;
    default: break;
  }
  return c;
}

void ExperimentConfig::validate() const {
  const bool needs_even_ring = experiment != ExperimentKind::whitenoise && experiment != ExperimentKind::custom &&
                               !(experiment == ExperimentKind::fig3 && fig3.hamiltonian == Fig3Hamiltonian::gue);
  if (needs_even_ring) {
    require(num_qubits >= 2 && num_qubits % 2 == 0, fmt::format("q = {} must be even and >= 2", num_qubits));
  }
  require(num_qubits >= 1 && num_qubits <= kMaxQubits, fmt::format("q = {} outside [1, {}]", num_qubits, kMaxQubits));
  require(max_depth >= 0 && max_depth <= 7, fmt::format("D_max = {} outside [0, 7]", max_depth));
  require(ensemble_count >= 1, "ensemble count must be >= 1");
  try {
    noise.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (shots) require(shots->shots_per_group >= 1, "shots_per_group must be >= 1");
  require(optimizer.restarts >= 1, "optimizer restarts must be >= 1");
  require(optimizer.tol > 0, "optimizer tol must be positive");
  require(optimizer.max_iters >= 0, "optimizer max_iters must be >= 0");
  require(max_flag_fraction >= 0 && max_flag_fraction <= 1, "max_flag_fraction outside [0, 1]");
  require(!output_dir.empty(), "output_dir is empty");

  const bool dm = noise.channel != NoiseChannel::none;
  const bool replays = experiment == ExperimentKind::fig2c_sim || experiment == ExperimentKind::fig4 ||
                       experiment == ExperimentKind::custom;
  if (dm && replays)
    require(num_qubits <= kDensityMatrixQubitCap,
            fmt::format("noisy replay on {} qubits exceeds the density-matrix cap {}", num_qubits,
                        kDensityMatrixQubitCap));
  switch (experiment) {
    case ExperimentKind::fig1d:
    case ExperimentKind::fig2b:
      require(num_qubits <= 16, "zero-noise campaigns are limited to 16 qubits");
      break;
    case ExperimentKind::fig2c_sim:
      require(noise.channel != NoiseChannel::none, "fig2c_sim needs a noise model");
      break;
    case ExperimentKind::fig3:
      require(num_qubits <= 10, "fig3 grids use dense matrices, q <= 10");
      check_grid(fig3.f_grid, 0.0, 1.0, "fig3 f_grid");
      check_grid(fig3.p_grid, 0.0, 1.0, "fig3 p_grid");
      break;
    case ExperimentKind::fig4:
      require(noise.channel == NoiseChannel::device, "fig4 needs the device noise channel");
      check_grid(alphas, 0.0, 1.0, "alphas");
      break;
    case ExperimentKind::whitenoise:
      check_grid(whitenoise_p_grid, 0.0, 1.0, "p_grid");
      require(oscillator.num_levels >= 1, "oscillator needs at least one level");
      require(oscillator.gap >= 0, "oscillator gap must be >= 0");
      break;
    case ExperimentKind::custom:
      require(hamiltonian_file.has_value(), "custom runs need hamiltonian_file");
      break;
    default: break;
  }
}

ExperimentConfig config_from_json(const json& j) {
  reject_unknown(j,
                 {"experiment", "q", "D_max", "seed", "ensemble", "noise", "shots", "output_dir", "optimizer", "fig3",
                  "alphas", "oscillator", "p_grid", "hamiltonian_file", "theta_file", "max_flag_fraction"},
                 "config");
  if (!j.contains("experiment")) throw ConfigError("config needs an 'experiment' key");
  ExperimentConfig c = default_config(experiment_from_name(get<std::string>(j, "experiment", "")));
  c.num_qubits = get(j, "q", c.num_qubits);
  c.max_depth = get(j, "D_max", c.max_depth);
  c.seed = get(j, "seed", c.seed);
  if (j.contains("ensemble")) {
    const auto& e = j["ensemble"];
    reject_unknown(e, {"count", "seed"}, "ensemble");
    c.ensemble_count = get(e, "count", c.ensemble_count);
    c.ensemble_seed = get(e, "seed", c.ensemble_seed);
  }
  if (j.contains("noise")) {
    const auto& n = j["noise"];
    reject_unknown(n, {"channel", "p", "device"}, "noise");
    try {
      c.noise.channel = channel_from_name(get<std::string>(n, "channel", std::string(channel_name(c.noise.channel))));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    c.noise.p = get(n, "p", c.noise.p);
    if (n.contains("device")) {
      const auto& d = n["device"];
      reject_unknown(d, {"eps_cx", "eps_1q", "readout_flip", "alpha"}, "noise.device");
      c.noise.device.eps_cx = get(d, "eps_cx", c.noise.device.eps_cx);
      c.noise.device.eps_1q = get(d, "eps_1q", c.noise.device.eps_1q);
      c.noise.device.readout_flip = get(d, "readout_flip", c.noise.device.readout_flip);
      c.noise.device.alpha = get(d, "alpha", c.noise.device.alpha);
    }
  }
  if (j.contains("shots")) {
    const auto& s = j["shots"];
    if (s.is_string()) {
      if (s.get<std::string>() != "exact") throw ConfigError("shots must be \"exact\" or an object");
      c.shots.reset();
    } else {
      reject_unknown(s, {"shots_per_group", "seed"}, "shots");
      ShotPlan p = c.shots.value_or(ShotPlan{});
      p.shots_per_group = get(s, "shots_per_group", p.shots_per_group);
      p.seed = get(s, "seed", p.seed);
      c.shots = p;
    }
  }
  c.output_dir = get<std::string>(j, "output_dir", c.output_dir.string());
  if (j.contains("optimizer")) {
    const auto& o = j["optimizer"];
    reject_unknown(o, {"max_iters", "tol", "restarts", "initial_step"}, "optimizer");
    c.optimizer.max_iters = get(o, "max_iters", c.optimizer.max_iters);
    c.optimizer.tol = get(o, "tol", c.optimizer.tol);
    c.optimizer.restarts = get(o, "restarts", c.optimizer.restarts);
    c.optimizer.initial_step = get(o, "initial_step", c.optimizer.initial_step);
  }
  if (j.contains("fig3")) {
    const auto& f = j["fig3"];
    reject_unknown(f, {"hamiltonian", "channel", "f_grid", "p_grid", "gue_seed", "hamiltonian_seed"}, "fig3");
    const auto ham = get<std::string>(f, "hamiltonian", "heisenberg");
    if (ham != "heisenberg" && ham != "gue") throw ConfigError(fmt::format("unknown fig3 hamiltonian '{}'", ham));
    c.fig3.hamiltonian = ham == "gue" ? Fig3Hamiltonian::gue : Fig3Hamiltonian::heisenberg;
    const auto ch = get<std::string>(f, "channel", "depolarize");
    if (ch != "depolarize" && ch != "dephase") throw ConfigError(fmt::format("unknown fig3 channel '{}'", ch));
    c.fig3.channel = ch == "dephase" ? LocalChannel::dephase : LocalChannel::depolarize;
    c.fig3.f_grid = get(f, "f_grid", c.fig3.f_grid);
    c.fig3.p_grid = get(f, "p_grid", c.fig3.p_grid);
    c.fig3.gue_seed = get(f, "gue_seed", c.fig3.gue_seed);
    c.fig3.hamiltonian_seed = get(f, "hamiltonian_seed", c.fig3.hamiltonian_seed);
  }
  c.alphas = get(j, "alphas", c.alphas);
  if (j.contains("oscillator")) {
    const auto& o = j["oscillator"];
    reject_unknown(o, {"E0", "gap", "levels"}, "oscillator");
    c.oscillator.ground_energy = get(o, "E0", c.oscillator.ground_energy);
    c.oscillator.gap = get(o, "gap", c.oscillator.gap);
    c.oscillator.num_levels = get(o, "levels", c.oscillator.num_levels);
  }
  c.whitenoise_p_grid = get(j, "p_grid", c.whitenoise_p_grid);
  if (j.contains("hamiltonian_file")) c.hamiltonian_file = get<std::string>(j, "hamiltonian_file", "");
  if (j.contains("theta_file")) c.theta_file = get<std::string>(j, "theta_file", "");
  c.max_flag_fraction = get(j, "max_flag_fraction", c.max_flag_fraction);
  c.validate();
  return c;
}

json to_json(const ExperimentConfig& c) {
  json j{{"experiment", experiment_name(c.experiment)},
         {"q", c.num_qubits},
         {"D_max", c.max_depth},
         {"seed", c.seed},
         {"ensemble", {{"count", c.ensemble_count}, {"seed", c.ensemble_seed}}},
         {"noise", {{"channel", channel_name(c.noise.channel)}, {"p", c.noise.p}, {"device", to_json(c.noise.device)}}},
         {"output_dir", c.output_dir.string()},
         {"optimizer",
          {{"max_iters", c.optimizer.max_iters},
           {"tol", c.optimizer.tol},
           {"restarts", c.optimizer.restarts},
           {"initial_step", c.optimizer.initial_step}}},
         {"fig3",
          {{"hamiltonian", c.fig3.hamiltonian == Fig3Hamiltonian::gue ? "gue" : "heisenberg"},
           {"channel", c.fig3.channel == LocalChannel::dephase ? "dephase" : "depolarize"},
           {"f_grid", c.fig3.f_grid},
           {"p_grid", c.fig3.p_grid},
           {"gue_seed", c.fig3.gue_seed},
           {"hamiltonian_seed", c.fig3.hamiltonian_seed}}},
         {"alphas", c.alphas},
         {"oscillator",
          {{"E0", c.oscillator.ground_energy}, {"gap", c.oscillator.gap}, {"levels", c.oscillator.num_levels}}},
         {"p_grid", c.whitenoise_p_grid},
         {"max_flag_fraction", c.max_flag_fraction}};
  j["shots"] = c.shots ? json{{"shots_per_group", c.shots->shots_per_group}, {"seed", c.shots->seed}} : json("exact");
  if (c.hamiltonian_file) j["hamiltonian_file"] = c.hamiltonian_file->string();
  if (c.theta_file) j["theta_file"] = c.theta_file->string();
  return j;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  std::filesystem::create_directories(cfg.output_dir);
  ExperimentResult result;
  json m{{"tool", "qcm"},
         {"version", kVersion},
         {"experiment", experiment_name(cfg.experiment)},
         {"config", to_json(cfg)},
         {"seeds",
          {{"seed", cfg.seed},
           {"ensemble", cfg.ensemble_seed},
           {"shots", cfg.shots ? json(cfg.shots->seed) : json(nullptr)},
           {"gue", cfg.fig3.gue_seed},
           {"hamiltonian", cfg.fig3.hamiltonian_seed}}},
         {"threads", num_threads()}};
  const auto t0 = Clock::now();
  switch (cfg.experiment) {
    case ExperimentKind::fig1d: run_fig1d(cfg, result, m); break;
    case ExperimentKind::fig1_moments_only: run_fig1_moments_only(cfg, result, m); break;
    case ExperimentKind::fig2b:
    case ExperimentKind::fig2c_sim: run_ensemble(cfg, result, m); break;
    case ExperimentKind::fig3: run_fig3(cfg, result, m); break;
    case ExperimentKind::fig4: run_fig4(cfg, result, m); break;
    case ExperimentKind::whitenoise: run_whitenoise(cfg, result, m); break;
    case ExperimentKind::custom: run_custom(cfg, result, m); break;
  }
  m["wall_time_s"]["total"] = seconds_since(t0);
  m["rows"] = result.rows;
  m["flagged_rows"] = result.flagged_rows;
  json files = json::array();
  for (const auto& f : result.files) files.push_back(f.filename().string());
  m["files"] = std::move(files);
  result.manifest = m;
  const auto manifest_path = cfg.output_dir / "manifest.json";
  std::ofstream(manifest_path) << m.dump(2) << "\n";
  result.files.push_back(manifest_path);
  return result;
}

std::vector<Fig3Cell> fig3_grid(const Fig3Options& options) {
  const int q = options.num_qubits;
  if (q < 1 || q > 10) throw std::invalid_argument(fmt::format("fig3 grid on {} qubits outside [1, 10]", q));
  const int dim = 1 << q;
  const Eigen::MatrixXcd h = options.hamiltonian == Fig3Hamiltonian::gue
                                 ? random_gue(dim, options.hamiltonian_seed).matrix
                                 : to_dense(heisenberg_ring(q));
  const GroundState ground = exact_ground(DenseHamiltonian{h});
  const Eigen::Map<const Eigen::VectorXcd> phi0(ground.state.data(), dim);

  std::array<Eigen::MatrixXcd, kMaxMomentOrder> hk;
  hk[0] = h;
  for (std::size_t k = 1; k < hk.size(); ++k) hk[k] = hk[k - 1] * h;
  MomentSet mixed;
  for (const auto& a : hk) mixed.values.push_back(a.trace().real() / dim);
  const auto ht = lanczos4(cumulants(MomentSet{{mixed.values.begin(), mixed.values.begin() + 4}, {}}));

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> rot(random_gue(dim, options.gue_seed).matrix);
  const Eigen::VectorXd lambda = rot.eigenvalues();
  const Eigen::VectorXcd overlap = rot.eigenvectors().adjoint() * phi0;
  const Eigen::VectorXd weight = overlap.cwiseAbs2();
  auto fidelity_at = [&](double eps) {
    Complex a{};
    for (int j = 0; j < dim; ++j) a += weight(j) * std::polar(1.0, -eps * lambda(j));
    return std::norm(a);
  };
  const double step = 0.01 / std::max(lambda.maxCoeff() - lambda.minCoeff(), 1e-12);

  std::vector<Fig3Cell> cells;
  for (const double target : options.f_grid) {
    double lo = 0.0, hi = 0.0;
    bool reached = fidelity_at(0.0) <= target;
    for (int i = 1; i <= 100000 && !reached; ++i) {
      lo = hi;
      hi = i * step;
      reached = fidelity_at(hi) <= target;
    }
    if (reached && hi > 0) {
      for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (lo + hi);
        (fidelity_at(mid) > target ? lo : hi) = mid;
      }
    }
    const double eps = hi;
    Eigen::VectorXcd phase(dim);
    for (int j = 0; j < dim; ++j) phase(j) = std::polar(1.0, -eps * lambda(j)) * overlap(j);
    const Eigen::VectorXcd phi = rot.eigenvectors() * phase;
    const QuantumState pure =
        QuantumState::from_statevector(std::vector<Complex>(phi.data(), phi.data() + dim)).to_density_matrix();
    const double f0 = std::norm(phi0.dot(phi));
    for (const double p : options.p_grid) {
      const QuantumState rho = channel_local(pure, p, options.channel);
      // tr(rho A) with rho stored row-major: sum_rc rho(r, c) A(c, r).
      const Eigen::Map<const Eigen::MatrixXcd> rho_t(rho.data().data(), dim, dim);
      MomentSet m;
      for (const auto& a : hk) m.values.push_back(rho_t.cwiseProduct(a).sum().real());
      cells.push_back({target, f0, eps, p, make_report(m, ht.value, ground.energy, ht.degenerate), reached});
    }
  }
  return cells;
}

std::vector<Fig3Crossing> fig3_crossings(std::span<const Fig3Cell> cells) {
  std::vector<double> targets;
  for (const auto& c : cells)
    if (std::find(targets.begin(), targets.end(), c.target_fidelity) == targets.end())
      targets.push_back(c.target_fidelity);
  std::vector<Fig3Crossing> out;
  for (const double t : targets) {
    std::vector<const Fig3Cell*> row;
    for (const auto& c : cells)
      if (c.target_fidelity == t) row.push_back(&c);
    std::sort(row.begin(), row.end(), [](const Fig3Cell* a, const Fig3Cell* b) { return a->p < b->p; });
    Fig3Crossing x{t, std::nullopt};
    auto gap = [](const Fig3Cell* c) {
      return *c->report.err_lanczos4() - approx_error(c->report.ht_lanczos4, *c->report.e0);
    };
    for (std::size_t i = 0; i + 1 < row.size() && !x.p; ++i) {
      const double g0 = gap(row[i]);
      const double g1 = gap(row[i + 1]);
      if (g0 < 0 && g1 >= 0) x.p = row[i]->p + (row[i + 1]->p - row[i]->p) * (-g0) / (g1 - g0);
    }
    if (!row.empty() && !x.p && gap(row.front()) >= 0) x.p = row.front()->p;
    out.push_back(x);
  }
  return out;
}

std::vector<AlphaPoint> alpha_sweep(const PauliSum& h, std::span<const OptimizationRun> runs,
                                    std::span<const double> alphas, const DeviceParams& device,
                                    const std::optional<ShotPlan>& shots, double e0) {
  const auto hk = powers(h, 5);
  const auto ht = ht_limit(hk, HtEstimator::lanczos4);
  const TpbGrouping grouping = group_tpb(hk);
  std::vector<AlphaPoint> out;
  for (const auto& run : runs) {
    const Circuit c = rvb_circuit(h.num_qubits(), run.depth, run.theta_star);
    const int n_cx = cnot_count(c);
    for (std::size_t a = 0; a < alphas.size(); ++a) {
      NoiseSpec noise{NoiseChannel::device, 0.0, device};
      noise.device.alpha = alphas[a];
      noise.validate();
      const QuantumState s = apply_circuit(c, QuantumState::zero(h.num_qubits(), StateKind::density_matrix), noise);
      SamplingOptions so;
      if (shots) so.plan = plan_for(*shots, a, run.depth);
      so.readout_flip = noise.effective_readout_flip();
      const MomentSet m = sample_moments(hk, grouping, s, so);
      out.push_back({run.depth, alphas[a], n_cx, prima_facie_error(n_cx, alphas[a] * device.eps_cx),
                     make_report(m, ht.value, e0, ht.degenerate)});
    }
  }
  return out;
}

std::vector<HtCell> ht_advantage_map(std::span<const HtRow> rows) {
  std::vector<HtCell> out;
  for (const auto& r : rows) {
    const double margin = r.ht_lanczos4 - r.lanczos4;
    out.push_back({r.instance_id, r.depth, r.lanczos4, r.ht_lanczos4, margin,
                   margin > 1e-9 * std::max(1.0, std::abs(r.ht_lanczos4))});
  }
  return out;
}

std::vector<HtCell> ht_advantage_map(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.experiment != ExperimentKind::fig2b && cfg.experiment != ExperimentKind::fig2c_sim)
    throw ConfigError("the high-temperature map needs a fig2b or fig2c_sim configuration");
  json instances = json::array();
  std::vector<OptimizationRun> runs;
  const auto rows = ensemble_rows(cfg, instances, runs);
  return ht_advantage_map(ht_rows(rows));
}

PauliSum load_hamiltonian(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(fmt::format("cannot read hamiltonian file {}", path.string()));
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  if (path.extension() == ".json") {
    try {
      const json j = json::parse(text);
      if (j.contains("edges")) return to_pauli_sum(spin_graph_from_json(j));
      return pauli_sum_from_json(j);
    } catch (const json::exception& e) {
      throw ConfigError(fmt::format("{}: {}", path.string(), e.what()));
    }
  }
  return from_text(text);
}

}  // namespace qcm
