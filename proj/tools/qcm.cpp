#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "qcm/experiment.hpp"
#include "qcm/parallel.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitFlags = 3;

struct Globals {
  std::optional<std::uint64_t> seed;
  int threads = 0;
  std::string out;
  std::string config;
};

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw qcm::ConfigError(fmt::format("cannot read {}", path));
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw qcm::ConfigError(fmt::format("{}: {}", path, e.what()));
  }
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw qcm::ConfigError(fmt::format("cannot write {}", path));
  out << text;
}

qcm::PauliSum hamiltonian_from(const std::string& file, int q, std::optional<std::uint64_t> instance_seed) {
  if (!file.empty()) return qcm::load_hamiltonian(file);
  if (instance_seed) return qcm::to_pauli_sum(qcm::random_heisenberg_instance(q, *instance_seed));
  return qcm::heisenberg_ring(q);
}

// Config from --config (or the experiment defaults), with global overrides.
qcm::ExperimentConfig resolve(const Globals& g, qcm::ExperimentKind fallback) {
  qcm::ExperimentConfig cfg = g.config.empty() ? qcm::default_config(fallback) : qcm::config_from_json(read_json(g.config));
  if (g.seed) cfg.seed = *g.seed;
  if (!g.out.empty()) cfg.output_dir = g.out;
  cfg.validate();
  return cfg;
}

int finish(const qcm::ExperimentConfig& cfg, const qcm::ExperimentResult& r) {
  for (const auto& f : r.files) fmt::print("{}\n", f.string());
  fmt::print(stderr, "{}: {} rows, {} flagged\n", qcm::experiment_name(cfg.experiment), r.rows, r.flagged_rows);
  if (r.flags_exceeded(cfg.max_flag_fraction)) {
    fmt::print(stderr, "flagged rows exceed max_flag_fraction = {}\n", cfg.max_flag_fraction);
    return kExitFlags;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum computed moments: Heisenberg models, RVB circuits, moment estimators"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", std::string(qcm::kVersion));
  Globals g;
  app.add_option("--seed", g.seed, "Override the master seed");
  app.add_option("--threads", g.threads, "Worker threads (0 = hardware concurrency)")->check(CLI::NonNegativeNumber);
  app.add_option("--out", g.out, "Output directory or file");
  app.add_option("--config", g.config, "Experiment configuration JSON");

  int q = 12;
  std::string ham_file;
  std::optional<std::uint64_t> instance_seed;
  auto add_ham = [&](CLI::App* sub) {
    sub->add_option("-q,--qubits", q, "Ring size")->check(CLI::Range(1, qcm::kMaxQubits));
    sub->add_option("--hamiltonian", ham_file, "Pauli text or SpinGraph JSON file");
    sub->add_option("--instance", instance_seed, "Random-coupling instance seed");
  };

  auto* build = app.add_subcommand("build-ham", "Write a Heisenberg ring Hamiltonian");
  add_ham(build);
  std::string format = "text";
  build->add_option("--format", format, "text or json")->check(CLI::IsMember({"text", "json"}));

  auto* pw = app.add_subcommand("powers", "Term counts and identity coefficients of H^k");
  add_ham(pw);
  int max_power = 4;
  pw->add_option("-k,--max-power", max_power, "Highest power")->check(CLI::Range(1, 5));

  auto* grp = app.add_subcommand("group", "Greedy qubit-wise-commuting grouping of H .. H^k");
  add_ham(grp);
  int group_power = 4;
  grp->add_option("-k,--max-power", group_power, "Highest power")->check(CLI::Range(1, 5));

  auto* opt = app.add_subcommand("optimize", "Warm-started RVB optimization for D = 0 .. D_max");
  add_ham(opt);
  int d_max = 7;
  qcm::OptimizeConfig ocfg;
  opt->add_option("-D,--depth-max", d_max, "Largest depth")->check(CLI::Range(0, 7));
  opt->add_option("--restarts", ocfg.restarts, "Starts per depth")->check(CLI::PositiveNumber);
  opt->add_option("--max-iters", ocfg.max_iters, "Iterations per start (0 = 2000 D q)");
  opt->add_option("--tol", ocfg.tol, "Simplex diameter tolerance");

  auto* est = app.add_subcommand("estimate", "Estimators for archived circuits (custom experiment)");
  std::string theta_file;
  est->add_option("--hamiltonian", ham_file, "Pauli text or SpinGraph JSON file");
  est->add_option("--theta", theta_file, "Theta archive");

  auto* sweep = app.add_subcommand("sweep", "Run a figure dataset (fig1d, fig1_moments_only, fig2b, fig2c_sim, fig3, fig4)");
  std::string sweep_name;
  sweep->add_option("experiment", sweep_name, "Experiment name (default: from --config)");

  auto* wn = app.add_subcommand("whitenoise", "White-noise cancellation tables for an oscillator spectrum");
  qcm::OscillatorSpectrum osc{-1.0, 1e-3, std::uint64_t{1} << 20};
  wn->add_option("--E0", osc.ground_energy, "Ground energy");
  wn->add_option("--gap", osc.gap, "Level spacing");
  wn->add_option("--levels", osc.num_levels, "Number of levels");

  auto* htm = app.add_subcommand("ht-map", "High-temperature advantage map for a fig2b or fig2c_sim config");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (g.threads > 0) qcm::set_num_threads(g.threads);

    if (*build) {
      const auto h = hamiltonian_from(ham_file, q, instance_seed);
      write_text(g.out, format == "json" ? qcm::to_json(h).dump(2) + "\n" : qcm::to_text(h));
      return 0;
    }
    if (*pw) {
      const auto h = hamiltonian_from(ham_file, q, instance_seed);
      std::string csv = "k,terms,identity_coefficient\n";
      const auto hk = qcm::powers(h, max_power);
      for (std::size_t k = 0; k < hk.size(); ++k)
        csv += fmt::format("{},{},{:.17g}\n", k + 1, hk[k].size(), qcm::identity_coefficient(hk[k]));
      write_text(g.out, csv);
      return 0;
    }
    if (*grp) {
      const auto h = hamiltonian_from(ham_file, q, instance_seed);
      const auto grouping = qcm::group_tpb(qcm::powers(h, group_power));
      if (const auto err = qcm::check_grouping(grouping, qcm::powers(h, group_power)); !err.empty()) {
        fmt::print(stderr, "grouping check failed: {}\n", err);
        return kExitFlags;
      }
      write_text(g.out, qcm::to_json(grouping).dump(1) + "\n");
      fmt::print(stderr, "{} terms in {} groups\n", grouping.term_count(), grouping.groups.size());
      return 0;
    }
    if (*opt) {
      const auto h = hamiltonian_from(ham_file, q, instance_seed);
      if (g.seed) ocfg.seed = *g.seed;
      const double e0 = qcm::exact_ground(h).energy;
      const std::string id = instance_seed ? fmt::format("seed{}", *instance_seed) : "uniform";
      nlohmann::json runs = nlohmann::json::array();
      for (const auto& pt : qcm::convergence_curve(h, d_max, ocfg, e0, id)) {
        runs.push_back(qcm::to_json(pt.run));
        fmt::print(stderr, "D={} energy={:.10f} err={:.3e} lanczos4_err={:.3e}\n", pt.run.depth, pt.run.energy_star,
                   pt.report.err_variational().value_or(0.0), pt.report.err_lanczos4().value_or(0.0));
      }
      write_text(g.out, nlohmann::json{{"runs", runs}}.dump(2) + "\n");
      return 0;
    }
    if (*est) {
      auto cfg = resolve(g, qcm::ExperimentKind::custom);
      if (!ham_file.empty()) cfg.hamiltonian_file = ham_file;
      if (!theta_file.empty()) cfg.theta_file = theta_file;
      cfg.experiment = qcm::ExperimentKind::custom;
      if (cfg.hamiltonian_file) cfg.num_qubits = qcm::load_hamiltonian(*cfg.hamiltonian_file).num_qubits();
      cfg.validate();
      return finish(cfg, qcm::run_experiment(cfg));
    }
    if (*sweep) {
      if (sweep_name.empty() && g.config.empty()) throw qcm::ConfigError("sweep needs an experiment name or --config");
      auto cfg = sweep_name.empty() ? resolve(g, qcm::ExperimentKind::fig1d)
                                    : resolve(g, qcm::experiment_from_name(sweep_name));
      if (!sweep_name.empty() && !g.config.empty() && cfg.experiment != qcm::experiment_from_name(sweep_name))
        throw qcm::ConfigError("experiment name disagrees with --config");
      return finish(cfg, qcm::run_experiment(cfg));
    }
    if (*wn) {
      auto cfg = resolve(g, qcm::ExperimentKind::whitenoise);
      if (g.config.empty()) cfg.oscillator = osc;
      cfg.experiment = qcm::ExperimentKind::whitenoise;
      cfg.validate();
      return finish(cfg, qcm::run_experiment(cfg));
    }
    if (*htm) {
      const auto cfg = resolve(g, qcm::ExperimentKind::fig2b);
      std::string csv = "instance_id,D,lanczos4,ht_lanczos4,margin,below\n";
      std::size_t below = 0;
      const auto cells = qcm::ht_advantage_map(cfg);
      for (const auto& c : cells) {
        csv += fmt::format("{},{},{:.17g},{:.17g},{:.17g},{}\n", c.instance_id, c.depth, c.lanczos4, c.ht_lanczos4,
                           c.margin, c.below ? 1 : 0);
        below += c.below ? 1 : 0;
      }
      std::filesystem::create_directories(cfg.output_dir);
      write_text((cfg.output_dir / "ht_map.csv").string(), csv);
      fmt::print(stderr, "{} of {} cells below the high-temperature limit\n", below, cells.size());
      return 0;
    }
  } catch (const qcm::ConfigError& e) {
    fmt::print(stderr, "config error: {}\n", e.what());
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    fmt::print(stderr, "invalid argument: {}\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
  return 0;
}
