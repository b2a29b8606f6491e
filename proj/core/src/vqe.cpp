#include "qcm/vqe.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include <fmt/format.h>

#include "qcm/ansatz.hpp"
#include "qcm/measure.hpp"
#include "qcm/parallel.hpp"
#include "qcm/rng.hpp"
#include "qcm/sim.hpp"

namespace qcm {

NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& f, std::span<const double> x0,
                             const NelderMeadOptions& options) {
  const std::size_t n = x0.size();
  NelderMeadResult res;
  res.x.assign(x0.begin(), x0.end());
  res.fx = f(res.x);
  res.evaluations = 1;
  if (n == 0) {
    res.converged = true;
    return res;
  }
  const double dn = static_cast<double>(n);
  const double alpha = 1.0;
  const double beta = 1.0 + 2.0 / dn;
  const double gamma = 0.75 - 1.0 / (2.0 * dn);
  const double delta = 1.0 - 1.0 / dn;

  std::vector<std::vector<double>> v(n + 1, res.x);
  std::vector<double> fv(n + 1);
  fv[0] = res.fx;
  for (std::size_t i = 0; i < n; ++i) {
    v[i + 1][i] += options.initial_step;
    fv[i + 1] = f(v[i + 1]);
  }
  res.evaluations += static_cast<int>(n);

  std::vector<std::size_t> order(n + 1);
  std::vector<double> centroid(n), xr(n), xe(n), xc(n);
  auto eval = [&](const std::vector<double>& x) {
    ++res.evaluations;
    return f(x);
  };
  auto along = [&](std::vector<double>& out, double t, const std::vector<double>& towards) {
    for (std::size_t j = 0; j < n; ++j) out[j] = centroid[j] + t * (towards[j] - centroid[j]);
  };

  while (true) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second = order[n - 1];

    double diameter = 0;
    for (std::size_t i = 0; i <= n; ++i)
      for (std::size_t j = 0; j < n; ++j) diameter = std::max(diameter, std::abs(v[i][j] - v[best][j]));
    if (diameter < options.tol) {
      res.converged = true;
      break;
    }
    if (res.iterations >= options.max_iters) break;
    ++res.iterations;

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t i = 0; i <= n; ++i) {
      if (i == worst) continue;
      for (std::size_t j = 0; j < n; ++j) centroid[j] += v[i][j];
    }
    for (auto& c : centroid) c /= dn;

    along(xr, -alpha, v[worst]);
    const double fr = eval(xr);
    if (fr < fv[best]) {
      along(xe, -alpha * beta, v[worst]);
      const double fe = eval(xe);
      if (fe < fr) {
        v[worst] = xe;
        fv[worst] = fe;
      } else {
        v[worst] = xr;
        fv[worst] = fr;
      }
      continue;
    }
    if (fr < fv[second]) {
      v[worst] = xr;
      fv[worst] = fr;
      continue;
    }
    const bool outside = fr < fv[worst];
    along(xc, outside ? -alpha * gamma : gamma, v[worst]);
    const double fc = eval(xc);
    if (outside ? fc <= fr : fc < fv[worst]) {
      v[worst] = xc;
      fv[worst] = fc;
      continue;
    }
    for (std::size_t i = 0; i <= n; ++i) {
      if (i == best) continue;
      for (std::size_t j = 0; j < n; ++j) v[i][j] = v[best][j] + delta * (v[i][j] - v[best][j]);
      fv[i] = eval(v[i]);
    }
  }
  const auto best = static_cast<std::size_t>(std::min_element(fv.begin(), fv.end()) - fv.begin());
  if (fv[best] < res.fx) {
    res.x = v[best];
    res.fx = fv[best];
  }
  return res;
}

std::vector<Complex> rvb_state(int num_qubits, int depth, std::span<const double> theta) {
  const Circuit c = rvb_circuit(num_qubits, depth, theta);
  QuantumState s = apply_circuit(c, QuantumState::zero(num_qubits));
  return {s.data().begin(), s.data().end()};
}

double rvb_energy(const PauliSum& h, int depth, std::span<const double> theta) {
  return expectation(h, rvb_state(h.num_qubits(), depth, theta));
}

namespace {

// <H> on RVB states for the optimizer. The singlet product is built once and
// the Pauli sum is folded into one diagonal per distinct X mask, so an
// evaluation is the eSWAP layers plus one pass per mask.
class RvbObjective {
 public:
  RvbObjective(const PauliSum& h, int depth) : h_(h), psi0_(rvb_state(h.num_qubits(), 0, {})) {
    const int q = h.num_qubits();
    const Circuit c = rvb_circuit(q, depth, std::vector<double>(static_cast<std::size_t>(depth * q), 0.0));
    for (const auto& g : c.gates)
      if (g.kind == GateKind::ESWAP) eswaps_.push_back({g.q0, g.q1, static_cast<std::size_t>(g.param)});

    const std::size_t dim = psi0_.size();
    std::map<Mask, std::size_t> slot;
    for (const auto& t : h.terms()) slot.try_emplace(t.op.x, slot.size());
    if (slot.size() * dim > kMaxDiagonalEntries) return;
    masks_.resize(slot.size());
    for (const auto& [x, i] : slot) masks_[i] = x;
    diag_.assign(slot.size() * dim, Complex{});
    for (const auto& t : h.terms()) {
      static constexpr Complex kIPow[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
      const Complex c0 = t.coeff * kIPow[std::popcount(t.op.x & t.op.z) & 3];
      Complex* d = diag_.data() + slot.at(t.op.x) * dim;
      for (std::size_t b = 0; b < dim; ++b) d[b] += (std::popcount(t.op.z & static_cast<Mask>(b)) & 1) ? -c0 : c0;
    }
  }

  double operator()(std::span<const double> theta, std::vector<Complex>& psi) const {
    psi = psi0_;
    for (const auto& g : eswaps_) apply_eswap(psi, g.q0, g.q1, theta[g.slot]);
    if (masks_.empty()) return expectation(h_, psi);
    const std::size_t dim = psi.size();
    double acc = 0;
    for (std::size_t s = 0; s < masks_.size(); ++s) {
      const Complex* d = diag_.data() + s * dim;
      const std::size_t x = masks_[s];
      for (std::size_t b = 0; b < dim; ++b) acc += (std::conj(psi[b ^ x]) * psi[b] * d[b]).real();
    }
    return acc;
  }

 private:
  static constexpr std::size_t kMaxDiagonalEntries = std::size_t{1} << 22;

  struct Eswap {
    int q0;
    int q1;
    std::size_t slot;
  };

  const PauliSum& h_;
  std::vector<Complex> psi0_;
  std::vector<Eswap> eswaps_;
  std::vector<Mask> masks_;
  std::vector<Complex> diag_;
};

}  // namespace

OptimizationRun optimize(const PauliSum& h, int depth, const OptimizeConfig& config, std::span<const double> warm,
                         std::string hamiltonian_id) {
  const int q = h.num_qubits();
  if (depth < 0) throw std::invalid_argument("negative depth");
  if (config.restarts < 1) throw std::invalid_argument("at least one start is required");
  if (!(config.tol > 0)) throw std::invalid_argument("tolerance must be positive");
  const std::size_t n = static_cast<std::size_t>(depth) * static_cast<std::size_t>(q);
  if (warm.size() > n) throw std::invalid_argument(fmt::format("warm start has {} angles, circuit {}", warm.size(), n));

  NelderMeadOptions nm;
  nm.max_iters = config.max_iters > 0 ? config.max_iters : 2000 * depth * q;
  nm.tol = config.tol;
  nm.initial_step = config.initial_step;

  const CounterRng root(config.seed);
  const RvbObjective objective(h, depth);
  std::vector<NelderMeadResult> results(static_cast<std::size_t>(config.restarts));
  parallel_for(results.size(), [&](std::size_t start) {
    std::vector<double> x0(n, 0.0);
    if (start == 0) {
      std::copy(warm.begin(), warm.end(), x0.begin());
    } else {
      CounterRng rng = root.split(start);
      for (auto& t : x0) t = rng.uniform(0.0, 2 * std::numbers::pi);
    }
    std::vector<Complex> psi;
    results[start] = nelder_mead([&](std::span<const double> t) { return objective(t, psi); }, x0, nm);
  });

  std::size_t best = 0;
  for (std::size_t i = 1; i < results.size(); ++i)
    if (results[i].fx < results[best].fx) best = i;

  OptimizationRun run;
  run.hamiltonian_id = std::move(hamiltonian_id);
  run.num_qubits = q;
  run.depth = depth;
  run.theta_star = results[best].x;
  run.energy_star = results[best].fx;
  run.iterations = results[best].iterations;
  for (const auto& r : results) run.evaluations += r.evaluations;
  run.restarts = config.restarts;
  run.seed = config.seed;
  run.converged = results[best].converged;
  return run;
}

std::vector<ConvergencePoint> convergence_curve(const PauliSum& h, int max_depth, const OptimizeConfig& config,
                                                double e0, std::string hamiltonian_id) {
  if (max_depth < 0 || max_depth > 7) throw std::invalid_argument(fmt::format("max depth {} outside [0, 7]", max_depth));
  const auto hk = powers(h, 4);
  const auto ht = ht_limit(hk, HtEstimator::lanczos4);
  std::vector<ConvergencePoint> out;
  std::vector<double> warm;
  for (int d = 0; d <= max_depth; ++d) {
    ConvergencePoint pt;
    pt.run = optimize(h, d, config, warm, hamiltonian_id);
    warm = pt.run.theta_star;
    pt.n_cx = cnot_count(rvb_circuit(h.num_qubits(), d, pt.run.theta_star));
    const auto psi = rvb_state(h.num_qubits(), d, pt.run.theta_star);
    pt.report = make_report(statevector_moments(h, psi, 5), ht.value, e0, ht.degenerate);
    out.push_back(std::move(pt));
  }
  return out;
}

nlohmann::json to_json(const OptimizationRun& run) {
  return {{"hamiltonian_id", run.hamiltonian_id},
          {"q", run.num_qubits},
          {"D", run.depth},
          {"theta", run.theta_star},
          {"energy", run.energy_star},
          {"iterations", run.iterations},
          {"evaluations", run.evaluations},
          {"restarts", run.restarts},
          {"seed", run.seed},
          {"converged", run.converged}};
}

OptimizationRun optimization_run_from_json(const nlohmann::json& j) {
  OptimizationRun run;
  run.hamiltonian_id = j.value("hamiltonian_id", "");
  run.num_qubits = j.at("q").get<int>();
  run.depth = j.at("D").get<int>();
  run.theta_star = j.at("theta").get<std::vector<double>>();
  run.energy_star = j.at("energy").get<double>();
  run.iterations = j.value("iterations", 0);
  run.evaluations = j.value("evaluations", 0);
  run.restarts = j.value("restarts", 0);
  run.seed = j.value("seed", std::uint64_t{0});
  run.converged = j.value("converged", false);
  if (run.theta_star.size() != static_cast<std::size_t>(run.depth * run.num_qubits))
    throw std::invalid_argument("theta archive has the wrong number of angles");
  return run;
}

}  // namespace qcm
