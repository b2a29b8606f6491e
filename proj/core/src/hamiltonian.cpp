#include "qcm/hamiltonian.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <set>
#include <stdexcept>
#include <utility>

#include <fmt/format.h>

#include "qcm/rng.hpp"

namespace qcm {
namespace {

constexpr Complex kIPow[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};

double norm(std::span<const Complex> v) {
  double s = 0;
  for (const auto& a : v) s += std::norm(a);
  return std::sqrt(s);
}

Complex dot(std::span<const Complex> a, std::span<const Complex> b) {
  Complex s{};
  for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

}  // namespace

void SpinGraph::validate() const {
  if (num_qubits < 2 || num_qubits > kMaxQubits)
    throw std::invalid_argument(fmt::format("spin graph qubit count {} outside [2, {}]", num_qubits, kMaxQubits));
  std::set<std::pair<int, int>> seen;
  for (const auto& e : edges) {
    if (e.i < 0 || e.j < 0 || e.i >= num_qubits || e.j >= num_qubits || e.i == e.j)
      throw std::invalid_argument(fmt::format("invalid edge ({}, {}) on {} qubits", e.i, e.j, num_qubits));
    if (!seen.insert(std::minmax(e.i, e.j)).second)
      throw std::invalid_argument(fmt::format("duplicate edge ({}, {})", e.i, e.j));
  }
}

SpinGraph ring_graph(int num_qubits, double j) {
  if (num_qubits < 2) throw std::invalid_argument("ring needs at least 2 qubits");
  SpinGraph g{num_qubits, {}};
  if (num_qubits == 2) {
    g.edges.push_back({0, 1, j, j, j});
    return g;
  }
  for (int i = 0; i < num_qubits; ++i) g.edges.push_back({i, (i + 1) % num_qubits, j, j, j});
  return g;
}

PauliSum to_pauli_sum(const SpinGraph& graph) {
  graph.validate();
  const double scale = 1.0 / (4.0 * graph.num_qubits);
  std::vector<PauliTerm> terms;
  for (const auto& e : graph.edges) {
    const Mask m = (Mask{1} << e.i) | (Mask{1} << e.j);
    terms.push_back({{m, 0}, scale * e.jx});
    terms.push_back({{m, m}, scale * e.jy});
    terms.push_back({{0, m}, scale * e.jz});
  }
  return PauliSum::from_terms(graph.num_qubits, terms);
}

PauliSum heisenberg_ring(int num_qubits) { return to_pauli_sum(ring_graph(num_qubits)); }

PauliSum heisenberg_ring(int num_qubits, std::span<const Edge> couplings) {
  SpinGraph g = ring_graph(num_qubits);
  if (couplings.size() != g.edges.size())
    throw std::invalid_argument(fmt::format("ring on {} qubits has {} edges, got {} couplings", num_qubits,
                                            g.edges.size(), couplings.size()));
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    g.edges[e].jx = couplings[e].jx;
    g.edges[e].jy = couplings[e].jy;
    g.edges[e].jz = couplings[e].jz;
  }
  return to_pauli_sum(g);
}

SpinGraph random_heisenberg_instance(int num_qubits, std::uint64_t instance_seed) {
  SpinGraph g = ring_graph(num_qubits);
  CounterRng rng(instance_seed);
  for (auto& e : g.edges) {
    const double j = rng.uniform();
    e.jx = e.jy = e.jz = j;
  }
  return g;
}

std::vector<EnsembleInstance> random_heisenberg_ensemble(int num_qubits, int count, std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("ensemble count must be >= 1");
  std::vector<EnsembleInstance> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    const std::uint64_t s = CounterRng::mix(seed + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(k + 1));
    out.push_back({s, random_heisenberg_instance(num_qubits, s)});
  }
  return out;
}

DenseHamiltonian random_gue(int dim, std::uint64_t seed) {
  if (dim < 1 || dim > kMaxDenseDim)
    throw std::invalid_argument(fmt::format("GUE dimension {} outside [1, {}]", dim, kMaxDenseDim));
  CounterRng rng(seed);
  Eigen::MatrixXcd a(dim, dim);
  for (int c = 0; c < dim; ++c)
    for (int r = 0; r < dim; ++r) a(r, c) = rng.complex_normal();
  DenseHamiltonian h;
  h.matrix = (a + a.adjoint()) * 0.5;
  return h;
}

Eigen::MatrixXcd to_dense(const PauliSum& h) {
  if (h.num_qubits() > 12) throw std::invalid_argument("dense matrices are limited to 12 qubits");
  const std::size_t dim = std::size_t{1} << h.num_qubits();
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  for (const auto& t : h.terms()) {
    const Complex c = t.coeff * kIPow[std::popcount(t.op.x & t.op.z) & 3];
    for (std::size_t b = 0; b < dim; ++b) {
      const bool odd = std::popcount(t.op.z & static_cast<Mask>(b)) & 1;
      m(static_cast<Eigen::Index>(b ^ t.op.x), static_cast<Eigen::Index>(b)) += odd ? -c : c;
    }
  }
  return m;
}

GroundState exact_ground(const DenseHamiltonian& h) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(h.matrix);
  if (solver.info() != Eigen::Success) throw std::runtime_error("dense eigensolver failed");
  GroundState g;
  g.energy = solver.eigenvalues()(0);
  const auto v = solver.eigenvectors().col(0);
  g.state.assign(v.data(), v.data() + v.size());
  return g;
}

GroundState exact_ground_dense(const PauliSum& h) { return exact_ground(DenseHamiltonian{to_dense(h)}); }

GroundState exact_ground(const PauliSum& h) {
  return h.num_qubits() <= 8 ? exact_ground_dense(h) : exact_ground_lanczos(h);
}

GroundState exact_ground_lanczos(const PauliSum& h, const LanczosOptions& options) {
  const std::size_t dim = std::size_t{1} << h.num_qubits();
  int m = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(options.krylov_dim), dim));
  // Keep the Krylov basis within ~1 GiB.
  while (m > 8 && static_cast<double>(m) * static_cast<double>(dim) * sizeof(Complex) > 1.0e9) m /= 2;

  CounterRng rng(options.seed);
  std::vector<Complex> start(dim);
  for (auto& a : start) a = rng.complex_normal();
  {
    const double n = norm(start);
    for (auto& a : start) a /= n;
  }

  std::vector<std::vector<Complex>> basis;
  std::vector<Complex> w(dim), x(dim), hx(dim);
  int matvecs = 0;
  while (true) {
    basis.clear();
    basis.push_back(start);
    std::vector<double> alpha, beta;
    for (int j = 0; j < m; ++j) {
      apply(h, basis[static_cast<std::size_t>(j)], w);
      ++matvecs;
      const auto& vj = basis[static_cast<std::size_t>(j)];
      const double a = dot(vj, w).real();
      alpha.push_back(a);
      // Full reorthogonalization, two passes.
      for (int pass = 0; pass < 2; ++pass) {
        for (const auto& vi : basis) {
          const Complex c = dot(vi, w);
          for (std::size_t k = 0; k < dim; ++k) w[k] -= c * vi[k];
        }
      }
      const double b = norm(w);
      if (j == m - 1 || b < 1e-12 * (std::abs(a) + 1.0)) break;
      beta.push_back(b);
      for (auto& c : w) c /= b;
      basis.push_back(w);
    }
    const auto n = static_cast<Eigen::Index>(alpha.size());
    Eigen::VectorXd diag = Eigen::Map<Eigen::VectorXd>(alpha.data(), n);
    Eigen::VectorXd sub = n > 1 ? Eigen::VectorXd(Eigen::Map<Eigen::VectorXd>(beta.data(), n - 1))
                                : Eigen::VectorXd(0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri;
    tri.computeFromTridiagonal(diag, sub);
    const Eigen::VectorXd y = tri.eigenvectors().col(0);

    std::fill(x.begin(), x.end(), Complex{});
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& vi = basis[static_cast<std::size_t>(i)];
      for (std::size_t k = 0; k < dim; ++k) x[k] += y(i) * vi[k];
    }
    const double xn = norm(x);
    for (auto& a : x) a /= xn;
    apply(h, x, hx);
    ++matvecs;
    const double energy = dot(x, hx).real();
    double r = 0;
    for (std::size_t k = 0; k < dim; ++k) r += std::norm(hx[k] - energy * x[k]);
    r = std::sqrt(r);
    if (r <= options.residual_tol) return {energy, x, matvecs};
    if (matvecs >= options.max_matvecs)
      throw std::runtime_error(fmt::format("Lanczos did not converge in {} matvecs (residual {:.3e})", matvecs, r));
    start = x;
  }
}

long double power_sum(int r, std::uint64_t n) {
  const long double N = static_cast<long double>(n);
  switch (r) {
    case 0: return N + 1;
    case 1: return N * (N + 1) / 2;
    case 2: return N * (N + 1) * (2 * N + 1) / 6;
    case 3: { const long double s = N * (N + 1) / 2; return s * s; }
    case 4: return N * (N + 1) * (2 * N + 1) * (3 * N * N + 3 * N - 1) / 30;
    case 5: return N * N * (N + 1) * (N + 1) * (2 * N * N + 2 * N - 1) / 12;
    default: throw std::invalid_argument(fmt::format("power sum order {} outside [0, 5]", r));
  }
}

long double oscillator_trace(const OscillatorSpectrum& spec, int k) {
  if (k < 1 || k > 5) throw std::invalid_argument(fmt::format("trace power {} outside [1, 5]", k));
  if (spec.num_levels < 1) throw std::invalid_argument("spectrum needs at least one level");
  const long double e0 = spec.ground_energy;
  const long double gap = spec.gap;
  const std::uint64_t n = spec.num_levels - 1;
  long double total = 0;
  long double binom = 1;
  for (int r = 0; r <= k; ++r) {
    if (r > 0) binom = binom * (k - r + 1) / r;
    if (r > 0 && gap == 0) break;
    total += binom * std::pow(e0, k - r) * std::pow(gap, r) * power_sum(r, n);
  }
  return total;
}

nlohmann::json to_json(const SpinGraph& graph) {
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& e : graph.edges)
    edges.push_back({{"i", e.i}, {"j", e.j}, {"jx", e.jx}, {"jy", e.jy}, {"jz", e.jz}});
  return {{"q", graph.num_qubits}, {"edges", std::move(edges)}};
}

SpinGraph spin_graph_from_json(const nlohmann::json& j) {
  SpinGraph g;
  g.num_qubits = j.at("q").get<int>();
  for (const auto& e : j.at("edges")) {
    g.edges.push_back({e.at("i").get<int>(), e.at("j").get<int>(), e.at("jx").get<double>(),
                       e.at("jy").get<double>(), e.at("jz").get<double>()});
  }
  g.validate();
  return g;
}

}  // namespace qcm
