#include "qcm/sim.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <fmt/format.h>

namespace qcm {
namespace {

void check_qubits(int q) {
  if (q < 1 || q > kMaxQubits) throw std::invalid_argument(fmt::format("qubit count {} outside [1, {}]", q, kMaxQubits));
}

void check_dm_cap(int q) {
  if (q > kDensityMatrixQubitCap)
    throw std::invalid_argument(
        fmt::format("density matrix on {} qubits exceeds the {}-qubit cap", q, kDensityMatrixQubitCap));
}

void check_probability(double p, std::string_view what) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument(fmt::format("{} = {} outside [0, 1]", what, p));
}

void require_dm(const QuantumState& s, std::string_view what) {
  if (!s.is_density_matrix()) throw std::invalid_argument(fmt::format("{} needs a density matrix", what));
}

// Kernels on a flat amplitude vector; `bit` indexes the flattened space, so a
// density matrix is a 2q-qubit vector with row bits above the column bits.
void kernel_1q(std::span<Complex> v, std::size_t bit, const Matrix2& u) {
  const std::size_t stride = std::size_t{1} << bit;
  for (std::size_t i = 0; i < v.size(); i += 2 * stride) {
    for (std::size_t j = i; j < i + stride; ++j) {
      const Complex a0 = v[j];
      const Complex a1 = v[j + stride];
      v[j] = u[0] * a0 + u[1] * a1;
      v[j + stride] = u[2] * a0 + u[3] * a1;
    }
  }
}

// Calls fn(i) for every index whose bits lo < hi are both clear.
template <class F>
void for_each_pair_base(std::size_t dim, std::size_t lo, std::size_t hi, F&& fn) {
  const std::size_t mlo = std::size_t{1} << lo;
  const std::size_t mhi = std::size_t{1} << hi;
  for (std::size_t i0 = 0; i0 < dim; i0 += 2 * mhi)
    for (std::size_t i1 = i0; i1 < i0 + mhi; i1 += 2 * mlo)
      for (std::size_t i = i1; i < i1 + mlo; ++i) fn(i);
}

void kernel_2q(std::span<Complex> v, std::size_t bit0, std::size_t bit1, const Matrix4& u) {
  const std::size_t m0 = std::size_t{1} << bit0;
  const std::size_t m1 = std::size_t{1} << bit1;
  for_each_pair_base(v.size(), std::min(bit0, bit1), std::max(bit0, bit1), [&](std::size_t i) {
    const std::size_t idx[4] = {i, i | m0, i | m1, i | m0 | m1};
    const Complex a[4] = {v[idx[0]], v[idx[1]], v[idx[2]], v[idx[3]]};
    for (int r = 0; r < 4; ++r) {
      v[idx[r]] = u[4 * r] * a[0] + u[4 * r + 1] * a[1] + u[4 * r + 2] * a[2] + u[4 * r + 3] * a[3];
    }
  });
}

// cos(t/2) I - i sin(t/2) SWAP without the zero entries of the general kernel.
void kernel_eswap(std::span<Complex> v, std::size_t bit0, std::size_t bit1, double theta) {
  const double c = std::cos(theta / 2);
  const double s = std::sin(theta / 2);
  const Complex diag{c, -s};
  const std::size_t m0 = std::size_t{1} << bit0;
  const std::size_t m1 = std::size_t{1} << bit1;
  for_each_pair_base(v.size(), std::min(bit0, bit1), std::max(bit0, bit1), [&](std::size_t i) {
    v[i] *= diag;
    v[i | m0 | m1] *= diag;
    const Complex a = v[i | m0];
    const Complex b = v[i | m1];
    v[i | m0] = {c * a.real() + s * b.imag(), c * a.imag() - s * b.real()};
    v[i | m1] = {c * b.real() + s * a.imag(), c * b.imag() - s * a.real()};
  });
}

template <std::size_t N>
std::array<Complex, N> conj_all(const std::array<Complex, N>& m) {
  std::array<Complex, N> out;
  for (std::size_t i = 0; i < N; ++i) out[i] = std::conj(m[i]);
  return out;
}

Eigen::MatrixXcd as_matrix(const QuantumState& rho) {
  const auto n = static_cast<Eigen::Index>(rho.dim());
  // Storage is row-major; the transpose of a Hermitian matrix has the same spectrum.
  return Eigen::Map<const Eigen::MatrixXcd>(rho.data().data(), n, n);
}

void check_gate_qubit(const QuantumState& s, int q) {
  if (q < 0 || q >= s.num_qubits())
    throw std::invalid_argument(fmt::format("gate qubit {} outside [0, {})", q, s.num_qubits()));
}

}  // namespace

QuantumState::QuantumState(int num_qubits, StateKind kind, std::vector<Complex> data)
    : num_qubits_(num_qubits), kind_(kind), data_(std::move(data)) {}

QuantumState QuantumState::zero(int num_qubits, StateKind kind) {
  check_qubits(num_qubits);
  const std::size_t dim = std::size_t{1} << num_qubits;
  if (kind == StateKind::density_matrix) {
    check_dm_cap(num_qubits);
    std::vector<Complex> rho(dim * dim);
    rho[0] = 1.0;
    return {num_qubits, kind, std::move(rho)};
  }
  std::vector<Complex> psi(dim);
  psi[0] = 1.0;
  return {num_qubits, kind, std::move(psi)};
}

QuantumState QuantumState::from_statevector(std::vector<Complex> amplitudes) {
  const std::size_t n = amplitudes.size();
  if (n < 2 || (n & (n - 1)) != 0) throw std::invalid_argument(fmt::format("{} amplitudes is not a power of two", n));
  const int q = std::countr_zero(n);
  check_qubits(q);
  return {q, StateKind::statevector, std::move(amplitudes)};
}

QuantumState QuantumState::from_density_matrix(int num_qubits, std::vector<Complex> rho) {
  check_qubits(num_qubits);
  check_dm_cap(num_qubits);
  const std::size_t dim = std::size_t{1} << num_qubits;
  if (rho.size() != dim * dim)
    throw std::invalid_argument(fmt::format("density matrix has {} entries, expected {}", rho.size(), dim * dim));
  return {num_qubits, StateKind::density_matrix, std::move(rho)};
}

QuantumState QuantumState::maximally_mixed(int num_qubits) {
  check_qubits(num_qubits);
  check_dm_cap(num_qubits);
  const std::size_t dim = std::size_t{1} << num_qubits;
  std::vector<Complex> rho(dim * dim);
  for (std::size_t i = 0; i < dim; ++i) rho[i * dim + i] = 1.0 / static_cast<double>(dim);
  return {num_qubits, StateKind::density_matrix, std::move(rho)};
}

QuantumState QuantumState::to_density_matrix() const {
  if (is_density_matrix()) return *this;
  check_dm_cap(num_qubits_);
  const std::size_t n = dim();
  std::vector<Complex> rho(n * n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) rho[r * n + c] = data_[r] * std::conj(data_[c]);
  return {num_qubits_, StateKind::density_matrix, std::move(rho)};
}

double QuantumState::trace() const {
  double t = 0;
  if (is_density_matrix()) {
    for (std::size_t i = 0; i < dim(); ++i) t += data_[i * dim() + i].real();
  } else {
    for (const auto& a : data_) t += std::norm(a);
  }
  return t;
}

std::vector<double> QuantumState::probabilities() const {
  std::vector<double> p(dim());
  for (std::size_t i = 0; i < dim(); ++i)
    p[i] = is_density_matrix() ? data_[i * dim() + i].real() : std::norm(data_[i]);
  return p;
}

namespace gates {
Matrix2 x() { return {0, 1, 1, 0}; }
Matrix2 h() {
  const double r = std::numbers::sqrt2 / 2;
  return {r, r, r, -r};
}
Matrix2 s() { return {1, 0, 0, Complex{0, 1}}; }
Matrix2 sdg() { return {1, 0, 0, Complex{0, -1}}; }
Matrix2 rz(double theta) { return {std::polar(1.0, -theta / 2), 0, 0, std::polar(1.0, theta / 2)}; }
Matrix4 cnot() { return {1, 0, 0, 0, 0, 0, 0, 1, 0, 0, 1, 0, 0, 1, 0, 0}; }
Matrix4 swap() { return {1, 0, 0, 0, 0, 0, 1, 0, 0, 1, 0, 0, 0, 0, 0, 1}; }
Matrix4 eswap(double theta) {
  const Complex c = std::cos(theta / 2);
  const Complex s = Complex{0, -std::sin(theta / 2)};
  Matrix4 u{};
  const Matrix4 sw = swap();
  for (int i = 0; i < 16; ++i) u[static_cast<std::size_t>(i)] = s * sw[static_cast<std::size_t>(i)];
  for (int i = 0; i < 4; ++i) u[static_cast<std::size_t>(5 * i)] += c;
  return u;
}
}  // namespace gates

void apply_gate(QuantumState& s, const Matrix2& u, int qubit) {
  check_gate_qubit(s, qubit);
  const auto b = static_cast<std::size_t>(qubit);
  if (s.is_density_matrix()) {
    kernel_1q(s.data(), b + static_cast<std::size_t>(s.num_qubits()), u);
    kernel_1q(s.data(), b, conj_all(u));
  } else {
    kernel_1q(s.data(), b, u);
  }
}

void apply_eswap(std::span<Complex> psi, int q0, int q1, double theta) {
  kernel_eswap(psi, static_cast<std::size_t>(q0), static_cast<std::size_t>(q1), theta);
}

void apply_gate(QuantumState& s, const Matrix4& u, int q0, int q1) {
  check_gate_qubit(s, q0);
  check_gate_qubit(s, q1);
  if (q0 == q1) throw std::invalid_argument("two-qubit gate on a single qubit");
  const auto b0 = static_cast<std::size_t>(q0);
  const auto b1 = static_cast<std::size_t>(q1);
  if (s.is_density_matrix()) {
    const auto q = static_cast<std::size_t>(s.num_qubits());
    kernel_2q(s.data(), b0 + q, b1 + q, u);
    kernel_2q(s.data(), b0, b1, conj_all(u));
  } else {
    kernel_2q(s.data(), b0, b1, u);
  }
}

std::string_view channel_name(NoiseChannel c) {
  switch (c) {
    case NoiseChannel::none: return "none";
    case NoiseChannel::white: return "white";
    case NoiseChannel::depolarize: return "depolarize";
    case NoiseChannel::dephase: return "dephase";
    case NoiseChannel::device: return "device";
  }
  return "none";
}

NoiseChannel channel_from_name(std::string_view name) {
  for (auto c : {NoiseChannel::none, NoiseChannel::white, NoiseChannel::depolarize, NoiseChannel::dephase,
                 NoiseChannel::device})
    if (channel_name(c) == name) return c;
  throw std::invalid_argument(fmt::format("unknown noise channel '{}'", name));
}

void NoiseSpec::validate() const {
  check_probability(p, "p");
  check_probability(device.eps_cx, "eps_cx");
  check_probability(device.eps_1q, "eps_1q");
  check_probability(device.alpha, "alpha");
  if (!(device.readout_flip >= 0.0 && device.readout_flip <= 0.5))
    throw std::invalid_argument(fmt::format("readout_flip = {} outside [0, 0.5]", device.readout_flip));
}

double NoiseSpec::effective_readout_flip() const {
  return channel == NoiseChannel::device ? device.alpha * device.readout_flip : 0.0;
}

nlohmann::json to_json(const DeviceParams& d) {
  return {{"eps_cx", d.eps_cx}, {"eps_1q", d.eps_1q}, {"readout_flip", d.readout_flip}, {"alpha", d.alpha}};
}

DeviceParams device_params_from_json(const nlohmann::json& j) {
  DeviceParams d;
  d.eps_cx = j.value("eps_cx", d.eps_cx);
  d.eps_1q = j.value("eps_1q", d.eps_1q);
  d.readout_flip = j.value("readout_flip", d.readout_flip);
  d.alpha = j.value("alpha", d.alpha);
  NoiseSpec{NoiseChannel::device, 0.0, d}.validate();
  return d;
}

QuantumState apply_circuit(const Circuit& c, const QuantumState& s, const std::optional<NoiseSpec>& noise) {
  c.validate();
  if (c.num_qubits != s.num_qubits())
    throw std::invalid_argument(fmt::format("circuit has {} qubits, state {}", c.num_qubits, s.num_qubits()));
  const NoiseSpec spec = noise.value_or(NoiseSpec{});
  spec.validate();
  const bool device = spec.channel == NoiseChannel::device;
  if (device && !s.is_density_matrix())
    throw std::invalid_argument("device noise needs a density-matrix state");

  QuantumState out = s;
  const double p2 = device ? spec.device.alpha * spec.device.eps_cx : 0.0;
  const double p2_eswap = 1.0 - std::pow(1.0 - p2, 3);
  const double p1 = device ? spec.device.alpha * spec.device.eps_1q : 0.0;
  for (const auto& g : c.gates) {
    switch (g.kind) {
      case GateKind::X: apply_gate(out, gates::x(), g.q0); break;
      case GateKind::H: apply_gate(out, gates::h(), g.q0); break;
      case GateKind::S: apply_gate(out, gates::s(), g.q0); break;
      case GateKind::Sdg: apply_gate(out, gates::sdg(), g.q0); break;
      case GateKind::RZ: apply_gate(out, gates::rz(c.angle_of(g)), g.q0); break;
      case GateKind::CNOT: apply_gate(out, gates::cnot(), g.q0, g.q1); break;
      case GateKind::ESWAP:
        if (out.is_density_matrix()) {
          apply_gate(out, gates::eswap(c.angle_of(g)), g.q0, g.q1);
        } else {
          kernel_eswap(out.data(), static_cast<std::size_t>(g.q0), static_cast<std::size_t>(g.q1), c.angle_of(g));
        }
        break;
    }
    if (!device) continue;
    if (g.kind == GateKind::CNOT && p2 > 0) depolarize_pair(out, g.q0, g.q1, p2);
    else if (g.kind == GateKind::ESWAP && p2 > 0) depolarize_pair(out, g.q0, g.q1, p2_eswap);
    else if (!is_two_qubit(g.kind) && p1 > 0) depolarize_qubit(out, g.q0, p1);
  }
  switch (spec.channel) {
    case NoiseChannel::white: return channel_global(out, spec.p);
    case NoiseChannel::depolarize: return channel_local(out, spec.p, LocalChannel::depolarize);
    case NoiseChannel::dephase: return channel_local(out, spec.p, LocalChannel::dephase);
    default: return out;
  }
}

QuantumState channel_global(const QuantumState& s, double p) {
  check_probability(p, "p");
  QuantumState out = s.to_density_matrix();
  const std::size_t n = out.dim();
  auto d = out.data();
  for (auto& a : d) a *= (1.0 - p);
  for (std::size_t i = 0; i < n; ++i) d[i * n + i] += p / static_cast<double>(n);
  return out;
}

QuantumState channel_local(const QuantumState& s, double p, LocalChannel kind) {
  check_probability(p, "p");
  QuantumState out = s.to_density_matrix();
  for (int q = 0; q < out.num_qubits(); ++q) {
    if (kind == LocalChannel::depolarize)
      depolarize_qubit(out, q, p);
    else
      dephase_qubit(out, q, p);
  }
  return out;
}

void depolarize_qubit(QuantumState& rho, int qubit, double p) {
  require_dm(rho, "depolarize");
  check_probability(p, "p");
  check_gate_qubit(rho, qubit);
  const std::size_t q = static_cast<std::size_t>(rho.num_qubits());
  const std::size_t col = std::size_t{1} << qubit;
  const std::size_t row = col << q;
  auto d = rho.data();
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (i & (row | col)) continue;
    const Complex avg = 0.5 * (d[i] + d[i | row | col]);
    d[i] = (1 - p) * d[i] + p * avg;
    d[i | row | col] = (1 - p) * d[i | row | col] + p * avg;
    d[i | row] *= (1 - p);
    d[i | col] *= (1 - p);
  }
}

void dephase_qubit(QuantumState& rho, int qubit, double p) {
  require_dm(rho, "dephase");
  check_probability(p, "p");
  check_gate_qubit(rho, qubit);
  const std::size_t q = static_cast<std::size_t>(rho.num_qubits());
  const std::size_t col = std::size_t{1} << qubit;
  const std::size_t row = col << q;
  auto d = rho.data();
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (i & (row | col)) continue;
    d[i | row] *= (1 - p);
    d[i | col] *= (1 - p);
  }
}

void depolarize_pair(QuantumState& rho, int a, int b, double p) {
  require_dm(rho, "depolarize");
  check_probability(p, "p");
  check_gate_qubit(rho, a);
  check_gate_qubit(rho, b);
  if (a == b) throw std::invalid_argument("pair channel on a single qubit");
  const std::size_t q = static_cast<std::size_t>(rho.num_qubits());
  const std::size_t ca = std::size_t{1} << a;
  const std::size_t cb = std::size_t{1} << b;
  const std::size_t ra = ca << q;
  const std::size_t rb = cb << q;
  const std::size_t rows[4] = {0, ra, rb, ra | rb};
  const std::size_t cols[4] = {0, ca, cb, ca | cb};
  auto d = rho.data();
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (i & (ra | rb | ca | cb)) continue;
    Complex traced{};
    for (int s = 0; s < 4; ++s) traced += d[i | rows[s] | cols[s]];
    for (int r = 0; r < 4; ++r) {
      for (int c = 0; c < 4; ++c) {
        Complex& e = d[i | rows[r] | cols[c]];
        e *= (1 - p);
        if (r == c) e += 0.25 * p * traced;
      }
    }
  }
}

double fidelity(const QuantumState& s, std::span<const Complex> phi0) {
  if (phi0.size() != s.dim())
    throw std::invalid_argument(fmt::format("reference has {} amplitudes, state dimension {}", phi0.size(), s.dim()));
  const std::size_t n = s.dim();
  if (!s.is_density_matrix()) {
    Complex overlap{};
    for (std::size_t i = 0; i < n; ++i) overlap += std::conj(phi0[i]) * s.data()[i];
    return std::norm(overlap);
  }
  Complex f{};
  for (std::size_t r = 0; r < n; ++r) {
    Complex row{};
    for (std::size_t c = 0; c < n; ++c) row += s.entry(r, c) * phi0[c];
    f += std::conj(phi0[r]) * row;
  }
  return std::clamp(f.real(), 0.0, 1.0);
}

std::vector<double> readout_noise(std::span<const double> probs, double flip) {
  if (!(flip >= 0.0 && flip <= 0.5)) throw std::invalid_argument(fmt::format("flip = {} outside [0, 0.5]", flip));
  std::vector<double> out(probs.begin(), probs.end());
  if (flip == 0.0) return out;
  for (std::size_t bit = 1; bit < out.size(); bit <<= 1) {
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (i & bit) continue;
      const double p0 = out[i];
      const double p1 = out[i | bit];
      out[i] = (1 - flip) * p0 + flip * p1;
      out[i | bit] = flip * p0 + (1 - flip) * p1;
    }
  }
  return out;
}

double expectation_exact(const PauliSum& h, const QuantumState& s) {
  if (h.num_qubits() != s.num_qubits())
    throw std::invalid_argument(fmt::format("operator on {} qubits, state on {}", h.num_qubits(), s.num_qubits()));
  if (!s.is_density_matrix()) return expectation(h, s.data());
  Complex acc{};
  for (const auto& t : h.terms()) acc += t.coeff * expectation_dm(t.op, s.data(), s.num_qubits());
  if (std::abs(acc.imag()) > 1e-9)
    throw std::domain_error(fmt::format("expectation has imaginary part {:.3e}; sum is not Hermitian", acc.imag()));
  return acc.real();
}

double trace_distance(const QuantumState& a, const QuantumState& b) {
  if (a.num_qubits() != b.num_qubits()) throw std::invalid_argument("trace distance between different qubit counts");
  const Eigen::MatrixXcd diff = as_matrix(a.to_density_matrix()) - as_matrix(b.to_density_matrix());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(diff, Eigen::EigenvaluesOnly);
  return 0.5 * solver.eigenvalues().cwiseAbs().sum();
}

double min_eigenvalue(const QuantumState& rho) {
  require_dm(rho, "min_eigenvalue");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(as_matrix(rho), Eigen::EigenvaluesOnly);
  return solver.eigenvalues()(0);
}

}  // namespace qcm
