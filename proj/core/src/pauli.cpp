#include "qcm/pauli.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include <fmt/format.h>

#include "qcm/parallel.hpp"

namespace qcm {
namespace {

constexpr Complex kIPow[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};

int popcount(Mask m) { return std::popcount(m); }

// Fixed chunk count so that the summation order, and therefore every bit of
// the result, is independent of the worker count.
constexpr std::size_t kProductChunks = 32;

using TermMap = std::unordered_map<std::uint64_t, Complex>;

PauliString from_key(std::uint64_t key) {
  return {static_cast<Mask>(key >> 32), static_cast<Mask>(key & 0xffffffffu)};
}

std::vector<PauliTerm> finalize(const TermMap& map) {
  std::vector<PauliTerm> out;
  out.reserve(map.size());
  for (const auto& [key, c] : map) {
    if (std::abs(c) >= kPruneThreshold) out.push_back({from_key(key), c});
  }
  std::sort(out.begin(), out.end(), [](const PauliTerm& a, const PauliTerm& b) { return a.op < b.op; });
  return out;
}

void check_dims(int q, std::size_t size) {
  if (size != (std::size_t{1} << q))
    throw std::invalid_argument(fmt::format("state has {} amplitudes, expected 2^{}", size, q));
}

}  // namespace

PauliProduct multiply(PauliString a, PauliString b) {
  PauliString r{a.x ^ b.x, a.z ^ b.z};
  int phase = popcount(a.x & a.z) + popcount(b.x & b.z) + 2 * popcount(a.z & b.x) - popcount(r.x & r.z);
  return {r, ((phase % 4) + 4) % 4};
}

bool commutes(PauliString a, PauliString b) {
  return ((popcount(a.x & b.z) + popcount(a.z & b.x)) & 1) == 0;
}

bool qubitwise_commutes(PauliString a, PauliString b) {
  const Mask shared = a.support() & b.support();
  return (((a.x ^ b.x) | (a.z ^ b.z)) & shared) == 0;
}

std::string to_string(PauliString p, int num_qubits) {
  std::string s(static_cast<std::size_t>(num_qubits), 'I');
  for (int j = 0; j < num_qubits; ++j) {
    const bool x = (p.x >> j) & 1u;
    const bool z = (p.z >> j) & 1u;
    s[static_cast<std::size_t>(j)] = x ? (z ? 'Y' : 'X') : (z ? 'Z' : 'I');
  }
  return s;
}

PauliString parse_pauli_string(std::string_view letters) {
  if (letters.size() > static_cast<std::size_t>(kMaxQubits))
    throw std::invalid_argument(fmt::format("Pauli string longer than {} qubits", kMaxQubits));
  PauliString p;
  for (std::size_t j = 0; j < letters.size(); ++j) {
    const Mask bit = Mask{1} << j;
    switch (letters[j]) {
      case 'I': case '_': break;
      case 'X': p.x |= bit; break;
      case 'Y': p.x |= bit; p.z |= bit; break;
      case 'Z': p.z |= bit; break;
      default:
        throw std::invalid_argument(fmt::format("bad Pauli letter '{}' in \"{}\"", letters[j], letters));
    }
  }
  return p;
}

PauliSum::PauliSum(int num_qubits) : num_qubits_(num_qubits) {
  if (num_qubits < 1 || num_qubits > kMaxQubits)
    throw std::invalid_argument(fmt::format("qubit count {} outside [1, {}]", num_qubits, kMaxQubits));
}

PauliSum PauliSum::from_terms(int num_qubits, std::span<const PauliTerm> terms) {
  PauliSum out(num_qubits);
  const Mask valid = num_qubits == 32 ? ~Mask{0} : ((Mask{1} << num_qubits) - 1);
  TermMap map;
  map.reserve(terms.size());
  for (const auto& t : terms) {
    if ((t.op.support() & ~valid) != 0)
      throw std::invalid_argument(fmt::format("term acts outside {} qubits", num_qubits));
    map[t.op.key()] += t.coeff;
  }
  out.terms_ = finalize(map);
  return out;
}

PauliSum PauliSum::identity(int num_qubits, Complex coeff) {
  const PauliTerm t{{}, coeff};
  return from_terms(num_qubits, std::span(&t, 1));
}

Complex PauliSum::coefficient(PauliString op) const {
  auto it = std::lower_bound(terms_.begin(), terms_.end(), op,
                             [](const PauliTerm& t, PauliString o) { return t.op < o; });
  return (it != terms_.end() && it->op == op) ? it->coeff : Complex{};
}

double PauliSum::max_imag() const {
  double m = 0;
  for (const auto& t : terms_) m = std::max(m, std::abs(t.coeff.imag()));
  return m;
}

bool operator==(const PauliSum& a, const PauliSum& b) {
  if (a.num_qubits_ != b.num_qubits_ || a.terms_.size() != b.terms_.size()) return false;
  for (std::size_t i = 0; i < a.terms_.size(); ++i) {
    if (a.terms_[i].op != b.terms_[i].op || a.terms_[i].coeff != b.terms_[i].coeff) return false;
  }
  return true;
}

PauliSum operator+(const PauliSum& a, const PauliSum& b) {
  if (a.num_qubits() != b.num_qubits()) throw std::invalid_argument("qubit count mismatch in PauliSum addition");
  std::vector<PauliTerm> all(a.terms().begin(), a.terms().end());
  all.insert(all.end(), b.terms().begin(), b.terms().end());
  return PauliSum::from_terms(a.num_qubits(), all);
}

PauliSum operator*(Complex s, const PauliSum& a) {
  std::vector<PauliTerm> scaled(a.terms().begin(), a.terms().end());
  for (auto& t : scaled) t.coeff *= s;
  return PauliSum::from_terms(a.num_qubits(), scaled);
}

PauliSum multiply(const PauliSum& a, const PauliSum& b) {
  if (a.num_qubits() != b.num_qubits())
    throw std::invalid_argument(
        fmt::format("qubit count mismatch: {} vs {}", a.num_qubits(), b.num_qubits()));
  const auto lhs = a.terms();
  const auto rhs = b.terms();
  const std::size_t chunks = std::min(kProductChunks, std::max<std::size_t>(1, lhs.size()));
  std::vector<TermMap> partial(chunks);
  parallel_for(chunks, [&](std::size_t c) {
    const std::size_t lo = lhs.size() * c / chunks;
    const std::size_t hi = lhs.size() * (c + 1) / chunks;
    auto& map = partial[c];
    map.reserve((hi - lo) * rhs.size());
    for (std::size_t i = lo; i < hi; ++i) {
      for (const auto& r : rhs) {
        const auto prod = multiply(lhs[i].op, r.op);
        map[prod.result.key()] += kIPow[prod.phase] * lhs[i].coeff * r.coeff;
      }
    }
  });
  TermMap merged = std::move(partial[0]);
  for (std::size_t c = 1; c < chunks; ++c) {
    for (const auto& [key, v] : partial[c]) merged[key] += v;
    TermMap().swap(partial[c]);
  }
  PauliSum out(a.num_qubits());
  out.terms_ = finalize(merged);
  return out;
}

PauliSum power(const PauliSum& h, int n) {
  if (n < 1 || n > 5) throw std::invalid_argument(fmt::format("power {} outside [1, 5]", n));
  PauliSum acc = h;
  for (int k = 2; k <= n; ++k) acc = multiply(acc, h);
  return acc;
}

std::vector<PauliSum> powers(const PauliSum& h, int max_power) {
  if (max_power < 1 || max_power > 5) throw std::invalid_argument(fmt::format("power {} outside [1, 5]", max_power));
  std::vector<PauliSum> out{h};
  for (int k = 2; k <= max_power; ++k) out.push_back(multiply(out.back(), h));
  return out;
}

double identity_coefficient(const PauliSum& h) { return h.coefficient(PauliString{}).real(); }

void apply(const PauliSum& h, std::span<const Complex> in, std::span<Complex> out) {
  check_dims(h.num_qubits(), in.size());
  check_dims(h.num_qubits(), out.size());
  std::fill(out.begin(), out.end(), Complex{});
  const std::size_t dim = in.size();
  for (const auto& t : h.terms()) {
    const Complex c = t.coeff * kIPow[popcount(t.op.x & t.op.z) & 3];
    const Mask x = t.op.x;
    const Mask z = t.op.z;
    for (std::size_t b = 0; b < dim; ++b) {
      const Complex v = c * in[b];
      if (popcount(z & static_cast<Mask>(b)) & 1)
        out[b ^ x] -= v;
      else
        out[b ^ x] += v;
    }
  }
}

Complex expectation(PauliString p, std::span<const Complex> psi) {
  const std::size_t dim = psi.size();
  Complex acc{};
  for (std::size_t b = 0; b < dim; ++b) {
    const Complex v = std::conj(psi[b ^ p.x]) * psi[b];
    if (popcount(p.z & static_cast<Mask>(b)) & 1)
      acc -= v;
    else
      acc += v;
  }
  return acc * kIPow[popcount(p.x & p.z) & 3];
}

double expectation(const PauliSum& h, std::span<const Complex> psi) {
  check_dims(h.num_qubits(), psi.size());
  Complex acc{};
  for (const auto& t : h.terms()) acc += t.coeff * expectation(t.op, psi);
  if (std::abs(acc.imag()) > 1e-9)
    throw std::domain_error(fmt::format("expectation has imaginary part {:.3e}; sum is not Hermitian", acc.imag()));
  return acc.real();
}

Complex expectation_dm(PauliString p, std::span<const Complex> rho, int num_qubits) {
  const std::size_t dim = std::size_t{1} << num_qubits;
  if (rho.size() != dim * dim)
    throw std::invalid_argument(fmt::format("density matrix has {} entries, expected 4^{}", rho.size(), num_qubits));
  Complex acc{};
  for (std::size_t b = 0; b < dim; ++b) {
    const Complex v = rho[b * dim + (b ^ p.x)];
    if (popcount(p.z & static_cast<Mask>(b)) & 1)
      acc -= v;
    else
      acc += v;
  }
  return acc * kIPow[popcount(p.x & p.z) & 3];
}

std::string to_text(const PauliSum& h) {
  std::string out;
  for (const auto& t : h.terms()) {
    if (t.coeff.imag() == 0.0)
      out += fmt::format("{:.17g} {}\n", t.coeff.real(), to_string(t.op, h.num_qubits()));
    else
      out += fmt::format("({:.17g},{:.17g}) {}\n", t.coeff.real(), t.coeff.imag(), to_string(t.op, h.num_qubits()));
  }
  return out;
}

PauliSum from_text(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::vector<PauliTerm> terms;
  int q = -1;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    std::string coeff_str, letters;
    if (!(fields >> coeff_str >> letters))
      throw std::invalid_argument(fmt::format("line {}: expected \"coeff letters\"", line_no));
    Complex c;
    std::istringstream cs(coeff_str);
    if (!(cs >> c)) throw std::invalid_argument(fmt::format("line {}: bad coefficient '{}'", line_no, coeff_str));
    if (q < 0) q = static_cast<int>(letters.size());
    if (static_cast<int>(letters.size()) != q)
      throw std::invalid_argument(fmt::format("line {}: string length {} differs from {}", line_no, letters.size(), q));
    terms.push_back({parse_pauli_string(letters), c});
  }
  if (q < 0) throw std::invalid_argument("no Pauli terms in text");
  return PauliSum::from_terms(q, terms);
}

nlohmann::json to_json(const PauliSum& h) {
  nlohmann::json terms = nlohmann::json::array();
  for (const auto& t : h.terms()) {
    terms.push_back({{"x", t.op.x}, {"z", t.op.z}, {"re", t.coeff.real()}, {"im", t.coeff.imag()},
                     {"pauli", to_string(t.op, h.num_qubits())}});
  }
  return {{"num_qubits", h.num_qubits()}, {"terms", std::move(terms)}};
}

PauliSum pauli_sum_from_json(const nlohmann::json& j) {
  const int q = j.at("num_qubits").get<int>();
  std::vector<PauliTerm> terms;
  for (const auto& t : j.at("terms")) {
    terms.push_back({{t.at("x").get<Mask>(), t.at("z").get<Mask>()},
                     {t.at("re").get<double>(), t.value("im", 0.0)}});
  }
  return PauliSum::from_terms(q, terms);
}

}  // namespace qcm
