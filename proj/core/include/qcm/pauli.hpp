#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace qcm {

using Complex = std::complex<double>;
using Mask = std::uint32_t;

inline constexpr int kMaxQubits = 24;

/// Coefficients with magnitude below this are dropped after merging.
inline constexpr double kPruneThreshold = 1e-12;

/// A Pauli string in symplectic form. Qubit j carries X^x_j Z^z_j up to the
/// phase convention P(x, z) = i^{|x & z|} X^x Z^z, so Y is the pair (1, 1)
/// and every PauliString is Hermitian.
struct PauliString {
  Mask x = 0;
  Mask z = 0;

  [[nodiscard]] constexpr Mask support() const { return x | z; }
  [[nodiscard]] constexpr bool is_identity() const { return (x | z) == 0; }
  [[nodiscard]] constexpr std::uint64_t key() const {
    return (static_cast<std::uint64_t>(x) << 32) | z;
  }
  friend constexpr bool operator==(PauliString, PauliString) = default;
  friend constexpr auto operator<=>(PauliString a, PauliString b) { return a.key() <=> b.key(); }
};

/// Product of two Pauli strings: a * b = i^phase * result, phase in [0, 4).
struct PauliProduct {
  PauliString result;
  int phase = 0;
};

[[nodiscard]] PauliProduct multiply(PauliString a, PauliString b);

/// True when the two strings commute as operators.
[[nodiscard]] bool commutes(PauliString a, PauliString b);

/// True when, on every qubit, the letters agree or one of them is I.
[[nodiscard]] bool qubitwise_commutes(PauliString a, PauliString b);

/// Letters are written qubit 0 first: "XZI" is X on qubit 0, Z on qubit 1.
[[nodiscard]] std::string to_string(PauliString p, int num_qubits);
[[nodiscard]] PauliString parse_pauli_string(std::string_view letters);

/// Single-letter constructors, e.g. pauli_x(3) is X on qubit 3.
[[nodiscard]] constexpr PauliString pauli_x(int q) { return {Mask{1} << q, 0}; }
[[nodiscard]] constexpr PauliString pauli_y(int q) { return {Mask{1} << q, Mask{1} << q}; }
[[nodiscard]] constexpr PauliString pauli_z(int q) { return {0, Mask{1} << q}; }

struct PauliTerm {
  PauliString op;
  Complex coeff;
};

/// Weighted sum of Pauli strings over a fixed number of qubits. Terms are kept
/// merged, pruned and sorted by (x, z) key; a PauliSum never changes after it
/// is built.
class PauliSum {
 public:
  explicit PauliSum(int num_qubits);

  /// Merges duplicates, prunes near-zero coefficients and sorts.
  static PauliSum from_terms(int num_qubits, std::span<const PauliTerm> terms);
  static PauliSum identity(int num_qubits, Complex coeff = 1.0);

  [[nodiscard]] int num_qubits() const { return num_qubits_; }
  [[nodiscard]] std::size_t size() const { return terms_.size(); }
  [[nodiscard]] bool empty() const { return terms_.empty(); }
  [[nodiscard]] std::span<const PauliTerm> terms() const { return terms_; }

  /// Coefficient of `op`, zero when absent.
  [[nodiscard]] Complex coefficient(PauliString op) const;

  /// Largest |Im c| over all terms.
  [[nodiscard]] double max_imag() const;
  [[nodiscard]] bool is_hermitian(double tol = 1e-12) const { return max_imag() <= tol; }

  friend bool operator==(const PauliSum&, const PauliSum&);
  friend PauliSum multiply(const PauliSum& a, const PauliSum& b);

 private:
  int num_qubits_;
  std::vector<PauliTerm> terms_;
};

[[nodiscard]] PauliSum operator+(const PauliSum& a, const PauliSum& b);
[[nodiscard]] PauliSum operator*(Complex s, const PauliSum& a);

/// Operator product with like terms merged. Throws std::invalid_argument on a
/// qubit-count mismatch.
[[nodiscard]] PauliSum multiply(const PauliSum& a, const PauliSum& b);

/// h^n for 1 <= n <= 5, built as h, h*h, (h*h)*h, ... with merging after every
/// step.
[[nodiscard]] PauliSum power(const PauliSum& h, int n);

/// All powers h^1 .. h^max_power; element k-1 holds h^k.
[[nodiscard]] std::vector<PauliSum> powers(const PauliSum& h, int max_power);

/// Real part of the all-identity coefficient, i.e. tr(h) / 2^q.
[[nodiscard]] double identity_coefficient(const PauliSum& h);

/// Applies h to a statevector: out = h * in. Sizes must be 2^q.
void apply(const PauliSum& h, std::span<const Complex> in, std::span<Complex> out);

/// <psi| h |psi> for a normalized statevector, real part; throws when the
/// imaginary part exceeds 1e-9.
[[nodiscard]] double expectation(const PauliSum& h, std::span<const Complex> psi);

/// <psi| P |psi> for a single string, exact complex value.
[[nodiscard]] Complex expectation(PauliString p, std::span<const Complex> psi);

/// tr(rho P) for a row-major 2^q x 2^q density matrix.
[[nodiscard]] Complex expectation_dm(PauliString p, std::span<const Complex> rho, int num_qubits);

// Text form: one "coeff letters" line per term. A complex coefficient is
// written as "(re,im)".
[[nodiscard]] std::string to_text(const PauliSum& h);
[[nodiscard]] PauliSum from_text(std::string_view text);

// JSON form: {"num_qubits": q, "terms": [{"x": .., "z": .., "re": .., "im": ..}]}.
[[nodiscard]] nlohmann::json to_json(const PauliSum& h);
[[nodiscard]] PauliSum pauli_sum_from_json(const nlohmann::json& j);

}  // namespace qcm
