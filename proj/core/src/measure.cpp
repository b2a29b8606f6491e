#include "qcm/measure.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

#include <fmt/format.h>

#include "qcm/parallel.hpp"
#include "qcm/rng.hpp"

namespace qcm {
namespace {

Mask full_mask(int q) { return q >= 32 ? ~Mask{0} : (Mask{1} << q) - 1; }

bool fits(PauliString basis, PauliString t) {
  return (((basis.x ^ t.x) | (basis.z ^ t.z)) & basis.support() & t.support()) == 0;
}

template <class T>
void walsh_hadamard(std::span<T> v) {
  for (std::size_t h = 1; h < v.size(); h <<= 1) {
    for (std::size_t i = 0; i < v.size(); i += 2 * h) {
      for (std::size_t j = i; j < i + h; ++j) {
        const T a = v[j];
        const T b = v[j + h];
        v[j] = a + b;
        v[j + h] = a - b;
      }
    }
  }
}

// tr(rho P(x, z)) for every (x, z), stored at (x << q) | z.
std::vector<double> pauli_table(const QuantumState& rho) {
  const int q = rho.num_qubits();
  const std::size_t dim = rho.dim();
  std::vector<double> table(dim * dim);
  parallel_for(dim, [&](std::size_t x) {
    std::vector<Complex> f(dim);
    for (std::size_t b = 0; b < dim; ++b) f[b] = rho.entry(b, b ^ x);
    walsh_hadamard(std::span<Complex>(f));
    static constexpr std::array<Complex, 4> kPhase = {Complex{1, 0}, Complex{0, 1}, Complex{-1, 0}, Complex{0, -1}};
    for (std::size_t z = 0; z < dim; ++z) {
      const int y = std::popcount(static_cast<std::size_t>(x & z)) & 3;
      table[(x << q) | z] = (kPhase[static_cast<std::size_t>(y)] * f[z]).real();
    }
  });
  return table;
}

std::vector<double> statevector_distribution(const QuantumState& psi, PauliString basis) {
  QuantumState rotated = psi;
  for (int j = 0; j < psi.num_qubits(); ++j) {
    const Mask bit = Mask{1} << j;
    if (!(basis.x & bit)) continue;
    if (basis.z & bit) apply_gate(rotated, gates::sdg(), j);
    apply_gate(rotated, gates::h(), j);
  }
  return rotated.probabilities();
}

std::vector<double> table_distribution(const std::vector<double>& table, int q, PauliString basis) {
  const std::size_t dim = std::size_t{1} << q;
  std::vector<double> p(dim);
  for (std::size_t s = 0; s < dim; ++s) {
    const auto sm = static_cast<Mask>(s);
    p[s] = table[(static_cast<std::size_t>(basis.x & sm) << q) | (basis.z & sm)];
  }
  walsh_hadamard(std::span<double>(p));
  for (auto& v : p) v /= static_cast<double>(dim);
  return p;
}

std::vector<double> sample_counts(std::span<const double> probs, int shots, CounterRng& rng) {
  std::vector<double> cdf(probs.size());
  double acc = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += std::max(probs[i], 0.0);
    cdf[i] = acc;
  }
  std::vector<double> counts(probs.size(), 0.0);
  for (int s = 0; s < shots; ++s) {
    const double u = rng.uniform() * acc;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    if (it == cdf.end()) --it;
    counts[static_cast<std::size_t>(it - cdf.begin())] += 1.0;
  }
  return counts;
}

struct GroupResult {
  std::array<double, kMaxMomentOrder> sum{};
  std::array<double, kMaxMomentOrder> var{};
  std::array<std::size_t, kMaxMomentOrder> covered{};
};

}  // namespace

std::size_t TpbGrouping::term_count() const {
  std::size_t n = 0;
  for (const auto& g : groups) n += g.members.size();
  return n;
}

TpbGrouping group_tpb(std::span<const PauliSum> sums) {
  if (sums.empty()) throw std::invalid_argument("nothing to group");
  const int q = sums.front().num_qubits();
  std::vector<std::pair<PauliString, double>> weighted;
  for (const auto& s : sums) {
    if (s.num_qubits() != q) throw std::invalid_argument("grouped sums have different qubit counts");
    for (const auto& t : s.terms())
      if (!t.op.is_identity()) weighted.emplace_back(t.op, std::abs(t.coeff));
  }
  std::sort(weighted.begin(), weighted.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<std::pair<PauliString, double>> merged;
  for (const auto& w : weighted) {
    if (!merged.empty() && merged.back().first == w.first)
      merged.back().second += w.second;
    else
      merged.push_back(w);
  }
  std::stable_sort(merged.begin(), merged.end(), [](const auto& a, const auto& b) { return a.second > b.second; });

  TpbGrouping out;
  out.num_qubits = q;
  for (const auto& [op, weight] : merged) {
    auto it = std::find_if(out.groups.begin(), out.groups.end(), [&](const TpbGroup& g) { return fits(g.basis, op); });
    if (it == out.groups.end()) {
      out.groups.push_back({op, {}, 0.0});
      it = std::prev(out.groups.end());
    }
    it->basis.x |= op.x;
    it->basis.z |= op.z;
    it->members.push_back(op);
    it->coeff_l1 += weight;
  }
  return out;
}

TpbGrouping group_tpb(const PauliSum& h) { return group_tpb(std::span<const PauliSum>(&h, 1)); }

PauliString measured_basis(const TpbGroup& g, int num_qubits) {
  return {g.basis.x, g.basis.z | (full_mask(num_qubits) & ~g.basis.support())};
}

std::string check_grouping(const TpbGrouping& grouping, std::span<const PauliSum> sums) {
  std::unordered_set<std::uint64_t> expected;
  for (const auto& s : sums)
    for (const auto& t : s.terms())
      if (!t.op.is_identity()) expected.insert(t.op.key());
  std::unordered_set<std::uint64_t> seen;
  for (std::size_t gi = 0; gi < grouping.groups.size(); ++gi) {
    const auto& g = grouping.groups[gi];
    for (std::size_t a = 0; a < g.members.size(); ++a) {
      const auto& m = g.members[a];
      if (!fits(g.basis, m) || (m.support() & ~g.basis.support()))
        return fmt::format("group {}: member {} disagrees with basis {}", gi, to_string(m, grouping.num_qubits),
                           to_string(g.basis, grouping.num_qubits));
      for (std::size_t b = a + 1; b < g.members.size(); ++b)
        if (!qubitwise_commutes(m, g.members[b]))
          return fmt::format("group {}: {} and {} are not qubit-wise commuting", gi,
                             to_string(m, grouping.num_qubits), to_string(g.members[b], grouping.num_qubits));
      if (!expected.contains(m.key()))
        return fmt::format("group {}: {} is not an input term", gi, to_string(m, grouping.num_qubits));
      if (!seen.insert(m.key()).second)
        return fmt::format("{} appears in more than one group", to_string(m, grouping.num_qubits));
    }
  }
  if (seen.size() != expected.size())
    return fmt::format("{} of {} input terms are grouped", seen.size(), expected.size());
  return {};
}

nlohmann::json to_json(const TpbGrouping& grouping) {
  nlohmann::json groups = nlohmann::json::array();
  for (const auto& g : grouping.groups)
    groups.push_back({{"basis_string", to_string(measured_basis(g, grouping.num_qubits), grouping.num_qubits)},
                      {"term_count", g.members.size()},
                      {"coeff_l1", g.coeff_l1}});
  return {{"num_qubits", grouping.num_qubits}, {"groups", std::move(groups)}};
}

void ShotPlan::validate() const {
  if (shots_per_group < 1) throw std::invalid_argument(fmt::format("shots_per_group = {} < 1", shots_per_group));
}

MomentSet sample_moments(std::span<const PauliSum> powers, const TpbGrouping& grouping, const QuantumState& state,
                         const SamplingOptions& options) {
  if (powers.empty() || powers.size() > static_cast<std::size_t>(kMaxMomentOrder))
    throw std::invalid_argument(fmt::format("between 1 and {} powers required, got {}", kMaxMomentOrder, powers.size()));
  const int q = state.num_qubits();
  for (const auto& p : powers)
    if (p.num_qubits() != q) throw std::invalid_argument("power and state qubit counts differ");
  if (grouping.num_qubits != q) throw std::invalid_argument("grouping and state qubit counts differ");
  if (options.plan) options.plan->validate();
  if (!(options.readout_flip >= 0.0 && options.readout_flip <= 0.5))
    throw std::invalid_argument(fmt::format("readout flip {} outside [0, 0.5]", options.readout_flip));

  const std::vector<double> table = state.is_density_matrix() ? pauli_table(state) : std::vector<double>{};
  const std::size_t k_max = powers.size();
  std::vector<GroupResult> results(grouping.groups.size());
  const CounterRng root(options.plan ? options.plan->seed : 0);

  parallel_for(grouping.groups.size(), [&](std::size_t gi) {
    const auto& g = grouping.groups[gi];
    const PauliString basis = measured_basis(g, q);
    std::vector<double> probs = state.is_density_matrix() ? table_distribution(table, q, basis)
                                                          : statevector_distribution(state, basis);
    if (options.readout_flip > 0) probs = readout_noise(probs, options.readout_flip);
    double shots = 0;
    if (options.plan) {
      CounterRng rng = root.split(gi);
      probs = sample_counts(probs, options.plan->shots_per_group, rng);
      shots = options.plan->shots_per_group;
    }
    walsh_hadamard(std::span<double>(probs));
    auto& r = results[gi];
    for (const auto& m : g.members) {
      double e = probs[m.support()];
      if (shots > 0) e /= shots;
      for (std::size_t k = 0; k < k_max; ++k) {
        const double c = powers[k].coefficient(m).real();
        if (c == 0.0) continue;
        r.sum[k] += c * e;
        if (shots > 0) r.var[k] += c * c * std::max(0.0, 1.0 - e * e) / shots;
        ++r.covered[k];
      }
    }
  });

  MomentSet out;
  out.values.assign(k_max, 0.0);
  std::vector<double> var(k_max, 0.0);
  std::vector<std::size_t> covered(k_max, 0);
  for (const auto& r : results) {
    for (std::size_t k = 0; k < k_max; ++k) {
      out.values[k] += r.sum[k];
      var[k] += r.var[k];
      covered[k] += r.covered[k];
    }
  }
  for (std::size_t k = 0; k < k_max; ++k) {
    const std::size_t nonidentity = powers[k].size() - (powers[k].coefficient({}) != Complex{} ? 1 : 0);
    if (covered[k] != nonidentity)
      throw std::invalid_argument(
          fmt::format("grouping covers {} of the {} terms of power {}", covered[k], nonidentity, k + 1));
    out.values[k] += identity_coefficient(powers[k]);
  }
  if (options.plan) {
    out.std_errs.resize(k_max);
    for (std::size_t k = 0; k < k_max; ++k) out.std_errs[k] = std::sqrt(var[k]);
  }
  return out;
}

MomentSet statevector_moments(const PauliSum& h, std::span<const Complex> psi, int max_order) {
  detail::check_order(max_order, 1, "statevector_moments");
  const std::size_t dim = std::size_t{1} << h.num_qubits();
  if (psi.size() != dim) throw std::invalid_argument("statevector size does not match the operator");
  const int applications = max_order - max_order / 2;
  std::vector<std::vector<Complex>> phi(static_cast<std::size_t>(applications + 1));
  phi[0].assign(psi.begin(), psi.end());
  for (int a = 1; a <= applications; ++a) {
    phi[static_cast<std::size_t>(a)].resize(dim);
    apply(h, phi[static_cast<std::size_t>(a - 1)], phi[static_cast<std::size_t>(a)]);
  }
  MomentSet m;
  for (int k = 1; k <= max_order; ++k) {
    const auto& l = phi[static_cast<std::size_t>(k / 2)];
    const auto& r = phi[static_cast<std::size_t>(k - k / 2)];
    Complex acc{};
    for (std::size_t i = 0; i < dim; ++i) acc += std::conj(l[i]) * r[i];
    m.values.push_back(acc.real());
  }
  return m;
}

MomentSet exact_moments(std::span<const PauliSum> powers, const QuantumState& state) {
  MomentSet m;
  for (const auto& p : powers) m.values.push_back(expectation_exact(p, state));
  return m;
}

}  // namespace qcm
