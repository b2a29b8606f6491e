#include "qcm/ansatz.hpp"

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

#include <fmt/format.h>

namespace qcm {
namespace {

constexpr std::array<std::string_view, 7> kGateNames = {"X", "H", "S", "Sdg", "RZ", "CNOT", "ESWAP"};

}  // namespace

std::string_view gate_name(GateKind kind) { return kGateNames.at(static_cast<std::size_t>(kind)); }

GateKind gate_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kGateNames.size(); ++i)
    if (kGateNames[i] == name) return static_cast<GateKind>(i);
  throw std::invalid_argument(fmt::format("unknown gate '{}'", name));
}

bool is_two_qubit(GateKind kind) { return kind == GateKind::CNOT || kind == GateKind::ESWAP; }

void Circuit::validate() const {
  if (num_qubits < 1) throw std::invalid_argument("circuit needs at least one qubit");
  for (const auto& g : gates) {
    if (g.q0 < 0 || g.q0 >= num_qubits)
      throw std::invalid_argument(fmt::format("{} acts on qubit {} of {}", gate_name(g.kind), g.q0, num_qubits));
    if (is_two_qubit(g.kind) && (g.q1 < 0 || g.q1 >= num_qubits || g.q1 == g.q0))
      throw std::invalid_argument(fmt::format("{} has bad second qubit {}", gate_name(g.kind), g.q1));
    if (g.param >= static_cast<int>(params.size()))
      throw std::invalid_argument(fmt::format("gate refers to parameter {} of {}", g.param, params.size()));
  }
}

Circuit rvb_circuit(int num_qubits, int depth, std::span<const double> theta) {
  if (num_qubits < 2 || num_qubits % 2 != 0)
    throw std::invalid_argument(fmt::format("RVB circuit needs an even qubit count, got {}", num_qubits));
  if (depth < 0) throw std::invalid_argument("negative depth");
  if (theta.size() != static_cast<std::size_t>(depth) * static_cast<std::size_t>(num_qubits))
    throw std::invalid_argument(fmt::format("expected {} parameters for D={} q={}, got {}", depth * num_qubits, depth,
                                            num_qubits, theta.size()));
  Circuit c;
  c.num_qubits = num_qubits;
  c.depth = depth;
  c.params.assign(theta.begin(), theta.end());
  for (int a = 0; a < num_qubits; a += 2) {
    c.gates.push_back({GateKind::X, a});
    c.gates.push_back({GateKind::X, a + 1});
    c.gates.push_back({GateKind::H, a});
    c.gates.push_back({GateKind::CNOT, a, a + 1});
  }
  int slot = 0;
  for (int d = 0; d < depth; ++d) {
    for (int a = 1; a < num_qubits; a += 2) c.gates.push_back({GateKind::ESWAP, a, (a + 1) % num_qubits, slot++});
    for (int a = 0; a < num_qubits; a += 2) c.gates.push_back({GateKind::ESWAP, a, a + 1, slot++});
  }
  return c;
}

int cnot_count(const Circuit& c) {
  int n = 0;
  for (const auto& g : c.gates) {
    if (g.kind == GateKind::CNOT) n += 1;
    if (g.kind == GateKind::ESWAP) n += 3;
  }
  return n;
}

int single_qubit_gate_count(const Circuit& c) {
  int n = 0;
  for (const auto& g : c.gates) n += is_two_qubit(g.kind) ? 0 : 1;
  return n;
}

double prima_facie_error(int n_cx, double eps_cx) {
  if (eps_cx < 0.0 || eps_cx > 1.0) throw std::invalid_argument("eps_cx outside [0, 1]");
  if (n_cx < 0) throw std::invalid_argument("negative CNOT count");
  return 1.0 - std::pow(1.0 - eps_cx, n_cx);
}

nlohmann::json to_json(const Circuit& c) {
  nlohmann::json gates = nlohmann::json::array();
  for (const auto& g : c.gates) {
    nlohmann::json jg{{"kind", gate_name(g.kind)}};
    jg["qubits"] = is_two_qubit(g.kind) ? nlohmann::json{g.q0, g.q1} : nlohmann::json{g.q0};
    if (g.param >= 0) jg["param"] = g.param;
    else if (g.kind == GateKind::RZ || g.kind == GateKind::ESWAP) jg["angle"] = g.angle;
    gates.push_back(std::move(jg));
  }
  return {{"q", c.num_qubits}, {"D", c.depth}, {"theta", c.params}, {"gates", std::move(gates)}};
}

Circuit circuit_from_json(const nlohmann::json& j) {
  Circuit c;
  c.num_qubits = j.at("q").get<int>();
  c.depth = j.value("D", 0);
  c.params = j.at("theta").get<std::vector<double>>();
  for (const auto& jg : j.at("gates")) {
    Gate g;
    g.kind = gate_from_name(jg.at("kind").get<std::string>());
    const auto& qs = jg.at("qubits");
    g.q0 = qs.at(0).get<int>();
    if (is_two_qubit(g.kind)) g.q1 = qs.at(1).get<int>();
    g.param = jg.value("param", -1);
    g.angle = jg.value("angle", 0.0);
    c.gates.push_back(g);
  }
  c.validate();
  return c;
}

}  // namespace qcm
