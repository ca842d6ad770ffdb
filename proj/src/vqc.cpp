#include "qaug/vqc.hpp"

#include <numbers>
#include <string>

namespace qaug {
namespace {

constexpr double kShift = std::numbers::pi / 2.0;

void check_params(const ParamCircuit& pc, const Eigen::VectorXd& params) {
  if (params.size() != pc.n_params()) {
    throw ShapeError("expected " + std::to_string(pc.n_params()) + " parameters, got " +
                     std::to_string(params.size()));
  }
}

void check_upstream(const std::vector<int>& measured, const Eigen::VectorXd& upstream) {
  if (upstream.size() != static_cast<Eigen::Index>(measured.size())) {
    throw ShapeError("upstream gradient length " + std::to_string(upstream.size()) +
                     " does not match " + std::to_string(measured.size()) + " measured qubits");
  }
}

Eigen::VectorXd measure(const StateVector& state, const std::vector<int>& measured) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(measured.size()));
  for (std::size_t k = 0; k < measured.size(); ++k) {
    out(static_cast<Eigen::Index>(k)) = expectation_z(state, measured[k]);
  }
  return out;
}

}  // namespace

ParamCircuit::ParamCircuit(int n_qubits) : n_qubits_(n_qubits) {
  if (n_qubits < 1 || n_qubits > kMaxQubits) {
    throw CapacityError("qubit count " + std::to_string(n_qubits) + " outside 1.." +
                        std::to_string(kMaxQubits));
  }
}

ParamCircuit& ParamCircuit::add_fixed(const GateOp& op) {
  op.validate(n_qubits_);
  slots_.emplace_back(op);
  return *this;
}

int ParamCircuit::add_rotation(GateKind kind, int target) {
  if (kind != GateKind::Rx && kind != GateKind::Ry && kind != GateKind::Rz) {
    throw ShapeError(std::string("trainable slots must be Rx, Ry or Rz, not ") + gate_name(kind));
  }
  if (target < 0 || target >= n_qubits_) {
    throw IndexError("rotation target " + std::to_string(target) + " out of range");
  }
  slots_.emplace_back(ParamRotation{kind, target, n_params_});
  return n_params_++;
}

std::size_t ParamCircuit::count(GateKind kind) const {
  std::size_t n = 0;
  for (const auto& slot : slots_) {
    const GateKind k = std::holds_alternative<GateOp>(slot) ? std::get<GateOp>(slot).kind
                                                            : std::get<ParamRotation>(slot).kind;
    if (k == kind) ++n;
  }
  return n;
}

Circuit ParamCircuit::bind(const Eigen::VectorXd& params) const {
  check_params(*this, params);
  Circuit c{n_qubits_, {}};
  c.ops.reserve(slots_.size());
  for (const auto& slot : slots_) {
    if (const auto* fixed = std::get_if<GateOp>(&slot)) {
      c.ops.push_back(*fixed);
    } else {
      const auto& rot = std::get<ParamRotation>(slot);
      c.ops.push_back(GateOp{rot.kind, rot.target, {}, params(rot.param_index)});
    }
  }
  return c;
}

ParamCircuit build_ansatz(const AnsatzSpec& spec) {
  if (spec.depth < 1) throw ShapeError("ansatz depth must be at least 1");
  ParamCircuit pc(spec.n_qubits);
  const int n = spec.n_qubits;
  for (int layer = 0; layer < spec.depth; ++layer) {
    for (int q = 0; q < n; ++q) {
      pc.add_rotation(GateKind::Ry, q);
      pc.add_rotation(GateKind::Rz, q);
    }
    for (int q = 0; q + 1 < n; ++q) pc.add_fixed(GateOp::cnot(q, q + 1));
    // On two qubits the closing edge would duplicate (0, 1), so a ring equals the chain.
    if (spec.entangler == Entangler::Ring && n > 2) pc.add_fixed(GateOp::cnot(n - 1, 0));
  }
  return pc;
}

Eigen::VectorXd random_params(int n_params, Rng& rng) {
  Eigen::VectorXd p(n_params);
  for (int i = 0; i < n_params; ++i) p(i) = rng.uniform(-std::numbers::pi, std::numbers::pi);
  return p;
}

std::vector<int> all_qubits(int n_qubits) {
  std::vector<int> q(static_cast<std::size_t>(n_qubits));
  for (int i = 0; i < n_qubits; ++i) q[static_cast<std::size_t>(i)] = i;
  return q;
}

Eigen::VectorXd vqc_forward(const ParamCircuit& pc, const Eigen::VectorXd& params,
                            const StateVector& input, const std::vector<int>& measured,
                            EvalCounter* counter) {
  const StateVector out = run_circuit(pc.bind(params), input);
  if (counter) ++counter->circuits;
  return measure(out, measured);
}

Eigen::VectorXd param_shift_grad(const ParamCircuit& pc, const Eigen::VectorXd& params,
                                 const StateVector& input, const std::vector<int>& measured,
                                 const Eigen::VectorXd& upstream, EvalCounter* counter) {
  check_params(pc, params);
  check_upstream(measured, upstream);
  Eigen::VectorXd grad(pc.n_params());
  Eigen::VectorXd shifted = params;
  for (int j = 0; j < pc.n_params(); ++j) {
    shifted(j) = params(j) + kShift;
    const Eigen::VectorXd plus = vqc_forward(pc, shifted, input, measured, counter);
    shifted(j) = params(j) - kShift;
    const Eigen::VectorXd minus = vqc_forward(pc, shifted, input, measured, counter);
    shifted(j) = params(j);
    grad(j) = 0.5 * upstream.dot(plus - minus);
  }
  return grad;
}

Eigen::VectorXd input_angle_grad(const ParamCircuit& pc, const Eigen::VectorXd& params,
                                 const Eigen::VectorXd& encode_angles,
                                 const std::vector<int>& measured, const Eigen::VectorXd& upstream,
                                 EvalCounter* counter) {
  if (encode_angles.size() != pc.n_qubits()) {
    throw ShapeError("expected " + std::to_string(pc.n_qubits()) + " encoding angles, got " +
                     std::to_string(encode_angles.size()));
  }
  check_params(pc, params);
  check_upstream(measured, upstream);
  Eigen::VectorXd grad(encode_angles.size());
  Eigen::VectorXd shifted = encode_angles;
  for (Eigen::Index i = 0; i < encode_angles.size(); ++i) {
    shifted(i) = encode_angles(i) + kShift;
    const Eigen::VectorXd plus = vqc_forward(pc, params, angle_encode(shifted), measured, counter);
    shifted(i) = encode_angles(i) - kShift;
    const Eigen::VectorXd minus = vqc_forward(pc, params, angle_encode(shifted), measured, counter);
    shifted(i) = encode_angles(i);
    grad(i) = 0.5 * upstream.dot(plus - minus);
  }
  return grad;
}

Eigen::VectorXd vqc_probabilities(const ParamCircuit& pc, const Eigen::VectorXd& params,
                                  const StateVector& input, EvalCounter* counter) {
  const StateVector out = run_circuit(pc.bind(params), input);
  if (counter) ++counter->circuits;
  return probabilities(out);
}

Eigen::MatrixXd probability_jacobian(const ParamCircuit& pc, const Eigen::VectorXd& params,
                                     const StateVector& input, EvalCounter* counter) {
  check_params(pc, params);
  Eigen::MatrixXd jac(input.dim(), pc.n_params());
  Eigen::VectorXd shifted = params;
  for (int j = 0; j < pc.n_params(); ++j) {
    shifted(j) = params(j) + kShift;
    const Eigen::VectorXd plus = vqc_probabilities(pc, shifted, input, counter);
    shifted(j) = params(j) - kShift;
    const Eigen::VectorXd minus = vqc_probabilities(pc, shifted, input, counter);
    shifted(j) = params(j);
    jac.col(j) = 0.5 * (plus - minus);
  }
  return jac;
}

nlohmann::json to_json(const ParamCircuit& pc) {
  nlohmann::json slots = nlohmann::json::array();
  for (const auto& slot : pc.slots()) {
    if (const auto* op = std::get_if<GateOp>(&slot)) {
      nlohmann::json s = {{"gate", gate_name(op->kind)}, {"target", op->target}};
      if (op->control) s["control"] = *op->control;
      if (op->angle) s["angle"] = *op->angle;
      slots.push_back(s);
    } else {
      const auto& r = std::get<ParamRotation>(slot);
      slots.push_back({{"gate", gate_name(r.kind)}, {"target", r.target}, {"param", r.param_index}});
    }
  }
  return {{"n_qubits", pc.n_qubits()}, {"n_params", pc.n_params()}, {"slots", slots}};
}

ParamCircuit param_circuit_from_json(const nlohmann::json& j) {
  static const std::vector<GateKind> kinds = {GateKind::I,  GateKind::X,  GateKind::Y,  GateKind::Z,     GateKind::H,
                                              GateKind::Rx, GateKind::Ry, GateKind::Rz, GateKind::Phase, GateKind::CNOT};
  const auto kind_of = [&](const std::string& name) {
    for (GateKind k : kinds) {
      if (name == gate_name(k)) return k;
    }
    throw FormatError("unknown gate '" + name + "'");
  };
  ParamCircuit pc(j.at("n_qubits").get<int>());
  for (const auto& s : j.at("slots")) {
    const GateKind k = kind_of(s.at("gate"));
    if (s.contains("param")) {
      if (pc.add_rotation(k, s.at("target")) != s.at("param").get<int>()) {
        throw FormatError("circuit parameters must be numbered in slot order");
      }
      continue;
    }
    GateOp op{k, s.at("target").get<int>(), {}, {}};
    if (s.contains("control")) op.control = s.at("control").get<int>();
    if (s.contains("angle")) op.angle = s.at("angle").get<double>();
    pc.add_fixed(op);
  }
  return pc;
}

}  // namespace qaug
