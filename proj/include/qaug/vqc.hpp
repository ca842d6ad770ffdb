#pragma once

// Variational circuits V(theta): ansatz construction, expectation evaluation and
// parameter-shift gradients.

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <variant>
#include <vector>

#include "json.hpp"
#include "qaug/quantum.hpp"
#include "qaug/rng.hpp"

namespace qaug {

enum class Entangler { Ring, Linear };

struct AnsatzSpec {
  int n_qubits = 1;
  int depth = 1;
  Entangler entangler = Entangler::Ring;
};

/// A rotation whose angle is params[param_index] at bind time.
struct ParamRotation {
  GateKind kind = GateKind::Ry;
  int target = 0;
  int param_index = 0;
};

using Slot = std::variant<GateOp, ParamRotation>;

/// Ordered gate list with trainable slots. Every parameter drives exactly one slot.
class ParamCircuit {
 public:
  explicit ParamCircuit(int n_qubits);

  ParamCircuit& add_fixed(const GateOp& op);
  /// Appends a rotation slot bound to a fresh parameter; returns its index.
  int add_rotation(GateKind kind, int target);

  int n_qubits() const { return n_qubits_; }
  int n_params() const { return n_params_; }
  const std::vector<Slot>& slots() const { return slots_; }
  std::size_t count(GateKind kind) const;

  /// Concrete circuit with every slot's angle taken from params.
  Circuit bind(const Eigen::VectorXd& params) const;

 private:
  int n_qubits_;
  int n_params_ = 0;
  std::vector<Slot> slots_;
};

/// Per layer: Ry then Rz on every qubit, then a CNOT chain (linear) or cycle (ring).
ParamCircuit build_ansatz(const AnsatzSpec& spec);

/// Uniform in [-pi, pi).
Eigen::VectorXd random_params(int n_params, Rng& rng);

/// Counts circuit executions; pass to any evaluation routine to instrument it.
struct EvalCounter {
  std::size_t circuits = 0;
};

/// <Z> on each measured qubit after running bind(params) on input.
Eigen::VectorXd vqc_forward(const ParamCircuit& pc, const Eigen::VectorXd& params,
                            const StateVector& input, const std::vector<int>& measured,
                            EvalCounter* counter = nullptr);

/// dL/dtheta_j = sum_k upstream_k (E_k(theta_j + pi/2) - E_k(theta_j - pi/2)) / 2.
/// Runs exactly 2 * n_params circuits.
Eigen::VectorXd param_shift_grad(const ParamCircuit& pc, const Eigen::VectorXd& params,
                                 const StateVector& input, const std::vector<int>& measured,
                                 const Eigen::VectorXd& upstream, EvalCounter* counter = nullptr);

/// Gradient with respect to the Ry encoding angles that prepare the input state.
Eigen::VectorXd input_angle_grad(const ParamCircuit& pc, const Eigen::VectorXd& params,
                                 const Eigen::VectorXd& encode_angles,
                                 const std::vector<int>& measured, const Eigen::VectorXd& upstream,
                                 EvalCounter* counter = nullptr);

/// Born distribution over basis states after running bind(params) on input.
Eigen::VectorXd vqc_probabilities(const ParamCircuit& pc, const Eigen::VectorXd& params,
                                  const StateVector& input, EvalCounter* counter = nullptr);

/// d p(x) / d theta_j by the shift rule; rows are basis states, columns parameters.
Eigen::MatrixXd probability_jacobian(const ParamCircuit& pc, const Eigen::VectorXd& params,
                                     const StateVector& input, EvalCounter* counter = nullptr);

std::vector<int> all_qubits(int n_qubits);

nlohmann::json to_json(const ParamCircuit& pc);
ParamCircuit param_circuit_from_json(const nlohmann::json& j);

}  // namespace qaug
