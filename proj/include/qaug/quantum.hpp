#pragma once

// Dense statevector simulation.
//
// Qubit 0 is the most significant bit of the basis index: on n qubits, basis
// index i has qubit q set iff bit (n - 1 - q) of i is set. Bitstrings printed
// by sample_bitstrings list qubit 0 first.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qaug/errors.hpp"
#include "qaug/rng.hpp"

namespace qaug {

inline constexpr int kMaxQubits = 12;

enum class GateKind { I, X, Y, Z, H, Rx, Ry, Rz, Phase, CNOT };

constexpr bool takes_angle(GateKind k) {
  return k == GateKind::Rx || k == GateKind::Ry || k == GateKind::Rz || k == GateKind::Phase;
}

inline const char* gate_name(GateKind k);

struct GateOp {
  GateKind kind = GateKind::I;
  int target = 0;
  std::optional<int> control;
  std::optional<double> angle;

  static GateOp i(int q) { return {GateKind::I, q, {}, {}}; }
  static GateOp x(int q) { return {GateKind::X, q, {}, {}}; }
  static GateOp y(int q) { return {GateKind::Y, q, {}, {}}; }
  static GateOp z(int q) { return {GateKind::Z, q, {}, {}}; }
  static GateOp h(int q) { return {GateKind::H, q, {}, {}}; }
  static GateOp rx(int q, double theta) { return {GateKind::Rx, q, {}, theta}; }
  static GateOp ry(int q, double theta) { return {GateKind::Ry, q, {}, theta}; }
  static GateOp rz(int q, double theta) { return {GateKind::Rz, q, {}, theta}; }
  static GateOp phase(int q, double theta) { return {GateKind::Phase, q, {}, theta}; }
  static GateOp cnot(int control, int target) { return {GateKind::CNOT, target, control, {}}; }

  /// Throws IndexError / ShapeError unless the op is well formed on n_qubits.
  void validate(int n_qubits) const {
    if (target < 0 || target >= n_qubits) {
      throw IndexError("gate target " + std::to_string(target) + " out of range for " +
                       std::to_string(n_qubits) + " qubits");
    }
    if ((kind == GateKind::CNOT) != control.has_value()) {
      throw ShapeError("control qubit must be given for CNOT and only for CNOT");
    }
    if (takes_angle(kind) != angle.has_value()) {
      throw ShapeError(std::string("angle presence mismatch for gate ") + gate_name(kind));
    }
    if (control) {
      if (*control < 0 || *control >= n_qubits) {
        throw IndexError("gate control " + std::to_string(*control) + " out of range");
      }
      if (*control == target) throw IndexError("CNOT control equals target");
    }
  }
};

inline const char* gate_name(GateKind k) {
  switch (k) {
    case GateKind::I: return "I";
    case GateKind::X: return "X";
    case GateKind::Y: return "Y";
    case GateKind::Z: return "Z";
    case GateKind::H: return "H";
    case GateKind::Rx: return "Rx";
    case GateKind::Ry: return "Ry";
    case GateKind::Rz: return "Rz";
    case GateKind::Phase: return "Phase";
    case GateKind::CNOT: return "CNOT";
  }
  return "?";
}

template <typename Scalar>
using Matrix2c = Eigen::Matrix<std::complex<Scalar>, 2, 2>;
template <typename Scalar>
using Matrix4c = Eigen::Matrix<std::complex<Scalar>, 4, 4>;

/// 2x2 matrix of a single-qubit gate kind at the given angle.
template <typename Scalar = double>
Matrix2c<Scalar> single_qubit_matrix(GateKind kind, double angle = 0.0) {
  using C = std::complex<Scalar>;
  const Scalar half = static_cast<Scalar>(angle) / Scalar(2);
  const Scalar c = std::cos(half);
  const Scalar s = std::sin(half);
  const C i1(0, 1);
  Matrix2c<Scalar> m;
  switch (kind) {
    case GateKind::I: m << C(1), C(0), C(0), C(1); break;
    case GateKind::X: m << C(0), C(1), C(1), C(0); break;
    case GateKind::Y: m << C(0), -i1, i1, C(0); break;
    case GateKind::Z: m << C(1), C(0), C(0), C(-1); break;
    case GateKind::H: {
      const Scalar r = Scalar(1) / std::sqrt(Scalar(2));
      m << C(r), C(r), C(r), C(-r);
      break;
    }
    case GateKind::Rx: m << C(c), C(0, -s), C(0, -s), C(c); break;
    case GateKind::Ry: m << C(c), C(-s), C(s), C(c); break;
    case GateKind::Rz: m << std::polar(Scalar(1), -half), C(0), C(0), std::polar(Scalar(1), half); break;
    case GateKind::Phase: m << C(1), C(0), C(0), std::polar(Scalar(1), static_cast<Scalar>(angle)); break;
    case GateKind::CNOT: throw ShapeError("CNOT is not a single-qubit gate");
  }
  return m;
}

/// CNOT in the (control, target) two-qubit basis, control as the high bit.
template <typename Scalar = double>
Matrix4c<Scalar> cnot_matrix() {
  Matrix4c<Scalar> m = Matrix4c<Scalar>::Zero();
  m(0, 0) = m(1, 1) = m(2, 3) = m(3, 2) = 1;
  return m;
}

struct Circuit {
  int n_qubits = 1;
  std::vector<GateOp> ops;

  Circuit& add(const GateOp& op) {
    op.validate(n_qubits);
    ops.push_back(op);
    return *this;
  }

  void validate() const {
    for (const auto& op : ops) op.validate(n_qubits);
  }
};

template <typename Scalar = double>
class BasicStateVector {
 public:
  using Complex = std::complex<Scalar>;
  using Amplitudes = Eigen::Matrix<Complex, Eigen::Dynamic, 1>;

  /// |0...0> on n_qubits.
  explicit BasicStateVector(int n_qubits) : n_qubits_(checked_qubits(n_qubits)) {
    amps_ = Amplitudes::Zero(Eigen::Index{1} << n_qubits_);
    amps_(0) = Complex(1);
  }

  /// Wraps explicit amplitudes; length must be 2^n and the norm 1 within 1e-10.
  static BasicStateVector from_amplitudes(int n_qubits, Amplitudes amps) {
    BasicStateVector s(n_qubits);
    if (amps.size() != s.amps_.size()) {
      throw ShapeError("amplitude vector length " + std::to_string(amps.size()) + " is not 2^" +
                       std::to_string(n_qubits));
    }
    if (std::abs(static_cast<double>(amps.squaredNorm()) - 1.0) > 1e-10) {
      throw NumericError("amplitudes are not normalized");
    }
    s.amps_ = std::move(amps);
    return s;
  }

  int n_qubits() const { return n_qubits_; }
  Eigen::Index dim() const { return amps_.size(); }
  const Amplitudes& amplitudes() const { return amps_; }
  Complex operator[](Eigen::Index i) const { return amps_(i); }
  Scalar norm_squared() const { return amps_.squaredNorm(); }

  /// In-place gate application; apply_gate() is the value-semantic wrapper.
  void apply(const GateOp& op) {
    op.validate(n_qubits_);
    const Eigen::Index tmask = mask(op.target);
    if (op.kind == GateKind::CNOT) {
      const Eigen::Index cmask = mask(*op.control);
      for (Eigen::Index i = 0; i < dim(); ++i) {
        if ((i & cmask) && !(i & tmask)) std::swap(amps_(i), amps_(i | tmask));
      }
      return;
    }
    if (op.kind == GateKind::I) return;
    const Matrix2c<Scalar> m = single_qubit_matrix<Scalar>(op.kind, op.angle.value_or(0.0));
    for (Eigen::Index i = 0; i < dim(); ++i) {
      if (i & tmask) continue;
      const Complex a0 = amps_(i);
      const Complex a1 = amps_(i | tmask);
      amps_(i) = m(0, 0) * a0 + m(0, 1) * a1;
      amps_(i | tmask) = m(1, 0) * a0 + m(1, 1) * a1;
    }
  }

  Eigen::Index mask(int qubit) const { return Eigen::Index{1} << (n_qubits_ - 1 - qubit); }

 private:
  static int checked_qubits(int n) {
    if (n < 1 || n > kMaxQubits) {
      throw CapacityError("qubit count " + std::to_string(n) + " outside 1.." +
                          std::to_string(kMaxQubits));
    }
    return n;
  }

  int n_qubits_;
  Amplitudes amps_;
};

using StateVector = BasicStateVector<double>;

template <typename Scalar = double>
BasicStateVector<Scalar> init_zero_state(int n_qubits) {
  return BasicStateVector<Scalar>(n_qubits);
}

template <typename Scalar>
BasicStateVector<Scalar> apply_gate(BasicStateVector<Scalar> state, const GateOp& gate) {
  state.apply(gate);
  return state;
}

template <typename Scalar>
BasicStateVector<Scalar> run_circuit(const Circuit& circuit, BasicStateVector<Scalar> init) {
  if (circuit.n_qubits != init.n_qubits()) {
    throw ShapeError("circuit has " + std::to_string(circuit.n_qubits) + " qubits, state has " +
                     std::to_string(init.n_qubits()));
  }
  for (const auto& op : circuit.ops) init.apply(op);
  return init;
}

/// <Z> on one qubit: sum over basis states of +|a|^2 (bit 0) or -|a|^2 (bit 1).
template <typename Scalar>
Scalar expectation_z(const BasicStateVector<Scalar>& state, int qubit) {
  if (qubit < 0 || qubit >= state.n_qubits()) {
    throw IndexError("measured qubit " + std::to_string(qubit) + " out of range");
  }
  const Eigen::Index m = state.mask(qubit);
  Scalar acc = 0;
  for (Eigen::Index i = 0; i < state.dim(); ++i) {
    const Scalar p = std::norm(state[i]);
    acc += (i & m) ? -p : p;
  }
  return acc;
}

/// Born probabilities |<x|psi>|^2 indexed by basis state.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> probabilities(const BasicStateVector<Scalar>& state) {
  return state.amplitudes().cwiseAbs2();
}

/// Basis index rendered with qubit 0 as the leftmost character.
inline std::string bitstring(std::size_t index, int n_qubits) {
  std::string s(static_cast<std::size_t>(n_qubits), '0');
  for (int q = 0; q < n_qubits; ++q) {
    if (index & (std::size_t{1} << (n_qubits - 1 - q))) s[static_cast<std::size_t>(q)] = '1';
  }
  return s;
}

/// Draws basis indices from the Born distribution (inverse-CDF sampling).
template <typename Scalar>
std::vector<std::size_t> sample_indices(const BasicStateVector<Scalar>& state, std::size_t shots,
                                        Rng& rng) {
  std::vector<double> cdf(static_cast<std::size_t>(state.dim()));
  double acc = 0.0;
  for (Eigen::Index i = 0; i < state.dim(); ++i) {
    acc += static_cast<double>(std::norm(state[i]));
    cdf[static_cast<std::size_t>(i)] = acc;
  }
  std::vector<std::size_t> out;
  out.reserve(shots);
  for (std::size_t s = 0; s < shots; ++s) {
    const double u = rng.uniform() * acc;
    // upper_bound never lands on a zero-probability entry
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    if (it == cdf.end()) --it;
    out.push_back(static_cast<std::size_t>(it - cdf.begin()));
  }
  return out;
}

template <typename Scalar>
std::map<std::string, std::size_t> sample_bitstrings(const BasicStateVector<Scalar>& state,
                                                     std::size_t shots, Rng& rng) {
  if (shots < 1) throw ShapeError("shots must be at least 1");
  std::map<std::string, std::size_t> counts;
  for (std::size_t idx : sample_indices(state, shots, rng)) {
    ++counts[bitstring(idx, state.n_qubits())];
  }
  return counts;
}

/// Product state prod_i Ry(features[i]) on qubit i, applied to |0...0>.
template <typename Scalar = double, typename Derived>
BasicStateVector<Scalar> angle_encode(const Eigen::MatrixBase<Derived>& features) {
  const auto n = static_cast<int>(features.size());
  if (n > kMaxQubits) {
    throw CapacityError("cannot encode " + std::to_string(n) + " features on at most " +
                        std::to_string(kMaxQubits) + " qubits");
  }
  BasicStateVector<Scalar> state(n);
  for (int q = 0; q < n; ++q) state.apply(GateOp::ry(q, static_cast<double>(features(q))));
  return state;
}

inline StateVector angle_encode(const std::vector<double>& features) {
  return angle_encode<double>(Eigen::Map<const Eigen::VectorXd>(features.data(),
                                                                static_cast<Eigen::Index>(features.size())));
}

}  // namespace qaug
