#include <cmath>
#include <numbers>

#include "doctest.h"
#include "oracles.hpp"
#include "qaug/errors.hpp"
#include "qaug/quantum.hpp"
#include "qaug/rng.hpp"

using namespace qaug;

namespace {

constexpr double kPi = std::numbers::pi;
const double kInvSqrt2 = 1.0 / std::sqrt(2.0);

void check_amps(const StateVector& s, const std::vector<std::complex<double>>& expected, double tol = 1e-12) {
  REQUIRE(s.dim() == static_cast<Eigen::Index>(expected.size()));
  for (std::size_t i = 0; i < expected.size(); ++i) {
    CHECK(std::abs(s[static_cast<Eigen::Index>(i)] - expected[i]) <= tol);
  }
}

GateOp random_gate(int n, Rng& rng) {
  const auto kind = static_cast<GateKind>(rng.below(10));
  const int t = static_cast<int>(rng.below(static_cast<std::size_t>(n)));
  if (kind == GateKind::CNOT) {
    if (n < 2) return GateOp::h(t);
    int c = static_cast<int>(rng.below(static_cast<std::size_t>(n - 1)));
    if (c >= t) ++c;
    return GateOp::cnot(c, t);
  }
  GateOp g{kind, t, {}, {}};
  if (takes_angle(kind)) g.angle = rng.uniform(-kPi, kPi);
  return g;
}

StateVector random_state(int n, Rng& rng) {
  Eigen::VectorXcd a(Eigen::Index{1} << n);
  for (Eigen::Index i = 0; i < a.size(); ++i) a(i) = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
  a.normalize();
  return StateVector::from_amplitudes(n, a);
}

std::vector<GateOp> all_kinds(int n, double angle) {
  std::vector<GateOp> out;
  for (int t = 0; t < n; ++t) {
    for (GateOp g : {GateOp::i(t), GateOp::x(t), GateOp::y(t), GateOp::z(t), GateOp::h(t), GateOp::rx(t, angle),
                     GateOp::ry(t, angle), GateOp::rz(t, angle), GateOp::phase(t, angle)}) {
      out.push_back(g);
    }
    for (int c = 0; c < n; ++c) {
      if (c != t) out.push_back(GateOp::cnot(c, t));
    }
  }
  return out;
}

}  // namespace

TEST_CASE("init_zero_state examples") {
  check_amps(init_zero_state(1), {1, 0});
  check_amps(init_zero_state(2), {1, 0, 0, 0});
  CHECK_THROWS_AS(init_zero_state(13), CapacityError);
  CHECK_THROWS_AS(init_zero_state(0), CapacityError);
  CHECK(init_zero_state(12).dim() == 4096);
}

TEST_CASE("apply_gate examples") {
  check_amps(apply_gate(init_zero_state(1), GateOp::h(0)), {kInvSqrt2, kInvSqrt2});
  check_amps(apply_gate(init_zero_state(1), GateOp::x(0)), {0, 1});
  // |10>: qubit 0 is the most significant bit.
  const StateVector s10 = apply_gate(init_zero_state(2), GateOp::x(0));
  check_amps(s10, {0, 0, 1, 0});
  check_amps(apply_gate(s10, GateOp::cnot(0, 1)), {0, 0, 0, 1});
  // Ry(pi)|0> = sin(pi/2)|1> with cos(pi/2) ~ 6e-17 left on |0>.
  check_amps(apply_gate(init_zero_state(1), GateOp::ry(0, kPi)), {0, 1});
}

TEST_CASE("apply_gate is value-semantic") {
  const StateVector s = init_zero_state(1);
  const StateVector t = apply_gate(s, GateOp::x(0));
  check_amps(s, {1, 0});
  check_amps(t, {0, 1});
}

TEST_CASE("invalid gates are rejected") {
  StateVector s = init_zero_state(2);
  CHECK_THROWS_AS(s.apply(GateOp::x(2)), IndexError);
  CHECK_THROWS_AS(s.apply(GateOp::x(-1)), IndexError);
  CHECK_THROWS_AS(s.apply(GateOp::cnot(1, 1)), IndexError);
  CHECK_THROWS_AS(s.apply(GateOp::cnot(2, 0)), IndexError);
  CHECK_THROWS_AS(s.apply(GateOp{GateKind::X, 0, 1, {}}), ShapeError);
  CHECK_THROWS_AS(s.apply(GateOp{GateKind::Ry, 0, {}, {}}), ShapeError);
  CHECK_THROWS_AS(s.apply(GateOp{GateKind::H, 0, {}, 0.5}), ShapeError);
  Circuit c{2, {}};
  CHECK_THROWS_AS(c.add(GateOp::h(3)), IndexError);
}

TEST_CASE("run_circuit examples") {
  Circuit empty{1, {}};
  check_amps(run_circuit(empty, init_zero_state(1)), {1, 0});
  Circuit hh{1, {}};
  hh.add(GateOp::h(0)).add(GateOp::h(0));
  check_amps(run_circuit(hh, init_zero_state(1)), {1, 0});

  Circuit bell{2, {}};
  bell.add(GateOp::h(0)).add(GateOp::cnot(0, 1));
  const StateVector out = run_circuit(bell, init_zero_state(2));
  const Eigen::VectorXcd oracle = oracle::dense_operator(2, GateOp::cnot(0, 1)) *
                                  oracle::dense_operator(2, GateOp::h(0)) * init_zero_state(2).amplitudes();
  check_amps(out, {kInvSqrt2, 0, 0, kInvSqrt2});
  CHECK((out.amplitudes() - oracle).cwiseAbs().maxCoeff() <= 1e-12);

  CHECK_THROWS_AS(run_circuit(bell, init_zero_state(3)), ShapeError);
}

TEST_CASE("expectation_z examples") {
  CHECK(expectation_z(init_zero_state(1), 0) == doctest::Approx(1.0));
  CHECK(expectation_z(apply_gate(init_zero_state(1), GateOp::x(0)), 0) == doctest::Approx(-1.0));
  CHECK(std::abs(expectation_z(apply_gate(init_zero_state(1), GateOp::h(0)), 0)) <= 1e-15);
  CHECK_THROWS_AS(expectation_z(init_zero_state(1), 1), IndexError);
  // Qubit ordering: X on qubit 1 of two flips only the least significant bit.
  const StateVector s = apply_gate(init_zero_state(2), GateOp::x(1));
  CHECK(expectation_z(s, 0) == doctest::Approx(1.0));
  CHECK(expectation_z(s, 1) == doctest::Approx(-1.0));
}

TEST_CASE("sample_bitstrings examples") {
  Rng rng(5);
  const auto one = sample_bitstrings(apply_gate(init_zero_state(1), GateOp::x(0)), 100, rng);
  CHECK(one.size() == 1);
  CHECK(one.at("1") == 100);
  const auto zz = sample_bitstrings(init_zero_state(2), 5, rng);
  CHECK(zz.at("00") == 5);
  const auto plus = sample_bitstrings(apply_gate(init_zero_state(1), GateOp::h(0)), 10000, rng);
  CHECK(plus.at("0") + plus.at("1") == 10000);
  CHECK(plus.at("0") >= 4700);
  CHECK(plus.at("0") <= 5300);
  CHECK_THROWS(sample_bitstrings(init_zero_state(1), 0, rng));
}

TEST_CASE("sample_bitstrings is deterministic per seed") {
  Rng init(1);
  const StateVector s = random_state(3, init);
  Rng a(9), b(9);
  CHECK(sample_bitstrings(s, 500, a) == sample_bitstrings(s, 500, b));
}

TEST_CASE("angle_encode examples") {
  check_amps(angle_encode(std::vector<double>{0.0}), {1, 0});
  check_amps(angle_encode(std::vector<double>{kPi}), {0, 1});
  check_amps(angle_encode(std::vector<double>{kPi / 2, 0.0}), {kInvSqrt2, 0, kInvSqrt2, 0});
  CHECK_THROWS_AS(angle_encode(std::vector<double>(13, 0.0)), CapacityError);
}

TEST_CASE("property: norm preserved for 1000 random circuit/state pairs") {
  Rng rng(42);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(6));
    StateVector s = random_state(n, rng);
    const int len = 1 + static_cast<int>(rng.below(20));
    for (int k = 0; k < len; ++k) {
      s.apply(random_gate(n, rng));
      worst = std::max(worst, std::abs(s.norm_squared() - 1.0));
    }
  }
  CHECK(worst <= 1e-10);
}

TEST_CASE("property: apply_gate matches the dense Kronecker oracle") {
  double worst = 0.0;
  for (int n = 1; n <= 4; ++n) {
    for (double angle : {0.0, 0.37, -2.1, kPi}) {
      for (const GateOp& g : all_kinds(n, angle)) {
        const oracle::CMat u = oracle::dense_operator(n, g);
        for (Eigen::Index b = 0; b < (Eigen::Index{1} << n); ++b) {
          Eigen::VectorXcd basis = Eigen::VectorXcd::Zero(Eigen::Index{1} << n);
          basis(b) = 1;
          const StateVector out = apply_gate(StateVector::from_amplitudes(n, basis), g);
          worst = std::max(worst, (out.amplitudes() - u * basis).cwiseAbs().maxCoeff());
        }
      }
    }
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("property: gate matrices are unitary") {
  Rng rng(3);
  for (int k = 0; k < 9; ++k) {
    for (int trial = 0; trial < 20; ++trial) {
      const auto m = single_qubit_matrix<double>(static_cast<GateKind>(k), rng.uniform(-kPi, kPi));
      CHECK((m * m.adjoint() - Eigen::Matrix2cd::Identity()).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }
  const auto c = cnot_matrix<double>();
  CHECK((c * c.adjoint() - Eigen::Matrix4cd::Identity()).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("property: expectation_z within [-1, 1] and matches dense observable and sampling") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(4));
    const StateVector s = random_state(n, rng);
    for (int q = 0; q < n; ++q) {
      const double e = expectation_z(s, q);
      CHECK(e >= -1.0);
      CHECK(e <= 1.0);
      const std::complex<double> dense = s.amplitudes().dot(oracle::dense_z(n, q) * s.amplitudes());
      CHECK(std::abs(e - dense.real()) <= 1e-12);
    }
  }
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(3));
    const StateVector s = random_state(n, rng);
    const std::size_t shots = 100000;
    const auto idx = sample_indices(s, shots, rng);
    for (int q = 0; q < n; ++q) {
      double est = 0.0;
      for (auto i : idx) est += (i & static_cast<std::size_t>(s.mask(q))) ? -1.0 : 1.0;
      est /= static_cast<double>(shots);
      const double e = expectation_z(s, q);
      const double sigma = std::sqrt(std::max(1.0 - e * e, 1e-12) / static_cast<double>(shots));
      CHECK(std::abs(est - e) <= 4 * sigma + 1e-12);
    }
  }
}

TEST_CASE("property: angle_encode then expectation_z gives cos(x)") {
  Rng rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    const double x = rng.uniform(-2 * kPi, 2 * kPi);
    CHECK(std::abs(expectation_z(angle_encode(std::vector<double>{x}), 0) - std::cos(x)) <= 1e-10);
  }
}

TEST_CASE("from_amplitudes checks length and norm") {
  CHECK_THROWS_AS(StateVector::from_amplitudes(2, Eigen::VectorXcd::Ones(3)), ShapeError);
  CHECK_THROWS_AS(StateVector::from_amplitudes(1, Eigen::VectorXcd::Ones(2)), NumericError);
}

TEST_CASE("bitstring renders qubit 0 first") {
  CHECK(bitstring(0b10, 2) == "10");
  CHECK(bitstring(1, 3) == "001");
}
