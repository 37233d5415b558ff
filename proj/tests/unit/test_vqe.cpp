#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "corrvec/errors.hpp"
#include "corrvec/fermion.hpp"
#include "corrvec/molham.hpp"
#include "corrvec/oracle.hpp"
#include "corrvec/vqe.hpp"
#include "test_util.hpp"

using namespace corrvec;

namespace {

constexpr double kPi = std::numbers::pi;

TEST(Hea, SlotCountAndStructure) {
  AnsatzSpec spec{4, 2};
  const Circuit c = build_hea(spec);
  EXPECT_EQ(spec.num_slots(), 24);
  EXPECT_EQ(c.num_slots(), 24);
  EXPECT_EQ(c.two_qubit_gate_count(), 6);
  EXPECT_NO_THROW(c.validate());

  AnsatzSpec tri{3, 1, {GateKind::Rx, GateKind::Ry, GateKind::Rz}};
  EXPECT_EQ(build_hea(tri).num_slots(), 3 * 3 * 2);
  EXPECT_THROW(build_hea(AnsatzSpec{3, 0}), ValidationError);
  EXPECT_THROW(build_hea(AnsatzSpec{3, 1, {GateKind::H}}), ValidationError);
}

TEST(Hea, DeterminantInitialization) {
  AnsatzSpec spec{4, 2};
  const auto theta = initial_angles(spec, 0, 0.0, {0, 2});
  const auto psi = run_pure(build_hea(spec), theta);
  EXPECT_NEAR(std::abs(psi.amplitudes()[0b0101]), 1.0, 1e-12);
}

TEST(Hea, DeepenKeepsLeadingAngles) {
  AnsatzSpec spec{3, 1};
  const auto theta = initial_angles(spec, 5);
  const auto deeper = deepen_angles(spec, theta);
  AnsatzSpec next = spec;
  next.depth = 2;
  ASSERT_EQ(static_cast<int>(deeper.size()), next.num_slots());
  for (std::size_t k = 0; k < theta.size(); ++k) EXPECT_EQ(deeper[k], theta[k]);
  for (std::size_t k = theta.size(); k < deeper.size(); ++k) EXPECT_EQ(deeper[k], 0.0);
}

TEST(Rotosolve, WrapAngle) {
  EXPECT_NEAR(wrap_angle(3.0 * kPi), kPi, 1e-12);
  EXPECT_NEAR(wrap_angle(-kPi), kPi, 1e-12);
  EXPECT_NEAR(wrap_angle(0.25), 0.25, 1e-15);
  for (double a = -20.0; a < 20.0; a += 0.37) {
    const double w = wrap_angle(a);
    EXPECT_GT(w, -kPi);
    EXPECT_LE(w, kPi);
    EXPECT_NEAR(std::cos(w), std::cos(a), 1e-12);
  }
}

TEST(Rotosolve, ExactMinimumOfSinusoid) {
  for (double phase : {0.0, 0.7, -2.1, 3.0}) {
    const CostFunction f = [&](const std::vector<double>& t) { return 1.5 + 2.0 * std::sin(t[0] + phase); };
    const auto r = rotosolve_sweep(f, {0.3});
    EXPECT_NEAR(r.cost, -0.5, 1e-12);
    EXPECT_NEAR(f(r.theta), -0.5, 1e-12);
    EXPECT_EQ(r.evaluations, 3);
  }
}

TEST(Rotosolve, NonFiniteCostAborts) {
  const CostFunction f = [](const std::vector<double>&) { return std::nan(""); };
  EXPECT_THROW(rotosolve_sweep(f, {0.0, 0.0}), NumericalError);
}

TEST(Rotosolve, SinusoidCheckRejectsQuadratic) {
  const CostFunction f = [](const std::vector<double>& t) { return t[0] * t[0]; };
  RotosolveOptions o;
  o.check_sinusoid = true;
  EXPECT_THROW(rotosolve_sweep(f, {0.2}, o), NumericalError);
}

TEST(Rotosolve, MonotoneOnCircuitCost) {
  std::mt19937_64 rng(11);
  const PauliSum h = testutil::random_sum(3, 12, rng, true);
  AnsatzSpec spec{3, 2};
  const Circuit c = build_hea(spec);
  const Estimator est({}, {});
  const CostFunction f = [&](const std::vector<double>& t) { return est.expectation(c, t, h, 0); };
  RotosolveOptions o;
  o.check_monotone = true;
  o.check_sinusoid = true;
  auto theta = initial_angles(spec, 1, 1.0);
  double prev = f(theta);
  for (int s = 0; s < 5; ++s) {
    auto r = rotosolve_sweep(f, theta, o);
    EXPECT_NEAR(r.cost, f(r.theta), 1e-10);
    EXPECT_LE(r.cost, prev + 1e-10);
    prev = r.cost;
    theta = r.theta;
  }
}

TEST(Vqe, H2GroundStateMatchesFci) {
  const auto ints = read_fcidump(testutil::data("h2_2.0A.fcidump"));
  const PauliSum h = hamiltonian_to_qubits(ints);
  const double fci = exact_ground(h, 2).energy;
  AnsatzSpec spec{4, 2};
  VqeOptions o;
  o.occupied = {0, 2};
  o.tol = 1e-10;
  o.max_sweeps = 400;
  const Estimator est({}, {});
  const auto r = vqe_ground_state(h + number_penalty(4, 2, 0.5), spec, est, o);
  EXPECT_TRUE(r.trace.converged);
  EXPECT_NEAR(r.energy, fci, 1e-6);
  const auto psi = run_pure(build_hea(spec), r.theta);
  EXPECT_NEAR(expectation_exact(psi, h).real(), fci, 1e-6);
  for (std::size_t k = 1; k < r.trace.cost_history.size(); ++k) {
    EXPECT_LE(r.trace.cost_history[k], r.trace.cost_history[k - 1] + 1e-10);
  }
  EXPECT_FALSE(r.trace.to_log().empty());
}

TEST(Vqe, SampledRunIsReproducible) {
  const auto ints = hubbard_dimer(1.0, 4.0);
  const PauliSum h = hamiltonian_to_qubits(ints);
  AnsatzSpec spec{4, 1};
  VqeOptions o;
  o.occupied = {0, 3};
  o.max_sweeps = 4;
  o.tol = 1e-3;
  MeasurementSettings ms;
  ms.mode = MeasureMode::sampled;
  ms.shots = 10000;
  ms.seed = 9;
  const Estimator est(ms, {});
  const auto a = vqe_ground_state(h, spec, est, o);
  const auto b = vqe_ground_state(h, spec, est, o);
  EXPECT_EQ(a.theta, b.theta);
  EXPECT_EQ(a.energy, b.energy);
}

}  // namespace
