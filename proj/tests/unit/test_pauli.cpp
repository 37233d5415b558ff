#include <gtest/gtest.h>

#include <random>

#include "corrvec/errors.hpp"
#include "corrvec/oracle.hpp"
#include "corrvec/pauli.hpp"
#include "test_util.hpp"

using namespace corrvec;

namespace {

const cplx I1{0.0, 1.0};

TEST(PauliString, LabelRoundTrip) {
  const auto s = PauliString::from_label("XIYZ");
  EXPECT_EQ(s.width(), 4);
  EXPECT_EQ(s.at(0), Pauli::Z);
  EXPECT_EQ(s.at(1), Pauli::Y);
  EXPECT_EQ(s.at(3), Pauli::X);
  EXPECT_EQ(s.label(), "XIYZ");
  EXPECT_EQ(s.weight(), 3);
  EXPECT_THROW(PauliString::from_label("XQ"), ParseError);
}

TEST(PauliString, SingleQubitProducts) {
  auto p = multiply_strings(PauliString::from_label("IX"), PauliString::from_label("IY"));
  EXPECT_EQ(p.string.label(), "IZ");
  EXPECT_NEAR(std::abs(p.phase - I1), 0.0, 1e-15);

  p = multiply_strings(PauliString::from_label("II"), PauliString::from_label("YZ"));
  EXPECT_EQ(p.string.label(), "YZ");
  EXPECT_NEAR(std::abs(p.phase - 1.0), 0.0, 1e-15);

  // qubit 0: Z X = iY, qubit 1: X X = I
  p = multiply_strings(PauliString::from_label("XZ"), PauliString::from_label("XX"));
  EXPECT_EQ(p.string.label(), "IY");
  EXPECT_NEAR(std::abs(p.phase - I1), 0.0, 1e-15);
}

TEST(PauliString, WidthMismatch) {
  EXPECT_THROW(multiply_strings(PauliString::from_label("X"), PauliString::from_label("XX")), DimensionError);
  EXPECT_THROW(PauliSum::from_label("X") + PauliSum::from_label("XX"), DimensionError);
}

TEST(PauliString, ProductMatchesDenseAndCommutationRule) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 300; ++trial) {
    const int w = 1 + trial % 4;
    const auto a = testutil::random_string(w, rng);
    const auto b = testutil::random_string(w, rng);
    const auto ab = multiply_strings(a, b);
    const auto ba = multiply_strings(b, a);
    const Eigen::MatrixXcd dense = testutil::kron_pauli(a) * testutil::kron_pauli(b);
    EXPECT_LT((dense - ab.phase * testutil::kron_pauli(ab.string)).norm(), 1e-12);
    EXPECT_EQ(ab.string, ba.string);

    int anti = 0;
    for (int q = 0; q < w; ++q) {
      if (a.at(q) != Pauli::I && b.at(q) != Pauli::I && a.at(q) != b.at(q)) ++anti;
    }
    const bool commute = anti % 2 == 0;
    EXPECT_EQ(a.commutes_with(b), commute);
    EXPECT_NEAR(std::abs(ab.phase - (commute ? 1.0 : -1.0) * ba.phase), 0.0, 1e-14);
    EXPECT_LT((testutil::kron_pauli(a) * testutil::kron_pauli(a) -
               Eigen::MatrixXcd::Identity(1 << w, 1 << w)).norm(), 1e-14);
  }
}

TEST(PauliSum, CancellationAndMerging) {
  const PauliSum a = PauliSum::from_label("X") + PauliSum::from_label("Z");
  const PauliSum b = PauliSum::from_label("X") - PauliSum::from_label("Z");
  EXPECT_TRUE((a * b - (2.0 * I1) * PauliSum::from_label("Y")).empty());

  const PauliSum c = a * b + a * b;
  EXPECT_EQ(c.size(), 1u);

  const PauliSum half = PauliSum::from_label("X", 0.5);
  const PauliSum sq = half * half;
  EXPECT_EQ(sq.size(), 1u);
  EXPECT_NEAR(std::abs(sq.coefficient(PauliString(1)) - 0.25), 0.0, 1e-15);

  std::mt19937_64 rng(3);
  const PauliSum r = testutil::random_sum(3, 6, rng, false);
  EXPECT_EQ(r * PauliSum::identity(3), r);
}

TEST(PauliSum, PrunesTinyTerms) {
  PauliSum s = PauliSum::from_label("XY", 1.0);
  s.add_term(PauliString::from_label("XY"), -1.0 + 1e-15);
  EXPECT_TRUE(s.empty());
  s.add_term(PauliString::from_label("ZZ"), 1e-15);
  EXPECT_TRUE(s.empty());
}

TEST(PauliSum, SumProductBound) {
  std::mt19937_64 rng(11);
  const auto a = testutil::random_sum(4, 7, rng, false);
  const auto b = testutil::random_sum(4, 5, rng, false);
  const auto ab = a * b;
  EXPECT_LE(ab.size(), a.size() * b.size());
  EXPECT_LT((materialize(ab) - materialize(a) * materialize(b)).norm(), 1e-11);
}

TEST(PauliSum, Adjoint) {
  const PauliSum a = PauliSum::from_label("X", cplx{1, 2});
  EXPECT_EQ(adjoint(a), PauliSum::from_label("X", cplx{1, -2}));
  const PauliSum z = PauliSum::from_label("Z", I1);
  EXPECT_EQ(adjoint(z), PauliSum::from_label("Z", -I1));
  std::mt19937_64 rng(5);
  const auto h = testutil::random_sum(3, 5, rng, true);
  EXPECT_EQ(adjoint(h), h);
  const auto r = testutil::random_sum(3, 5, rng, false);
  EXPECT_EQ(adjoint(adjoint(r)), r);
  EXPECT_LT((materialize(adjoint(r)) - materialize(r).adjoint()).norm(), 1e-12);
}

TEST(PauliSum, HermitianIffRealCoefficients) {
  EXPECT_TRUE(PauliSum::from_label("XY", 0.3).is_hermitian());
  EXPECT_FALSE(PauliSum::from_label("XY", cplx{0.3, 0.1}).is_hermitian());
}

TEST(PauliSum, ProductWithAdjointIsPsd) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    const auto a = testutil::random_sum(1 + trial % 4, 6, rng, false);
    const auto p = a * adjoint(a);
    EXPECT_TRUE(p.is_hermitian(1e-12));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(materialize(p));
    EXPECT_GE(es.eigenvalues().minCoeff(), -1e-10);
  }
}

TEST(PauliSum, DumpRoundTrip) {
  std::mt19937_64 rng(19);
  const auto a = testutil::random_sum(5, 9, rng, false);
  const auto text = a.dump();
  EXPECT_EQ(PauliSum::parse_dump(text), a);
  EXPECT_EQ(PauliSum::parse_dump(text).dump(), text);
}

TEST(Materialize, MatchesKronecker) {
  std::mt19937_64 rng(23);
  Eigen::Matrix2cd z;
  z << 1, 0, 0, -1;
  EXPECT_LT((materialize(PauliSum::from_label("Z")) - Eigen::MatrixXcd(z)).norm(), 1e-15);
  const Eigen::MatrixXcd xx = materialize(PauliSum::from_label("XX"));
  EXPECT_LT((xx - Eigen::MatrixXcd(Eigen::Matrix4cd::Identity().rowwise().reverse())).norm(), 1e-15);
  for (int trial = 0; trial < 5; ++trial) {
    const auto a = testutil::random_sum(3, 6, rng, false);
    EXPECT_LT((materialize(a) - testutil::kron_sum(a)).norm(), 1e-12);
  }
  EXPECT_THROW(materialize(PauliSum::identity(15)), DimensionError);
}

TEST(Expectation, BasicStates) {
  EXPECT_NEAR(expectation_exact(QuantumState(1), PauliSum::from_label("Z")).real(), 1.0, 1e-15);
  Eigen::VectorXcd plus(2);
  plus << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
  EXPECT_NEAR(expectation_exact(QuantumState(1, plus), PauliSum::from_label("X")).real(), 1.0, 1e-15);
  const PauliSum a = PauliSum::from_label("Z", 2.0) + PauliSum::from_label("X", 0.5);
  EXPECT_NEAR(expectation_exact(QuantumState(1), a).real(), 2.0, 1e-15);
  EXPECT_THROW(expectation_exact(QuantumState(2), a), DimensionError);
}

TEST(Expectation, LinearPhaseInvariantAndDense) {
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 20; ++trial) {
    const int w = 1 + trial % 4;
    const auto a = testutil::random_sum(w, 5, rng, true);
    const auto b = testutil::random_sum(w, 5, rng, false);
    const Eigen::VectorXcd v = testutil::random_state(w, rng);
    const QuantumState psi(w, v);
    const QuantumState phased(w, v * std::polar(1.0, 0.731));
    const cplx ea = expectation_exact(psi, a);
    const cplx eb = expectation_exact(psi, b);
    EXPECT_NEAR(std::abs(expectation_exact(psi, a + 2.5 * b) - (ea + 2.5 * eb)), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(expectation_exact(phased, a) - ea), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(ea.imag()), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(cplx(v.dot(testutil::kron_sum(b) * v)) - eb), 0.0, 1e-12);
  }
}

TEST(Expectation, PauliTraceMatchesDense) {
  std::mt19937_64 rng(31);
  const Eigen::MatrixXcd rho = testutil::random_density(3, rng);
  for (int k = 0; k < 20; ++k) {
    const auto s = testutil::random_string(3, rng);
    EXPECT_NEAR(std::abs(pauli_trace(rho, s) - (rho * testutil::kron_pauli(s)).trace()), 0.0, 1e-12);
  }
}

}  // namespace
