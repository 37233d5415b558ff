#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "corrvec/correction_vector.hpp"
#include "corrvec/errors.hpp"
#include "corrvec/molham.hpp"
#include "corrvec/oracle.hpp"
#include "test_util.hpp"

using namespace corrvec;

namespace {

constexpr double kPi = std::numbers::pi;
const cplx I1{0.0, 1.0};

Eigen::MatrixXcd dense_of(const PauliSum& a) { return materialize(a); }

struct H2Setup {
  MolecularIntegrals ints = read_fcidump(testutil::data("h2_2.0A.fcidump"));
  PauliSum h = hamiltonian_to_qubits(ints);
  GroundState gs = exact_ground(h, 2);
  Estimator est{{}, {}};
  AnsatzSpec spec{4, 2};
  std::vector<double> theta;
  double e0 = 0.0;

  H2Setup() {
    VqeOptions o;
    o.occupied = {0, 2};
    o.tol = 1e-13;
    o.max_sweeps = 500;
    theta = vqe_ground_state(h + number_penalty(4, 2, 0.5), spec, est, o).theta;
    e0 = expectation_exact(run_pure(build_hea(spec), theta), h).real();
  }
};

const H2Setup& h2() {
  static const H2Setup s;
  return s;
}

GfProblem h2_problem() {
  const auto& s = h2();
  GfProblem p(s.h, s.e0, s.spec, s.theta, s.est);
  p.set_reference_occupation({0, 2});
  return p;
}

TEST(BuildQ, Substitution) {
  const PauliSum q = build_q(PauliSum::from_label("Z"), -1.0, I1, +1);
  EXPECT_EQ(q, PauliSum::identity(1, 1.0 + I1) + PauliSum::from_label("Z"));
  const PauliSum h = PauliSum::from_label("XZ", 0.3) + PauliSum::from_label("ZZ", -0.2);
  EXPECT_EQ(build_q(h, 0.0, 0.0, +1), h);
  const PauliSum qm = build_q(h, 0.4, 1.5 + 0.05 * I1, -1);
  EXPECT_NEAR(std::abs(qm.coefficient(PauliString(2)) - (1.5 + 0.05 * I1 + 0.4)), 0.0, 1e-15);
  EXPECT_THROW(build_q(h, 0.0, 0.0, 2), ValidationError);
}

TEST(BuildQ, GramMatchesDenseProduct) {
  std::mt19937_64 rng(5);
  const PauliSum h = testutil::random_sum(2, 8, rng, true);
  const double e0 = 0.37;
  const cplx z{0.8, 0.3};
  const Eigen::MatrixXcd hm = dense_of(h) - e0 * Eigen::MatrixXcd::Identity(4, 4);
  const Eigen::MatrixXcd zi = z * Eigen::MatrixXcd::Identity(4, 4);
  const PauliSum q = build_q(h, e0, z, +1);
  const Eigen::MatrixXcd expected = (std::conj(z) * Eigen::MatrixXcd::Identity(4, 4) + hm) * (zi + hm);
  EXPECT_LT((dense_of(adjoint(q) * q) - expected).norm(), 1e-12);
}

TEST(VNorm, ProductStateAndH2) {
  const Estimator est({}, {});
  AnsatzSpec spec{4, 1};
  const auto theta = initial_angles(spec, 0, 0.0, {0, 2});
  const GfProblem p(hamiltonian_to_qubits(hubbard_dimer(1.0, 4.0)), 0.0, spec, theta, est);
  EXPECT_NEAR(p.v_norm_sq(1, Branch::particle), 1.0, 1e-12);
  EXPECT_NEAR(p.v_norm_sq(1, Branch::hole), 0.0, 1e-12);
  EXPECT_NEAR(p.v_norm_sq(0, Branch::hole), 1.0, 1e-12);

  const auto& s = h2();
  const GfProblem q(s.h, s.e0, s.spec, s.theta, s.est);
  const PauliSum v = perturbation_op(1, LadderKind::creation, 4);
  const double expected = matrix_element(s.gs.psi, adjoint(v) * v, s.gs.psi).real();
  EXPECT_NEAR(q.v_norm_sq(1, Branch::particle), expected, 1e-8);
}

TEST(CostFunctional, ZeroAtExactCorrectionVectorAndPsd) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> re(-1.5, 1.5), im(0.02, 0.5);
  std::uniform_int_distribution<int> orb(0, 3);
  for (int sys = 0; sys < 2; ++sys) {
    const PauliSum h = sys == 0 ? h2().h : hamiltonian_to_qubits(hubbard_dimer(1.0, 4.0));
    const auto gs = exact_ground(h, 2);
    for (int trial = 0; trial < 5; ++trial) {
      const cplx z{re(rng), im(rng)};
      const int j = orb(rng);
      const Branch b = trial % 2 ? Branch::hole : Branch::particle;
      const Eigen::VectorXcd vpsi = apply_to(perturbation_op(j, ladder_of(b), 4), gs.psi);
      if (vpsi.squaredNorm() < kVNormThreshold) continue;
      const PauliSum q = build_q(h, gs.energy, z, q_sign(b));
      const Eigen::VectorXcd chi = exact_correction_vector(h, gs.energy, z, q_sign(b), vpsi);
      EXPECT_LE(cost_g_dense(q, vpsi, chi.normalized()), 1e-10);
      const Eigen::MatrixXcd hp = h_prime_dense(q, vpsi);
      EXPECT_LT((hp - hp.adjoint()).norm(), 1e-10);
      const double lo = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(hp).eigenvalues().minCoeff();
      EXPECT_GE(lo, -1e-10);
      EXPECT_LE(lo, 1e-10);
      const Eigen::VectorXcd qchi = apply_to(q, chi);
      const Eigen::VectorXcd projected = qchi - vpsi * (vpsi.dot(qchi) / vpsi.squaredNorm());
      EXPECT_LT(projected.norm(), 1e-10);
    }
  }
}

TEST(CostFunctional, TrivialShiftIsProjector) {
  // H = 0, e0 = 0, z = 1: g = 1 - |<V|U>|^2 / <V|V>.
  const Estimator est({}, {});
  AnsatzSpec spec{1, 1, {GateKind::Ry}};
  const GfProblem p(PauliSum::identity(1, 0.0), 0.0, spec, {0.0, 0.0}, est);
  const CostG cg(p, 0, Branch::particle, 1.0);
  const Circuit u = build_hea(spec);
  for (double t : {0.0, 0.4, 1.3, kPi}) {
    const double g = cg(u, {0.0, t}, 0);
    EXPECT_NEAR(g, 1.0 - std::pow(std::sin(t / 2.0), 2), 1e-12);
    EXPECT_GE(g, -1e-12);
  }
}

TEST(CostFunctional, CircuitMatchesDenseAndIsNonNegative) {
  const auto& s = h2();
  const GfProblem p = h2_problem();
  const AnsatzSpec spec{4, 2};
  const Circuit u = build_hea(spec);
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const cplx z{0.3 * trial - 1.0, 0.1};
    const Branch b = trial % 2 ? Branch::hole : Branch::particle;
    const int j = trial % 4;
    if (p.v_norm_sq(j, b) < kVNormThreshold) continue;
    const CostG cg(p, j, b, z);
    const auto theta = initial_angles(spec, rng(), kPi);
    const double g = cg(u, theta, 0);
    const Eigen::VectorXcd psi0 = run_pure(s.est.exact_noiseless() ? p.ground_circuit() : u, s.theta).amplitudes();
    const Eigen::VectorXcd vpsi = apply_to(p.v(j, b), psi0);
    EXPECT_NEAR(g, cost_g_dense(cg.q(), vpsi, run_pure(u, theta).amplitudes()), 1e-10);
    EXPECT_GE(g, -1e-9);
  }
}

TEST(Solve, SingleLevelRecoversCorrectionVector) {
  // H = -Z has ground |0> at E0 = -1; c+ excites it to |1> at +1.
  const Estimator est({}, {});
  AnsatzSpec gspec{1, 1};
  const PauliSum h = PauliSum::from_label("Z", -1.0);
  const GfProblem p(h, -1.0, gspec, initial_angles(gspec, 0, 0.0), est);
  const cplx z{2.0, 0.05};
  CvOptions o;
  o.eps = 1e-12;
  o.residual = ResidualKind::v_norm;
  const auto sol = solve_correction_vector(p, 0, Branch::particle, z, AnsatzSpec{1, 1}, {}, o, 1);
  EXPECT_LT(sol.g, 1e-6);
  const Eigen::VectorXcd u = run_pure(build_hea(sol.spec), sol.theta).amplitudes();
  const Eigen::VectorXcd vpsi = apply_to(p.v(0, Branch::particle), Eigen::VectorXcd::Unit(2, 0));
  const Eigen::VectorXcd chi = exact_correction_vector(h, -1.0, z, -1, vpsi);
  EXPECT_GE(std::norm(chi.normalized().dot(u)), 1.0 - 1e-8);
  // gamma Q U|0> rebuilds V|psi0>.
  const Eigen::VectorXcd rebuilt = sol.gamma * apply_to(build_q(h, -1.0, z, -1), u);
  EXPECT_LT((rebuilt - vpsi).norm(), 1e-6);
  EXPECT_NEAR(std::abs(gf_element(p, 0, Branch::particle, sol, 0) - 1.0 / (z - 2.0)), 0.0, 1e-6);
}

TEST(Solve, FarFrequencyNeedsAtMostOneSweep) {
  const auto& s = h2();
  const GfProblem p = h2_problem();
  CvOptions o;
  o.residual = ResidualKind::v_norm;
  const auto sol = solve_correction_vector(p, 1, Branch::particle, cplx{0.0, 1e3}, AnsatzSpec{4, 1}, {}, o, 3);
  EXPECT_TRUE(sol.converged);
  EXPECT_LE(sol.sweeps, 1);
  EXPECT_LT(sol.residual, o.eps);
  const auto g = exact_resolvent_gf(s.h, s.gs.energy, s.gs.psi, cplx{0.0, 1e3}, {0, 1, 2, 3});
  const cplx gp = gf_element(p, 1, Branch::particle, sol, 0);
  EXPECT_NEAR(std::abs(gp - 1.0 / cplx{0.0, 1e3} * p.v_norm_sq(1, Branch::particle)), 0.0, 1e-5);
  EXPECT_LT(std::abs(g(1, 1)), 2e-3);
}

TEST(Problem, StartDeterminants) {
  GfProblem p = h2_problem();
  using Dets = std::vector<std::vector<int>>;
  EXPECT_EQ(p.start_determinants(1, Branch::particle), (Dets{{0, 1, 2}, {0, 1, 3}}));
  EXPECT_EQ(p.start_determinants(3, Branch::hole), (Dets{{0}, {1}}));
  EXPECT_EQ(p.start_determinants(2, Branch::particle), (Dets{{0, 2, 3}, {1, 2, 3}}));
  p.set_reference_occupation({});
  EXPECT_TRUE(p.start_determinants(1, Branch::particle).empty());
}

TEST(Solve, AnnihilatingPerturbationGivesZeroSolution) {
  const Estimator est({}, {});
  AnsatzSpec spec{2, 1};
  const GfProblem p(PauliSum::from_label("ZI") + PauliSum::from_label("IZ"), -2.0, spec,
                    initial_angles(spec, 0, 0.0, {0, 1}), est);
  const auto sol = solve_correction_vector(p, 0, Branch::particle, cplx{0.1, 0.1}, spec, {}, {}, 0);
  EXPECT_TRUE(sol.zero);
  EXPECT_EQ(sol.sweeps, 0);
  EXPECT_EQ(sol.gamma, cplx(0.0));
  EXPECT_EQ(gf_element(p, 1, Branch::particle, sol, 0), cplx(0.0));
}

TEST(Gamma, ScalarShift) {
  const Estimator est({}, {});
  AnsatzSpec spec{1, 1, {GateKind::Ry}};
  const GfProblem p(PauliSum::identity(1, 0.0), 0.0, spec, {0.0, 0.0}, est);
  const cplx c{2.0, 1.0};
  const CostG cg(p, 0, Branch::particle, c);
  EXPECT_NEAR(std::abs(gamma(cg, build_hea(spec), {0.0, kPi}, 0) - 1.0 / c), 0.0, 1e-12);
  EXPECT_THROW(gamma(cg, build_hea(spec), {0.0, 0.0}, 0), NumericalError);
}

TEST(Sweep, SingleMatsubaraPointMatchesOracle) {
  const auto& s = h2();
  const GfProblem p = h2_problem();
  FrequencyGrid grid = matsubara_grid(0.5, 1);
  SweepOptions o;
  o.spec = AnsatzSpec{4, 2};
  o.cv.eps = 1e-10;
  const auto series = gf_matrix_sweep(p, grid, o);
  const auto exact = exact_resolvent_gf(s.h, s.gs.energy, s.gs.psi, grid.points[0], {0, 1, 2, 3});
  EXPECT_LE((series.g[0] - exact).cwiseAbs().maxCoeff(), 1e-4);
}

TEST(Sweep, RestrictedMirrorsUnrestricted) {
  const auto& s = h2();
  const GfProblem p = h2_problem();
  const FrequencyGrid grid = retarded_grid(-1.0, 1.0, 5);
  SweepOptions o;
  o.spec = AnsatzSpec{4, 1};
  o.cv.eps = 1e-10;
  const auto full = gf_matrix_sweep(p, grid, o);
  o.restricted = true;
  const auto half = gf_matrix_sweep(p, grid, o);
  for (std::size_t k = 0; k < grid.size(); ++k) EXPECT_LT((full.g[k] - half.g[k]).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Sweep, HubbardDimerPoles) {
  const double t = 1.0, u = 4.0, eta = 0.05;
  const PauliSum h = hamiltonian_to_qubits(hubbard_dimer(t, u));
  const Estimator est({}, {});
  AnsatzSpec gspec{4, 2};
  VqeOptions vo;
  vo.occupied = {0, 3};
  vo.tol = 1e-13;
  vo.max_sweeps = 500;
  const auto vr = vqe_ground_state(h + number_penalty(4, 2, 1.0), gspec, est, vo);
  const double e0 = expectation_exact(run_pure(build_hea(gspec), vr.theta), h).real();
  const double e0_exact = 0.5 * (u - std::sqrt(u * u + 16.0 * t * t));
  ASSERT_NEAR(e0, e0_exact, 1e-6);
  GfProblem p(h, e0, gspec, vr.theta, est);
  p.set_reference_occupation({0, 3});
  const FrequencyGrid grid = retarded_grid(-3.0, 7.0, 101, eta);
  SweepOptions o;
  o.spec = AnsatzSpec{4, 2};
  o.cv.eps = 1e-4;
  o.restricted = true;
  const auto series = gf_matrix_sweep(p, grid, o);
  // N -+ 1 levels: -t, +t and u - t, u + t.
  const std::vector<double> poles{e0_exact - t, e0_exact + t, u - t - e0_exact, u + t - e0_exact};
  std::vector<double> peaks;
  for (std::size_t k = 1; k + 1 < grid.size(); ++k) {
    const double x = series.trace(k);
    if (x < series.trace(k - 1) && x < series.trace(k + 1) && x < -1.0) peaks.push_back(grid.points[k].real());
  }
  ASSERT_EQ(peaks.size(), poles.size());
  std::sort(peaks.begin(), peaks.end());
  std::vector<double> sorted = poles;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t k = 0; k < peaks.size(); ++k) EXPECT_LE(std::abs(peaks[k] - sorted[k]), 2.0 * eta);
}

TEST(Sweep, ResumeAndWorkersMatch) {
  const auto& s = h2();
  const GfProblem p = h2_problem();
  const FrequencyGrid grid = retarded_grid(-1.0, 1.0, 7);
  SweepOptions o;
  o.spec = AnsatzSpec{4, 1};
  o.cv.eps = 1e-6;
  o.restricted = true;
  const auto whole = run_gf_sweep(p, grid, o);
  ASSERT_TRUE(whole.complete);
  o.stop_after = 9;
  const auto part = run_gf_sweep(p, grid, o);
  EXPECT_FALSE(part.complete);
  EXPECT_EQ(part.records.size(), 9u);
  o.stop_after = -1;
  o.workers = 3;
  const auto resumed = run_gf_sweep(p, grid, o, part.records);
  ASSERT_TRUE(resumed.complete);
  ASSERT_EQ(resumed.records.size(), whole.records.size());
  for (std::size_t r = 0; r < whole.records.size(); ++r) {
    EXPECT_EQ(resumed.records[r].column, whole.records[r].column);
    EXPECT_EQ(resumed.records[r].solution.theta, whole.records[r].solution.theta);
  }
}

TEST(Sweep, EmptyInputs) {
  const auto& s = h2();
  const GfProblem p = h2_problem();
  SweepOptions o;
  o.orbitals = std::vector<int>{};
  EXPECT_EQ(gf_matrix_sweep(p, matsubara_grid(1.0, 2), o).dimension(), 0);
  EXPECT_THROW(gf_matrix_sweep(p, FrequencyGrid{}, SweepOptions{}), ValidationError);
}

}  // namespace
