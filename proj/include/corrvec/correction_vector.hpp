#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "corrvec/circuit.hpp"
#include "corrvec/fermion.hpp"
#include "corrvec/greens.hpp"
#include "corrvec/pauli.hpp"
#include "corrvec/vqe.hpp"

namespace corrvec {

constexpr double kVNormThreshold = 1e-8;
constexpr double kGammaThreshold = 1e-10;

/// z I + sign (H - e0 I).
PauliSum build_q(const PauliSum& h, double e0, cplx z, int sign);

/// Hamiltonian, reference energy and prepared ground state shared by every
/// correction-vector solve of one system.
class GfProblem {
 public:
  GfProblem(PauliSum h, double e0, AnsatzSpec ground_spec, std::vector<double> ground_theta, const Estimator& est,
            std::uint64_t seed = 0);

  const PauliSum& hamiltonian() const { return h_; }
  double e0() const { return e0_; }
  int width() const { return h_.width(); }
  std::uint64_t seed() const { return seed_; }
  const Estimator& estimator() const { return est_; }
  const Circuit& ground_circuit() const { return ground_; }
  const std::vector<double>& ground_theta() const { return ground_theta_; }
  const Estimator::Reference& reference() const { return *ref_; }

  /// Occupied qubits of the reference determinant. Cold-started solves then
  /// screen the determinants of the perturbed sector (one electron more or
  /// less, with the spin of the perturbed orbital) and start from the one
  /// with the lowest residual.
  void set_reference_occupation(std::vector<int> occupied);
  /// Candidate start determinants as sorted occupied-qubit lists; empty
  /// when no reference occupation is set.
  std::vector<std::vector<int>> start_determinants(int orbital, Branch b) const;

  const PauliSum& v(int orbital, Branch b) const;
  /// <psi0|V+ V|psi0>, estimated once per (orbital, branch).
  double v_norm_sq(int orbital, Branch b) const;

 private:
  PauliSum h_;
  double e0_;
  std::uint64_t seed_;
  const Estimator& est_;
  Circuit ground_;
  std::vector<double> ground_theta_;
  std::shared_ptr<const Estimator::Reference> ref_;
  std::vector<int> occupied_;
  std::vector<PauliSum> v_[2];
  std::vector<double> vv_[2];
};

/// g(theta) = <U|Q+Q|U> - |<V|Q U>|^2 / <V|V> for one (z, orbital, branch).
class CostG {
 public:
  CostG(const GfProblem& p, int orbital, Branch b, cplx z);

  struct Parts {
    double term1 = 0.0;
    cplx overlap{0.0, 0.0};  // <V|Q U|0>
    double g = 0.0;
  };
  Parts evaluate(const Circuit& u, const std::vector<double>& theta, std::uint64_t task) const;
  double operator()(const Circuit& u, const std::vector<double>& theta, std::uint64_t task) const {
    return evaluate(u, theta, task).g;
  }
  /// <V|Q U(theta)|0>.
  cplx v_q_overlap(const Circuit& u, const std::vector<double>& theta, std::uint64_t task) const;

  const PauliSum& q() const { return q_; }
  double v_norm_sq() const { return vv_; }

 private:
  const GfProblem& p_;
  PauliSum q_;
  PauliSum qdq_;
  PauliSum vdq_;
  double vv_;
};

/// Dense forms used as ground truth: g at an arbitrary state and the operator
/// H' = Q+ (1 - |V><V| / <V|V>) Q.
double cost_g_dense(const PauliSum& q, const Eigen::VectorXcd& v_psi0, const Eigen::VectorXcd& u);
Eigen::MatrixXcd h_prime_dense(const PauliSum& q, const Eigen::VectorXcd& v_psi0);

/// v_norm: g / <V|V>. reconstruction: g / (<Q+Q> - g), the squared relative
/// error of gamma Q U|0> as an approximation to |V>.
enum class ResidualKind { v_norm, reconstruction };

const char* residual_kind_name(ResidualKind k);

struct CvOptions {
  double eps = 0.05;
  ResidualKind residual = ResidualKind::reconstruction;
  int max_sweeps = 300;
  int stall_sweeps = 10;
  double stall_rel = 0.01;
  int max_depth = 0;  // 0: start depth + 3
  RotosolveOptions rotosolve;

  void validate() const;
};

struct CorrectionVectorSolution {
  AnsatzSpec spec;
  std::vector<double> theta;
  double residual = 0.0;  // convergence measure selected by CvOptions::residual
  double g = 0.0;
  cplx gamma{0.0, 0.0};
  int sweeps = 0;
  bool converged = false;
  bool zero = false;  // V annihilates the ground state
};

/// Rotosolve on g from theta0 (small random angles when empty), growing the
/// ansatz by one block after a stall, up to max_depth. The best solution seen
/// is returned with its gamma.
CorrectionVectorSolution solve_correction_vector(const GfProblem& p, int orbital, Branch b, cplx z,
                                                 const AnsatzSpec& spec, const std::vector<double>& theta0,
                                                 const CvOptions& opts, std::uint64_t task_base);

/// <V|V> / <V|Q U(theta*)|0>; throws NumericalError below 1e-10.
cplx gamma(const CostG& cost, const Circuit& u, const std::vector<double>& theta, std::uint64_t task);

/// gamma <V_i|U(theta*)|0> with V_i of the solution's branch.
cplx gf_element(const GfProblem& p, int i, Branch b, const CorrectionVectorSolution& sol, std::uint64_t task);

struct SweepOptions {
  AnsatzSpec spec;  // width is taken from the problem
  CvOptions cv;
  std::optional<std::vector<int>> orbitals;  // columns to solve; unset means all
  bool restricted = false;    // solve spin-up columns and mirror
  bool spin_blocks = true;   // skip cross-spin elements when H conserves S_z
  bool refine = true;
  double refine_threshold = 0.2;
  int workers = 1;
  long stop_after = -1;  // stop after this many new solves (-1: no limit)
};

/// One solved (point, column, branch). `column[i]` is G_ij for the particle
/// branch and G_ji for the hole branch.
struct PointRecord {
  int point = 0;
  int orbital = 0;
  Branch branch = Branch::particle;
  bool refined = false;
  CorrectionVectorSolution solution;
  std::vector<cplx> column;
  std::string error;
};

struct SweepState {
  std::vector<PointRecord> records;
  bool complete = false;
};

using RecordSink = std::function<void(const PointRecord&)>;

/// Solves every (column, branch) chain over the grid in order, warm-starting
/// from the previous point of the same chain, then re-solves points that
/// deviate from both neighbours with eps / 10. `prior` records are reused
/// and not recomputed; every new record is passed to `sink` from a single
/// thread at a time.
SweepState run_gf_sweep(const GfProblem& p, const FrequencyGrid& grid, const SweepOptions& opts,
                        const std::vector<PointRecord>& prior = {}, const RecordSink& sink = {});

/// Assembles the series from a completed set of records.
GreensSeries assemble_series(const FrequencyGrid& grid, int width, const SweepOptions& opts,
                             const std::vector<PointRecord>& records);

GreensSeries gf_matrix_sweep(const GfProblem& p, const FrequencyGrid& grid, const SweepOptions& opts);

/// Columns solved by a sweep (spin-up only when restricted).
std::vector<int> sweep_columns(int width, const SweepOptions& opts);

}  // namespace corrvec
