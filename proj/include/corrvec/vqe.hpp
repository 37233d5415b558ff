#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "corrvec/circuit.hpp"
#include "corrvec/pauli.hpp"

namespace corrvec {

struct AnsatzSpec {
  int width = 0;
  int depth = 1;
  std::vector<GateKind> pattern{GateKind::Ry, GateKind::Rz};

  void validate() const;
  int num_slots() const { return width * static_cast<int>(pattern.size()) * (depth + 1); }
  /// Slot of rotation `k` on qubit `q` in S layer `layer` (0..depth).
  int slot(int layer, int q, int k) const {
    return (layer * width + q) * static_cast<int>(pattern.size()) + k;
  }
};

/// depth x [S layer; CNOT ladder 0->1->...->m-1] followed by a final S layer.
Circuit build_hea(const AnsatzSpec& spec);

/// Angles for spec.depth + 1: a block is appended after the last S layer and
/// its new slots start at zero.
std::vector<double> deepen_angles(const AnsatzSpec& spec, const std::vector<double>& theta);

/// Small uniform angles in [-spread, spread]; with `occupied`, the final-layer
/// Ry angle on those qubits is set to pi so that zero noise prepares the
/// matching determinant.
std::vector<double> initial_angles(const AnsatzSpec& spec, std::uint64_t seed, double spread = 0.1,
                                   const std::vector<int>& occupied = {});

using CostFunction = std::function<double(const std::vector<double>&)>;

struct RotosolveOptions {
  /// Re-evaluates the cost after each slot update and throws if it rose by
  /// more than `monotone_tol` (exact-mode invariant).
  bool check_monotone = false;
  double monotone_tol = 1e-10;
  /// f(t) + f(t + pi) == f(t + pi/2) + f(t - pi/2) per slot.
  bool check_sinusoid = false;
  double sinusoid_tol = 1e-8;
};

struct SweepResult {
  std::vector<double> theta;
  double cost = 0.0;  // predicted minimum after the last slot update
  int evaluations = 0;
};

double wrap_angle(double a);

SweepResult rotosolve_sweep(const CostFunction& cost, std::vector<double> theta, const RotosolveOptions& opts = {});

struct OptimizationTrace {
  int iterations = 0;
  std::vector<double> cost_history;  // one value per sweep
  std::vector<double> theta;
  bool converged = false;
  double wall_seconds = 0.0;

  /// `iteration cost` lines.
  std::string to_log() const;
};

struct VqeOptions {
  double tol = 1e-8;
  int max_sweeps = 200;
  std::uint64_t seed = 0;
  std::vector<int> occupied;  // initial determinant
  std::vector<double> initial_theta;
  RotosolveOptions rotosolve;
};

struct VqeResult {
  double energy = 0.0;
  std::vector<double> theta;
  OptimizationTrace trace;
};

/// Minimizes <psi(theta)|H|psi(theta)>. Exact noiseless runs stop when a
/// sweep changes the energy by less than tol; otherwise the test is applied
/// to a 3-sweep moving average.
VqeResult vqe_ground_state(const PauliSum& h, const AnsatzSpec& spec, const Estimator& est, const VqeOptions& opts);

/// Monotone counter of measurement task ids under a fixed base.
class TaskCounter {
 public:
  explicit TaskCounter(std::uint64_t base = 0) : base_(base) {}
  std::uint64_t next() { return (base_ << 24) + count_++; }

 private:
  std::uint64_t base_;
  std::uint64_t count_ = 0;
};

}  // namespace corrvec
