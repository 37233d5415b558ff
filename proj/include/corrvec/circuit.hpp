#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "corrvec/pauli.hpp"
#include "corrvec/state.hpp"

namespace corrvec {

enum class GateKind { H, X, Y, Z, S, Sdg, Phase, Rx, Ry, Rz, CNOT, CZ, CCX, CCZ };

const char* gate_name(GateKind k);
int gate_arity(GateKind k);
bool gate_has_angle(GateKind k);

/// Controls come first in `qubits`, the target last. The applied angle is
/// `angle + slot_scale * theta[slot]` when `slot >= 0`.
struct Gate {
  GateKind kind = GateKind::H;
  std::array<int, 3> qubits{-1, -1, -1};
  double angle = 0.0;
  int slot = -1;
  double slot_scale = 1.0;

  int arity() const { return gate_arity(kind); }
  double resolved_angle(const std::vector<double>& theta) const;
};

class Circuit {
 public:
  explicit Circuit(int width = 0) : width_(width) {}

  int width() const { return width_; }
  const std::vector<Gate>& gates() const { return gates_; }
  int num_slots() const { return num_slots_; }
  bool empty() const { return gates_.empty(); }

  int new_slot() { return num_slots_++; }
  void reserve_slots(int n) { num_slots_ = std::max(num_slots_, n); }

  Circuit& add(const Gate& g);
  Circuit& h(int q) { return fixed(GateKind::H, q); }
  Circuit& x(int q) { return fixed(GateKind::X, q); }
  Circuit& y(int q) { return fixed(GateKind::Y, q); }
  Circuit& z(int q) { return fixed(GateKind::Z, q); }
  Circuit& s(int q) { return fixed(GateKind::S, q); }
  Circuit& sdg(int q) { return fixed(GateKind::Sdg, q); }
  Circuit& phase(int q, double angle) { return add({GateKind::Phase, {q, -1, -1}, angle}); }
  /// Rotation with a fixed angle.
  Circuit& rotation(GateKind kind, int q, double angle) { return add({kind, {q, -1, -1}, angle}); }
  /// Rotation driven by a parameter slot.
  Circuit& rotation_slot(GateKind kind, int q, int slot, double scale = 1.0, double offset = 0.0) {
    return add({kind, {q, -1, -1}, offset, slot, scale});
  }
  Circuit& cnot(int c, int t) { return add({GateKind::CNOT, {c, t, -1}}); }
  Circuit& cz(int a, int b) { return add({GateKind::CZ, {a, b, -1}}); }
  Circuit& ccx(int c1, int c2, int t) { return add({GateKind::CCX, {c1, c2, t}}); }
  Circuit& ccz(int c1, int c2, int t) { return add({GateKind::CCZ, {c1, c2, t}}); }

  /// Appends the gates of `other` (width <= this width) with its slots
  /// shifted by `slot_offset`.
  Circuit& append(const Circuit& other, int slot_offset = 0);

  /// Checks the slot table: every slot in [0, num_slots) is referenced.
  void validate() const;
  int two_qubit_gate_count() const;
  /// One gate per line: `NAME q0 [q1 [q2]] [angle] [slot=k*scale]`.
  std::string dump() const;

 private:
  Circuit& fixed(GateKind k, int q) { return add({k, {q, -1, -1}}); }
  int width_;
  int num_slots_ = 0;
  std::vector<Gate> gates_;
};

/// Three-qubit gates rewritten into the fixed 6-CNOT sequence.
Circuit lower_three_qubit(const Circuit& c);

/// Circuit of width m + 1 implementing |0><0| (x) I + |1><1| (x) U with the
/// ancilla at index m. Slots are shared with the input.
Circuit make_controlled(const Circuit& c);

/// Controlled application of a Pauli string (ancilla = index m).
Circuit controlled_pauli(const PauliString& p, int ancilla);

void apply_gate(QuantumState& psi, const Gate& g, const std::vector<double>& theta);
void apply_gate(DensityState& rho, const Gate& g, const std::vector<double>& theta);

QuantumState run_pure(const Circuit& c, const std::vector<double>& theta);
void run_pure_into(QuantumState& psi, const Circuit& c, const std::vector<double>& theta);

/// Depolarizing noise of strength p2 after every two-qubit gate (three-qubit
/// gates are lowered first, so their pieces are noisy too).
DensityState run_noisy(const Circuit& c, const std::vector<double>& theta, double p2);
void run_noisy_into(DensityState& rho, const Circuit& c, const std::vector<double>& theta, double p2);

/// rho -> (1 - p2) rho + p2/15 sum_{(a,b) != (I,I)} s_a s_b rho s_a s_b on the
/// pair, evaluated as (1 - 16 p2/15) rho + 16 p2/15 (I/4 (x) Tr_pair rho).
void apply_depolarizing(DensityState& rho, int q0, int q1, double p2);

Eigen::MatrixXcd circuit_unitary(const Circuit& c, const std::vector<double>& theta);

struct NoiseModel {
  bool enabled = false;
  double p2 = 1e-3;
  double boost = 2.0;
  bool zne = true;

  void validate() const;
  /// Depolarizing strengths to simulate: {p2, boost p2} with ZNE, {p2}
  /// without, {0} when disabled.
  std::vector<double> levels() const;
};

enum class MeasureMode { exact, sampled };

struct MeasurementSettings {
  MeasureMode mode = MeasureMode::exact;
  std::uint64_t shots = 1000000;
  std::uint64_t seed = 0;

  void validate() const;
};

/// E(0) from E(p) and E(k p) assuming E(p) = E(0) exp(-b p). Falls back to
/// linear Richardson when the two values differ in sign or E(k p) ~ 0.
double zne_extrapolate(double e_p, double e_kp, double boost = 2.0);

/// Combines per-level estimates (ordered as NoiseModel::levels()).
double mitigate(const std::vector<double>& per_level, const NoiseModel& noise);

/// Deterministic stream for (seed, task).
std::uint64_t task_seed(std::uint64_t seed, std::uint64_t task);

/// Binomial estimate of an observable with outcomes +-1 and exact mean `mean`.
double sample_pm1(double mean, std::uint64_t shots, std::mt19937_64& rng);

/// Hadamard-test circuit on m + 1 qubits: ancilla H, Phase(phi), X, c-U1, X, c-U2,
/// c-P, H. The slots of U2 follow those of U1.
Circuit overlap_circuit(const Circuit& u1, const Circuit& u2, const PauliString& p, double phi);

/// p(0) - p(1) of the ancilla for overlap_circuit, i.e.
/// Re(e^{i phi} <0|U1^+ P U2|0>).
double overlap_hadamard(const Circuit& u1, const std::vector<double>& theta1, const Circuit& u2,
                        const std::vector<double>& theta2, const PauliString& p, double phi,
                        const MeasurementSettings& settings, const NoiseModel& noise, std::uint64_t task = 0);

/// <0|U1^+ P U2|0> from two statevector runs.
cplx overlap_direct(const Circuit& u1, const std::vector<double>& theta1, const Circuit& u2,
                    const std::vector<double>& theta2, const PauliString& p);

/// Hermitian PauliSum expectation through per-string estimates.
double sample_pauli_expectation(const Circuit& c, const std::vector<double>& theta, const PauliSum& a,
                                const MeasurementSettings& settings, const NoiseModel& noise,
                                std::uint64_t task = 0);

/// Measurement front end shared by the variational solvers. A reference
/// holds the theta-independent prefix of the overlap circuit for a fixed U1.
class Estimator {
 public:
  Estimator(MeasurementSettings settings, NoiseModel noise);

  const MeasurementSettings& settings() const { return settings_; }
  const NoiseModel& noise() const { return noise_; }
  bool exact_noiseless() const { return settings_.mode == MeasureMode::exact && !noise_.enabled; }

  double expectation(const Circuit& c, const std::vector<double>& theta, const PauliSum& a,
                     std::uint64_t task) const;

  class Reference;
  std::shared_ptr<const Reference> reference(const Circuit& u1, const std::vector<double>& theta1) const;

  /// sum_a w_a <0|U1^+ P_a U2|0>.
  cplx overlap_sum(const Reference& ref, const Circuit& u2, const std::vector<double>& theta2, const PauliSum& ops,
                   std::uint64_t task) const;

 private:
  MeasurementSettings settings_;
  NoiseModel noise_;
};

class Estimator::Reference {
 public:
  int width() const { return width_; }

 private:
  friend class Estimator;
  int width_ = 0;
  Eigen::VectorXcd psi1;
  // prefix[phi index][noise level]
  std::vector<std::vector<DensityState>> prefix;
};

}  // namespace corrvec
