#include "corrvec/circuit.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <fmt/format.h>

#include "corrvec/errors.hpp"

namespace corrvec {

namespace {

constexpr double kPi = std::numbers::pi;
const cplx kI{0.0, 1.0};

Eigen::Matrix2cd one_qubit_matrix(GateKind k, double a) {
  Eigen::Matrix2cd u;
  const double c = std::cos(a / 2.0);
  const double s = std::sin(a / 2.0);
  switch (k) {
    case GateKind::H: u << 1, 1, 1, -1; return u / std::sqrt(2.0);
    case GateKind::X: u << 0, 1, 1, 0; return u;
    case GateKind::Y: u << 0, -kI, kI, 0; return u;
    case GateKind::Z: u << 1, 0, 0, -1; return u;
    case GateKind::S: u << 1, 0, 0, kI; return u;
    case GateKind::Sdg: u << 1, 0, 0, -kI; return u;
    case GateKind::Phase: u << 1, 0, 0, std::polar(1.0, a); return u;
    case GateKind::Rx: u << c, -kI * s, -kI * s, c; return u;
    case GateKind::Ry: u << c, -s, s, c; return u;
    case GateKind::Rz: u << std::polar(1.0, -a / 2.0), 0, 0, std::polar(1.0, a / 2.0); return u;
    default: throw ValidationError("not a one-qubit gate");
  }
}

void kernel_1q(cplx* v, int nq, int q, const Eigen::Matrix2cd& u) {
  const std::size_t half = std::size_t{1} << (nq - 1);
  const std::size_t bit = std::size_t{1} << q;
  const std::size_t low = bit - 1;
  const cplx u00 = u(0, 0), u01 = u(0, 1), u10 = u(1, 0), u11 = u(1, 1);
  for (std::size_t k = 0; k < half; ++k) {
    const std::size_t i0 = ((k & ~low) << 1) | (k & low);
    const std::size_t i1 = i0 | bit;
    const cplx a = v[i0];
    const cplx b = v[i1];
    v[i0] = u00 * a + u01 * b;
    v[i1] = u10 * a + u11 * b;
  }
}

void kernel_cnot(cplx* v, int nq, int c, int t) {
  const std::size_t n = std::size_t{1} << nq;
  const std::size_t cb = std::size_t{1} << c;
  const std::size_t tb = std::size_t{1} << t;
  for (std::size_t i = 0; i < n; ++i) {
    if ((i & cb) && !(i & tb)) std::swap(v[i], v[i | tb]);
  }
}

void kernel_cz(cplx* v, int nq, int a, int b) {
  const std::size_t n = std::size_t{1} << nq;
  const std::size_t mask = (std::size_t{1} << a) | (std::size_t{1} << b);
  for (std::size_t i = 0; i < n; ++i) {
    if ((i & mask) == mask) v[i] = -v[i];
  }
}

void kernel_ccx(cplx* v, int nq, int c1, int c2, int t) {
  const std::size_t n = std::size_t{1} << nq;
  const std::size_t cm = (std::size_t{1} << c1) | (std::size_t{1} << c2);
  const std::size_t tb = std::size_t{1} << t;
  for (std::size_t i = 0; i < n; ++i) {
    if ((i & cm) == cm && !(i & tb)) std::swap(v[i], v[i | tb]);
  }
}

void kernel_ccz(cplx* v, int nq, int a, int b, int c) {
  const std::size_t n = std::size_t{1} << nq;
  const std::size_t mask = (std::size_t{1} << a) | (std::size_t{1} << b) | (std::size_t{1} << c);
  for (std::size_t i = 0; i < n; ++i) {
    if ((i & mask) == mask) v[i] = -v[i];
  }
}

// `offset` shifts qubit indices; `conj` applies the complex-conjugate gate
// (column side of a density matrix).
void apply_raw(cplx* v, int nq, const Gate& g, const std::vector<double>& theta, int offset, bool conj) {
  const auto& q = g.qubits;
  switch (g.kind) {
    case GateKind::CNOT: kernel_cnot(v, nq, q[0] + offset, q[1] + offset); return;
    case GateKind::CZ: kernel_cz(v, nq, q[0] + offset, q[1] + offset); return;
    case GateKind::CCX: kernel_ccx(v, nq, q[0] + offset, q[1] + offset, q[2] + offset); return;
    case GateKind::CCZ: kernel_ccz(v, nq, q[0] + offset, q[1] + offset, q[2] + offset); return;
    default: break;
  }
  Eigen::Matrix2cd u = one_qubit_matrix(g.kind, g.resolved_angle(theta));
  if (conj) u = u.conjugate().eval();
  kernel_1q(v, nq, q[0] + offset, u);
}

void check_theta(const Circuit& c, const std::vector<double>& theta) {
  if (static_cast<int>(theta.size()) < c.num_slots()) {
    throw ValidationError(fmt::format("circuit has {} slots but only {} angles were assigned", c.num_slots(),
                                      theta.size()));
  }
}

void emit_ccx(Circuit& out, int a, int b, int t) {
  const double tq = kPi / 4.0;
  out.h(t);
  out.cnot(b, t);
  out.phase(t, -tq);
  out.cnot(a, t);
  out.phase(t, tq);
  out.cnot(b, t);
  out.phase(t, -tq);
  out.cnot(a, t);
  out.phase(b, tq);
  out.phase(t, tq);
  out.h(t);
  out.cnot(a, b);
  out.phase(a, tq);
  out.phase(b, -tq);
  out.cnot(a, b);
}

}  // namespace

const char* gate_name(GateKind k) {
  switch (k) {
    case GateKind::H: return "H";
    case GateKind::X: return "X";
    case GateKind::Y: return "Y";
    case GateKind::Z: return "Z";
    case GateKind::S: return "S";
    case GateKind::Sdg: return "SDG";
    case GateKind::Phase: return "P";
    case GateKind::Rx: return "RX";
    case GateKind::Ry: return "RY";
    case GateKind::Rz: return "RZ";
    case GateKind::CNOT: return "CNOT";
    case GateKind::CZ: return "CZ";
    case GateKind::CCX: return "CCX";
    case GateKind::CCZ: return "CCZ";
  }
  return "?";
}

int gate_arity(GateKind k) {
  switch (k) {
    case GateKind::CNOT:
    case GateKind::CZ: return 2;
    case GateKind::CCX:
    case GateKind::CCZ: return 3;
    default: return 1;
  }
}

bool gate_has_angle(GateKind k) {
  return k == GateKind::Phase || k == GateKind::Rx || k == GateKind::Ry || k == GateKind::Rz;
}

double Gate::resolved_angle(const std::vector<double>& theta) const {
  if (slot < 0) return angle;
  return angle + slot_scale * theta[static_cast<std::size_t>(slot)];
}

Circuit& Circuit::add(const Gate& g) {
  const int n = g.arity();
  for (int k = 0; k < 3; ++k) {
    const int q = g.qubits[static_cast<std::size_t>(k)];
    if (k < n) {
      if (q < 0 || q >= width_) throw DimensionError(fmt::format("{} qubit {} outside width {}", gate_name(g.kind), q, width_));
      for (int j = 0; j < k; ++j) {
        if (g.qubits[static_cast<std::size_t>(j)] == q) throw ValidationError("gate targets must be distinct");
      }
    } else if (q != -1) {
      throw ValidationError(fmt::format("{} takes {} qubits", gate_name(g.kind), n));
    }
  }
  if (g.slot >= 0 && !gate_has_angle(g.kind)) throw ValidationError("only rotation gates can carry a slot");
  if (g.slot < -1) throw ValidationError("invalid slot index");
  if (g.slot >= num_slots_) num_slots_ = g.slot + 1;
  gates_.push_back(g);
  return *this;
}

Circuit& Circuit::append(const Circuit& other, int slot_offset) {
  if (other.width_ > width_) throw DimensionError("appended circuit is wider than the target");
  for (Gate g : other.gates_) {
    if (g.slot >= 0) g.slot += slot_offset;
    add(g);
  }
  reserve_slots(other.num_slots_ + slot_offset);
  return *this;
}

void Circuit::validate() const {
  std::vector<char> seen(static_cast<std::size_t>(num_slots_), 0);
  for (const auto& g : gates_) {
    if (g.slot >= 0) seen[static_cast<std::size_t>(g.slot)] = 1;
  }
  for (int s = 0; s < num_slots_; ++s) {
    if (!seen[static_cast<std::size_t>(s)]) throw ValidationError(fmt::format("slot {} is never referenced", s));
  }
}

int Circuit::two_qubit_gate_count() const {
  int n = 0;
  for (const auto& g : gates_) {
    if (g.arity() == 2) ++n;
    if (g.arity() == 3) n += 6;
  }
  return n;
}

std::string Circuit::dump() const {
  std::string out = fmt::format("WIDTH {} SLOTS {}\n", width_, num_slots_);
  for (const auto& g : gates_) {
    out += gate_name(g.kind);
    for (int k = 0; k < g.arity(); ++k) out += fmt::format(" {}", g.qubits[static_cast<std::size_t>(k)]);
    if (gate_has_angle(g.kind)) out += fmt::format(" {:.17g}", g.angle);
    if (g.slot >= 0) out += fmt::format(" slot={}*{:.17g}", g.slot, g.slot_scale);
    out += '\n';
  }
  return out;
}

Circuit lower_three_qubit(const Circuit& c) {
  Circuit out(c.width());
  out.reserve_slots(c.num_slots());
  for (const auto& g : c.gates()) {
    if (g.kind == GateKind::CCX) {
      emit_ccx(out, g.qubits[0], g.qubits[1], g.qubits[2]);
    } else if (g.kind == GateKind::CCZ) {
      out.h(g.qubits[2]);
      emit_ccx(out, g.qubits[0], g.qubits[1], g.qubits[2]);
      out.h(g.qubits[2]);
    } else {
      out.add(g);
    }
  }
  return out;
}

Circuit make_controlled(const Circuit& c) {
  const int a = c.width();
  Circuit out(c.width() + 1);
  out.reserve_slots(c.num_slots());
  auto half = [](const Gate& g, double sign, int target) {
    return Gate{g.kind, {target, -1, -1}, sign * g.angle / 2.0, g.slot, sign * g.slot_scale / 2.0};
  };
  auto cphase = [&](const Gate& g, int t) {
    out.add({GateKind::Phase, {a, -1, -1}, g.angle / 2.0, g.slot, g.slot_scale / 2.0});
    out.cnot(a, t);
    out.add({GateKind::Phase, {t, -1, -1}, -g.angle / 2.0, g.slot, -g.slot_scale / 2.0});
    out.cnot(a, t);
    out.add({GateKind::Phase, {t, -1, -1}, g.angle / 2.0, g.slot, g.slot_scale / 2.0});
  };
  for (const auto& g : c.gates()) {
    const int t = g.qubits[0];
    switch (g.kind) {
      case GateKind::H:
        out.rotation(GateKind::Ry, t, -kPi / 4.0);
        out.cz(a, t);
        out.rotation(GateKind::Ry, t, kPi / 4.0);
        break;
      case GateKind::X: out.cnot(a, t); break;
      case GateKind::Y:
        out.sdg(t);
        out.cnot(a, t);
        out.s(t);
        break;
      case GateKind::Z: out.cz(a, t); break;
      case GateKind::S: cphase(Gate{GateKind::Phase, {t, -1, -1}, kPi / 2.0}, t); break;
      case GateKind::Sdg: cphase(Gate{GateKind::Phase, {t, -1, -1}, -kPi / 2.0}, t); break;
      case GateKind::Phase: cphase(g, t); break;
      case GateKind::Ry:
      case GateKind::Rz:
        out.add(half(g, 1.0, t));
        out.cnot(a, t);
        out.add(half(g, -1.0, t));
        out.cnot(a, t);
        break;
      case GateKind::Rx:
        out.add(half(g, 1.0, t));
        out.cz(a, t);
        out.add(half(g, -1.0, t));
        out.cz(a, t);
        break;
      case GateKind::CNOT: out.ccx(a, g.qubits[0], g.qubits[1]); break;
      case GateKind::CZ: out.ccz(a, g.qubits[0], g.qubits[1]); break;
      case GateKind::CCX:
      case GateKind::CCZ: throw ValidationError("cannot control a three-qubit gate");
    }
  }
  return lower_three_qubit(out);
}

Circuit controlled_pauli(const PauliString& p, int ancilla) {
  if (ancilla < p.width()) throw DimensionError("ancilla overlaps the Pauli string");
  Circuit out(ancilla + 1);
  for (int q = 0; q < p.width(); ++q) {
    switch (p.at(q)) {
      case Pauli::I: break;
      case Pauli::X: out.cnot(ancilla, q); break;
      case Pauli::Y:
        out.sdg(q);
        out.cnot(ancilla, q);
        out.s(q);
        break;
      case Pauli::Z: out.cz(ancilla, q); break;
    }
  }
  return out;
}

void apply_gate(QuantumState& psi, const Gate& g, const std::vector<double>& theta) {
  apply_raw(psi.mutable_amplitudes().data(), psi.width(), g, theta, 0, false);
}

void apply_gate(DensityState& rho, const Gate& g, const std::vector<double>& theta) {
  cplx* v = rho.mutable_matrix().data();
  const int m = rho.width();
  apply_raw(v, 2 * m, g, theta, 0, false);
  apply_raw(v, 2 * m, g, theta, m, true);
}

void run_pure_into(QuantumState& psi, const Circuit& c, const std::vector<double>& theta) {
  if (psi.width() != c.width()) throw DimensionError("state and circuit widths differ");
  check_theta(c, theta);
  for (const auto& g : c.gates()) apply_gate(psi, g, theta);
}

QuantumState run_pure(const Circuit& c, const std::vector<double>& theta) {
  QuantumState psi(c.width());
  run_pure_into(psi, c, theta);
  return psi;
}

void apply_depolarizing(DensityState& rho, int q0, int q1, double p2) {
  if (!(p2 >= 0.0 && p2 <= 15.0 / 16.0)) throw ValidationError(fmt::format("p2 = {} outside [0, 15/16]", p2));
  const int m = rho.width();
  if (q0 == q1 || q0 < 0 || q1 < 0 || q0 >= m || q1 >= m) throw DimensionError("invalid qubit pair");
  if (p2 == 0.0) return;
  const double lam = 16.0 * p2 / 15.0;
  auto& r = rho.mutable_matrix();
  const Eigen::Index d = r.rows();
  const Eigen::Index b0 = Eigen::Index{1} << q0;
  const Eigen::Index b1 = Eigen::Index{1} << q1;
  const Eigen::Index offs[4] = {0, b0, b1, b0 | b1};
  for (Eigen::Index c = 0; c < d; ++c) {
    if (c & (b0 | b1)) continue;
    for (Eigen::Index row = 0; row < d; ++row) {
      if (row & (b0 | b1)) continue;
      cplx tr = 0.0;
      for (int k = 0; k < 4; ++k) tr += r(row | offs[k], c | offs[k]);
      for (int k = 0; k < 4; ++k) {
        for (int l = 0; l < 4; ++l) r(row | offs[k], c | offs[l]) *= (1.0 - lam);
        r(row | offs[k], c | offs[k]) += lam * tr / 4.0;
      }
    }
  }
}

void run_noisy_into(DensityState& rho, const Circuit& c, const std::vector<double>& theta, double p2) {
  if (rho.width() != c.width()) throw DimensionError("state and circuit widths differ");
  if (!(p2 >= 0.0 && p2 <= 15.0 / 16.0)) throw ValidationError(fmt::format("p2 = {} outside [0, 15/16]", p2));
  check_theta(c, theta);
  bool has_three = std::any_of(c.gates().begin(), c.gates().end(), [](const Gate& g) { return g.arity() == 3; });
  const Circuit lowered = has_three ? lower_three_qubit(c) : Circuit();
  const Circuit& run = has_three ? lowered : c;
  for (const auto& g : run.gates()) {
    apply_gate(rho, g, theta);
    if (g.arity() == 2 && p2 > 0.0) apply_depolarizing(rho, g.qubits[0], g.qubits[1], p2);
  }
}

DensityState run_noisy(const Circuit& c, const std::vector<double>& theta, double p2) {
  DensityState rho(c.width());
  run_noisy_into(rho, c, theta, p2);
  return rho;
}

Eigen::MatrixXcd circuit_unitary(const Circuit& c, const std::vector<double>& theta) {
  if (c.width() > 12) throw DimensionError("dense unitary limited to 12 qubits");
  const Eigen::Index d = Eigen::Index{1} << c.width();
  Eigen::MatrixXcd u(d, d);
  for (Eigen::Index k = 0; k < d; ++k) {
    QuantumState psi(c.width(), Eigen::VectorXcd::Unit(d, k));
    run_pure_into(psi, c, theta);
    u.col(k) = psi.amplitudes();
  }
  return u;
}

void NoiseModel::validate() const {
  if (!(p2 >= 0.0 && p2 <= 15.0 / 16.0)) throw ValidationError("p2 outside [0, 15/16]");
  if (!(boost > 1.0) || boost * p2 > 15.0 / 16.0) throw ValidationError("boost factor must exceed 1 and keep p2 valid");
}

std::vector<double> NoiseModel::levels() const {
  if (!enabled) return {0.0};
  if (zne) return {p2, boost * p2};
  return {p2};
}

void MeasurementSettings::validate() const {
  if (mode == MeasureMode::sampled && shots < 1) throw ValidationError("sampled mode needs at least one shot");
}

double zne_extrapolate(double e_p, double e_kp, double boost) {
  if (std::abs(e_kp) > 1e-12 && ((e_p > 0.0 && e_kp > 0.0) || (e_p < 0.0 && e_kp < 0.0))) {
    return e_p * std::pow(e_p / e_kp, 1.0 / (boost - 1.0));
  }
  return (boost * e_p - e_kp) / (boost - 1.0);
}

double mitigate(const std::vector<double>& per_level, const NoiseModel& noise) {
  if (per_level.size() == 2) return zne_extrapolate(per_level[0], per_level[1], noise.boost);
  return per_level.at(0);
}

std::uint64_t task_seed(std::uint64_t seed, std::uint64_t task) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(task), static_cast<std::uint32_t>(task >> 32)};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

double sample_pm1(double mean, std::uint64_t shots, std::mt19937_64& rng) {
  const double p = std::clamp((1.0 + mean) / 2.0, 0.0, 1.0);
  std::binomial_distribution<std::uint64_t> dist(shots, p);
  const auto k = dist(rng);
  return 2.0 * static_cast<double>(k) / static_cast<double>(shots) - 1.0;
}

Circuit overlap_circuit(const Circuit& u1, const Circuit& u2, const PauliString& p, double phi) {
  if (u1.width() != u2.width() || p.width() != u1.width()) throw DimensionError("overlap operands differ in width");
  const int a = u1.width();
  Circuit out(a + 1);
  out.h(a);
  out.phase(a, phi);
  out.x(a);
  out.append(make_controlled(u1));
  out.x(a);
  out.append(make_controlled(u2), u1.num_slots());
  out.append(controlled_pauli(p, a));
  out.h(a);
  out.reserve_slots(u1.num_slots() + u2.num_slots());
  return out;
}

namespace {

std::vector<double> concat(const std::vector<double>& a, std::size_t na, const std::vector<double>& b) {
  std::vector<double> out(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(std::min(na, a.size())));
  out.resize(na, 0.0);
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

double z_expectation(const QuantumState& psi, int q) {
  double e = 0.0;
  const auto& v = psi.amplitudes();
  for (Eigen::Index k = 0; k < v.size(); ++k) e += ((k >> q) & 1 ? -1.0 : 1.0) * std::norm(v[k]);
  return e;
}

double z_expectation(const DensityState& rho, int q) {
  double e = 0.0;
  const auto& r = rho.matrix();
  for (Eigen::Index k = 0; k < r.rows(); ++k) e += ((k >> q) & 1 ? -1.0 : 1.0) * r(k, k).real();
  return e;
}

}  // namespace

double overlap_hadamard(const Circuit& u1, const std::vector<double>& theta1, const Circuit& u2,
                        const std::vector<double>& theta2, const PauliString& p, double phi,
                        const MeasurementSettings& settings, const NoiseModel& noise, std::uint64_t task) {
  settings.validate();
  noise.validate();
  const Circuit c = overlap_circuit(u1, u2, p, phi);
  const auto theta = concat(theta1, static_cast<std::size_t>(u1.num_slots()), theta2);
  const int a = u1.width();
  std::mt19937_64 rng(task_seed(settings.seed, task));
  std::vector<double> vals;
  for (double lvl : noise.levels()) {
    const double e = noise.enabled ? z_expectation(run_noisy(c, theta, lvl), a) : z_expectation(run_pure(c, theta), a);
    vals.push_back(settings.mode == MeasureMode::sampled ? sample_pm1(e, settings.shots, rng) : e);
  }
  return mitigate(vals, noise);
}

cplx overlap_direct(const Circuit& u1, const std::vector<double>& theta1, const Circuit& u2,
                    const std::vector<double>& theta2, const PauliString& p) {
  if (u1.width() != u2.width() || p.width() != u1.width()) throw DimensionError("overlap operands differ in width");
  const auto psi1 = run_pure(u1, theta1);
  const auto psi2 = run_pure(u2, theta2);
  return psi1.amplitudes().dot(apply_to(p, psi2.amplitudes()));
}

double sample_pauli_expectation(const Circuit& c, const std::vector<double>& theta, const PauliSum& a,
                                const MeasurementSettings& settings, const NoiseModel& noise, std::uint64_t task) {
  return Estimator(settings, noise).expectation(c, theta, a, task);
}

Estimator::Estimator(MeasurementSettings settings, NoiseModel noise) : settings_(settings), noise_(noise) {
  settings_.validate();
  noise_.validate();
}

double Estimator::expectation(const Circuit& c, const std::vector<double>& theta, const PauliSum& a,
                              std::uint64_t task) const {
  if (a.width() != c.width()) throw DimensionError("observable and circuit widths differ");
  if (!a.is_hermitian()) throw ValidationError("sampled expectation needs a hermitian observable");
  if (exact_noiseless()) return expectation_exact(run_pure(c, theta), a).real();

  std::mt19937_64 rng(task_seed(settings_.seed, task));
  const bool sampled = settings_.mode == MeasureMode::sampled;
  const auto levels = noise_.levels();
  // exact per-string values, [string][level]
  std::vector<std::vector<double>> vals(a.size(), std::vector<double>(levels.size()));
  if (!noise_.enabled) {
    const auto psi = run_pure(c, theta);
    std::size_t k = 0;
    for (const auto& [s, w] : a.terms()) {
      vals[k++][0] = s.is_identity() ? 1.0 : matrix_element(psi.amplitudes(), s, psi.amplitudes()).real();
    }
  } else {
    for (std::size_t l = 0; l < levels.size(); ++l) {
      const auto rho = run_noisy(c, theta, levels[l]);
      std::size_t k = 0;
      for (const auto& [s, w] : a.terms()) vals[k++][l] = s.is_identity() ? 1.0 : pauli_trace(rho.matrix(), s).real();
    }
  }
  double total = 0.0;
  std::size_t k = 0;
  for (const auto& [s, w] : a.terms()) {
    auto& v = vals[k++];
    if (s.is_identity()) {
      total += w.real();
      continue;
    }
    if (sampled) {
      for (auto& x : v) x = sample_pm1(x, settings_.shots, rng);
    }
    total += w.real() * mitigate(v, noise_);
  }
  return total;
}

std::shared_ptr<const Estimator::Reference> Estimator::reference(const Circuit& u1,
                                                                  const std::vector<double>& theta1) const {
  auto ref = std::make_shared<Reference>();
  ref->width_ = u1.width();
  if (!noise_.enabled) {
    ref->psi1 = run_pure(u1, theta1).amplitudes();
    return ref;
  }
  const int a = u1.width();
  const Circuit cu1 = make_controlled(u1);
  for (double phi : {0.0, kPi / 2.0}) {
    Circuit pre(a + 1);
    pre.h(a);
    pre.phase(a, phi);
    pre.x(a);
    pre.append(cu1);
    pre.x(a);
    std::vector<DensityState> per_level;
    for (double lvl : noise_.levels()) per_level.push_back(run_noisy(pre, theta1, lvl));
    ref->prefix.push_back(std::move(per_level));
  }
  return ref;
}

cplx Estimator::overlap_sum(const Reference& ref, const Circuit& u2, const std::vector<double>& theta2,
                            const PauliSum& ops, std::uint64_t task) const {
  if (u2.width() != ref.width() || ops.width() != ref.width()) throw DimensionError("overlap operands differ in width");
  const int m = ref.width();
  if (!noise_.enabled) {
    const Eigen::VectorXcd psi2 = run_pure(u2, theta2).amplitudes();
    if (settings_.mode == MeasureMode::exact) return ref.psi1.dot(apply_to(ops, psi2));
    std::mt19937_64 rng(task_seed(settings_.seed, task));
    cplx total = 0.0;
    for (const auto& [s, w] : ops.terms()) {
      const cplx o = ref.psi1.dot(apply_to(s, psi2));
      const double re = sample_pm1(o.real(), settings_.shots, rng);
      const double im = -sample_pm1(-o.imag(), settings_.shots, rng);
      total += w * cplx{re, im};
    }
    return total;
  }

  const Circuit cu2 = make_controlled(u2);
  const auto levels = noise_.levels();
  const std::size_t ns = ops.size();
  // raw[string][phi][level]
  std::vector<std::array<std::vector<double>, 2>> raw(ns);
  for (std::size_t f = 0; f < 2; ++f) {
    for (std::size_t l = 0; l < levels.size(); ++l) {
      DensityState rho = ref.prefix[f][l];
      run_noisy_into(rho, cu2, theta2, levels[l]);
      std::size_t k = 0;
      for (const auto& [s, w] : ops.terms()) {
        DensityState r2 = rho;
        run_noisy_into(r2, controlled_pauli(s, m), {}, levels[l]);
        Gate h{GateKind::H, {m, -1, -1}};
        apply_gate(r2, h, {});
        raw[k][f].push_back(z_expectation(r2, m));
        ++k;
      }
    }
  }
  std::mt19937_64 rng(task_seed(settings_.seed, task));
  cplx total = 0.0;
  std::size_t k = 0;
  for (const auto& [s, w] : ops.terms()) {
    std::array<double, 2> est{};
    for (std::size_t f = 0; f < 2; ++f) {
      auto v = raw[k][f];
      if (settings_.mode == MeasureMode::sampled) {
        for (auto& x : v) x = sample_pm1(x, settings_.shots, rng);
      }
      est[f] = mitigate(v, noise_);
    }
    total += w * cplx{est[0], -est[1]};
    ++k;
  }
  return total;
}

}  // namespace corrvec
