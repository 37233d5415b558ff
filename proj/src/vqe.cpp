#include "corrvec/vqe.hpp"

#include <chrono>
#include <cmath>
#include <numbers>
#include <random>

#include <fmt/format.h>

#include "corrvec/errors.hpp"

namespace corrvec {

namespace {

constexpr double kPi = std::numbers::pi;

double checked(double v, int slot, const char* where) {
  if (!std::isfinite(v)) throw NumericalError(fmt::format("non-finite cost {} at slot {} ({})", v, slot, where));
  return v;
}

}  // namespace

void AnsatzSpec::validate() const {
  if (width < 1) throw ValidationError("ansatz width must be positive");
  if (depth < 1) throw ValidationError("ansatz depth must be at least 1");
  if (pattern.empty()) throw ValidationError("rotation pattern must not be empty");
  for (auto k : pattern) {
    if (k != GateKind::Rx && k != GateKind::Ry && k != GateKind::Rz) {
      throw ValidationError("rotation pattern accepts RX, RY and RZ only");
    }
  }
}

Circuit build_hea(const AnsatzSpec& spec) {
  spec.validate();
  Circuit c(spec.width);
  auto layer = [&](int l) {
    for (int q = 0; q < spec.width; ++q) {
      for (std::size_t k = 0; k < spec.pattern.size(); ++k) {
        c.rotation_slot(spec.pattern[k], q, spec.slot(l, q, static_cast<int>(k)));
      }
    }
  };
  for (int d = 0; d < spec.depth; ++d) {
    layer(d);
    for (int q = 0; q + 1 < spec.width; ++q) c.cnot(q, q + 1);
  }
  layer(spec.depth);
  return c;
}

std::vector<double> deepen_angles(const AnsatzSpec& spec, const std::vector<double>& theta) {
  if (static_cast<int>(theta.size()) != spec.num_slots()) throw DimensionError("angle count does not match ansatz");
  std::vector<double> out = theta;
  out.resize(static_cast<std::size_t>(spec.num_slots() + spec.width * static_cast<int>(spec.pattern.size())), 0.0);
  return out;
}

std::vector<double> initial_angles(const AnsatzSpec& spec, std::uint64_t seed, double spread,
                                   const std::vector<int>& occupied) {
  spec.validate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-spread, spread);
  std::vector<double> theta(static_cast<std::size_t>(spec.num_slots()));
  for (auto& t : theta) t = spread > 0.0 ? u(rng) : 0.0;
  if (!occupied.empty()) {
    int ky = -1;
    for (std::size_t k = 0; k < spec.pattern.size(); ++k) {
      if (spec.pattern[k] == GateKind::Ry || spec.pattern[k] == GateKind::Rx) {
        ky = static_cast<int>(k);
        break;
      }
    }
    if (ky < 0) throw ValidationError("pattern needs an RX or RY rotation to prepare a determinant");
    for (int q : occupied) {
      if (q < 0 || q >= spec.width) throw DimensionError("occupied qubit outside ansatz width");
      theta[static_cast<std::size_t>(spec.slot(spec.depth, q, ky))] = kPi;
    }
  }
  return theta;
}

double wrap_angle(double a) {
  double r = std::remainder(a, 2.0 * kPi);  // [-pi, pi]
  if (r <= -kPi) r += 2.0 * kPi;
  return r;
}

SweepResult rotosolve_sweep(const CostFunction& cost, std::vector<double> theta, const RotosolveOptions& opts) {
  SweepResult res;
  res.cost = theta.empty() ? checked(cost(theta), -1, "empty") : 0.0;
  if (theta.empty()) res.evaluations = 1;
  for (std::size_t d = 0; d < theta.size(); ++d) {
    const int slot = static_cast<int>(d);
    const double t0 = theta[d];
    const double f0 = checked(cost(theta), slot, "theta");
    theta[d] = t0 + kPi / 2.0;
    const double fp = checked(cost(theta), slot, "theta+pi/2");
    theta[d] = t0 - kPi / 2.0;
    const double fm = checked(cost(theta), slot, "theta-pi/2");
    res.evaluations += 3;
    if (opts.check_sinusoid) {
      theta[d] = t0 + kPi;
      const double fpi = checked(cost(theta), slot, "theta+pi");
      ++res.evaluations;
      if (std::abs(f0 + fpi - fp - fm) > opts.sinusoid_tol * std::max(1.0, std::abs(f0))) {
        throw NumericalError(fmt::format("cost is not sinusoidal in slot {}: {} + {} != {} + {}", slot, f0, fpi, fp, fm));
      }
    }
    const double c = 0.5 * (fp + fm);
    const double amp = std::hypot(f0 - c, 0.5 * (fp - fm));
    theta[d] = wrap_angle(t0 - kPi / 2.0 - std::atan2(2.0 * f0 - fp - fm, fp - fm));
    res.cost = c - amp;
    if (opts.check_monotone) {
      const double fn = checked(cost(theta), slot, "updated");
      ++res.evaluations;
      if (fn > f0 + opts.monotone_tol) {
        throw NumericalError(fmt::format("slot {} update raised the cost from {} to {}", slot, f0, fn));
      }
    }
  }
  res.theta = std::move(theta);
  return res;
}

std::string OptimizationTrace::to_log() const {
  std::string out;
  for (std::size_t k = 0; k < cost_history.size(); ++k) out += fmt::format("{} {:.17g}\n", k, cost_history[k]);
  return out;
}

VqeResult vqe_ground_state(const PauliSum& h, const AnsatzSpec& spec, const Estimator& est, const VqeOptions& opts) {
  if (!h.is_hermitian()) throw ValidationError("VQE needs a hermitian Hamiltonian");
  if (h.width() != spec.width) throw DimensionError("Hamiltonian and ansatz widths differ");
  const auto start = std::chrono::steady_clock::now();
  const Circuit c = build_hea(spec);
  std::vector<double> theta =
      opts.initial_theta.empty() ? initial_angles(spec, opts.seed, 0.1, opts.occupied) : opts.initial_theta;
  if (static_cast<int>(theta.size()) != spec.num_slots()) throw DimensionError("initial angles do not match ansatz");

  TaskCounter tasks(opts.seed);
  const CostFunction cost = [&](const std::vector<double>& t) { return est.expectation(c, t, h, tasks.next()); };
  const bool exact = est.exact_noiseless();

  VqeResult res;
  double best = cost(theta);
  std::vector<double> best_theta = theta;
  double prev = best;
  double prev_avg = std::numeric_limits<double>::quiet_NaN();
  for (int sweep = 0; sweep < opts.max_sweeps; ++sweep) {
    auto sr = rotosolve_sweep(cost, theta, opts.rotosolve);
    theta = std::move(sr.theta);
    const double e = exact ? sr.cost : cost(theta);
    res.trace.cost_history.push_back(e);
    res.trace.iterations = sweep + 1;
    if (e < best) {
      best = e;
      best_theta = theta;
    }
    if (exact) {
      if (std::abs(prev - e) < opts.tol) {
        res.trace.converged = true;
        break;
      }
      prev = e;
    } else if (res.trace.cost_history.size() >= 3) {
      const auto& hist = res.trace.cost_history;
      const std::size_t n = hist.size();
      const double avg = (hist[n - 1] + hist[n - 2] + hist[n - 3]) / 3.0;
      if (std::isfinite(prev_avg) && std::abs(avg - prev_avg) < opts.tol) {
        res.trace.converged = true;
        break;
      }
      prev_avg = avg;
    }
  }
  if (exact) {
    res.energy = best;
    res.theta = best_theta;
  } else {
    res.theta = theta;
    res.energy = cost(theta);
  }
  res.trace.theta = res.theta;
  res.trace.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}

}  // namespace corrvec
