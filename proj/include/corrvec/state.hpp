#pragma once

#include <complex>
#include <cstddef>

#include <Eigen/Dense>

namespace corrvec {

using cplx = std::complex<double>;

/// Pure register state. Basis index bit q holds qubit q (qubit 0 is the
/// least significant bit).
class QuantumState {
 public:
  explicit QuantumState(int width);
  /// Takes ownership of `amplitudes`; throws ValidationError unless the
  /// vector has 2^width entries and unit norm (1e-10).
  QuantumState(int width, Eigen::VectorXcd amplitudes);

  int width() const { return width_; }
  std::size_t dimension() const { return static_cast<std::size_t>(amps_.size()); }
  const Eigen::VectorXcd& amplitudes() const { return amps_; }
  Eigen::VectorXcd& mutable_amplitudes() { return amps_; }
  cplx operator[](std::size_t i) const { return amps_[static_cast<Eigen::Index>(i)]; }

  double norm() const { return amps_.norm(); }
  Eigen::MatrixXcd projector() const { return amps_ * amps_.adjoint(); }

 private:
  int width_;
  Eigen::VectorXcd amps_;
};

/// Mixed register state, rho(row, col) with the same bit convention as
/// QuantumState.
class DensityState {
 public:
  explicit DensityState(int width);
  DensityState(int width, Eigen::MatrixXcd rho);
  static DensityState from_pure(const QuantumState& psi);

  int width() const { return width_; }
  const Eigen::MatrixXcd& matrix() const { return rho_; }
  Eigen::MatrixXcd& mutable_matrix() { return rho_; }

  cplx trace() const { return rho_.trace(); }
  double min_eigenvalue() const;
  /// Hermitian, unit trace and positive semidefinite within tolerances.
  bool is_physical(double trace_tol = 1e-10, double psd_tol = 1e-9) const;

 private:
  int width_;
  Eigen::MatrixXcd rho_;
};

}  // namespace corrvec
