#include "corrvec/state.hpp"

#include <cmath>
#include <string>

#include "corrvec/errors.hpp"

namespace corrvec {

namespace {

Eigen::Index dim_for(int width) {
  if (width < 0 || width > 30) throw DimensionError("register width out of range: " + std::to_string(width));
  return Eigen::Index{1} << width;
}

}  // namespace

QuantumState::QuantumState(int width) : width_(width), amps_(Eigen::VectorXcd::Zero(dim_for(width))) {
  amps_[0] = 1.0;
}

QuantumState::QuantumState(int width, Eigen::VectorXcd amplitudes) : width_(width), amps_(std::move(amplitudes)) {
  if (amps_.size() != dim_for(width)) throw DimensionError("amplitude vector does not match register width");
  if (std::abs(amps_.norm() - 1.0) > 1e-10) throw ValidationError("state is not normalized");
}

DensityState::DensityState(int width) : width_(width), rho_(Eigen::MatrixXcd::Zero(dim_for(width), dim_for(width))) {
  rho_(0, 0) = 1.0;
}

DensityState::DensityState(int width, Eigen::MatrixXcd rho) : width_(width), rho_(std::move(rho)) {
  const Eigen::Index d = dim_for(width);
  if (rho_.rows() != d || rho_.cols() != d) throw DimensionError("density matrix does not match register width");
}

DensityState DensityState::from_pure(const QuantumState& psi) { return DensityState(psi.width(), psi.projector()); }

double DensityState::min_eigenvalue() const {
  Eigen::MatrixXcd herm = 0.5 * (rho_ + rho_.adjoint());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(herm, Eigen::EigenvaluesOnly);
  return es.eigenvalues()[0];
}

bool DensityState::is_physical(double trace_tol, double psd_tol) const {
  if ((rho_ - rho_.adjoint()).cwiseAbs().maxCoeff() > trace_tol) return false;
  if (std::abs(rho_.trace() - cplx{1.0}) > trace_tol) return false;
  return min_eigenvalue() >= -psd_tol;
}

}  // namespace corrvec
