#pragma once

#include <complex>
#include <filesystem>
#include <random>
#include <string>

#include <Eigen/Dense>

#include "corrvec/pauli.hpp"

namespace testutil {

using corrvec::cplx;

inline std::filesystem::path data(const std::string& name) {
  return std::filesystem::path(CORRVEC_TEST_DATA) / name;
}

// Kronecker construction with qubit 0 as the least significant factor.
inline Eigen::MatrixXcd kron_pauli(const corrvec::PauliString& s) {
  const cplx i{0.0, 1.0};
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Identity(1, 1);
  for (int q = s.width() - 1; q >= 0; --q) {
    Eigen::Matrix2cd p;
    switch (s.at(q)) {
      case corrvec::Pauli::I: p << 1, 0, 0, 1; break;
      case corrvec::Pauli::X: p << 0, 1, 1, 0; break;
      case corrvec::Pauli::Y: p << 0, -i, i, 0; break;
      case corrvec::Pauli::Z: p << 1, 0, 0, -1; break;
    }
    Eigen::MatrixXcd next(out.rows() * 2, out.cols() * 2);
    for (Eigen::Index r = 0; r < out.rows(); ++r)
      for (Eigen::Index c = 0; c < out.cols(); ++c) next.block(2 * r, 2 * c, 2, 2) = out(r, c) * p;
    out = next;
  }
  return out;
}

inline Eigen::MatrixXcd kron_sum(const corrvec::PauliSum& a) {
  const Eigen::Index d = Eigen::Index{1} << a.width();
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(d, d);
  for (const auto& [s, w] : a.terms()) m += w * kron_pauli(s);
  return m;
}

inline corrvec::PauliString random_string(int width, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> d(0, 3);
  corrvec::PauliString s(width);
  for (int q = 0; q < width; ++q) s.set(q, static_cast<corrvec::Pauli>(d(rng)));
  return s;
}

inline corrvec::PauliSum random_sum(int width, int terms, std::mt19937_64& rng, bool hermitian) {
  std::normal_distribution<double> n(0.0, 1.0);
  corrvec::PauliSum out(width);
  for (int k = 0; k < terms; ++k) out.add_term(random_string(width, rng), hermitian ? cplx{n(rng)} : cplx{n(rng), n(rng)});
  return out;
}

inline Eigen::VectorXcd random_state(int width, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::VectorXcd v(Eigen::Index{1} << width);
  for (auto& x : v) x = cplx{n(rng), n(rng)};
  return v / v.norm();
}

inline Eigen::MatrixXcd random_density(int width, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  const Eigen::Index d = Eigen::Index{1} << width;
  Eigen::MatrixXcd a(d, d);
  for (Eigen::Index r = 0; r < d; ++r)
    for (Eigen::Index c = 0; c < d; ++c) a(r, c) = cplx{n(rng), n(rng)};
  Eigen::MatrixXcd rho = a * a.adjoint();
  return rho / rho.trace();
}

}  // namespace testutil
