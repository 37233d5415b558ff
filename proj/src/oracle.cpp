#include "corrvec/oracle.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "corrvec/errors.hpp"

namespace corrvec {

namespace {

void guard_width(int width) {
  if (width > kMaxDenseWidth) {
    throw DimensionError("dense oracle limited to " + std::to_string(kMaxDenseWidth) + " qubits, got " +
                         std::to_string(width));
  }
}

Eigen::VectorXcd gather(const Eigen::VectorXcd& full, const std::vector<std::uint64_t>& basis) {
  Eigen::VectorXcd out(static_cast<Eigen::Index>(basis.size()));
  for (std::size_t k = 0; k < basis.size(); ++k) out[static_cast<Eigen::Index>(k)] = full[static_cast<Eigen::Index>(basis[k])];
  return out;
}

Eigen::VectorXcd scatter(const Eigen::VectorXcd& part, const std::vector<std::uint64_t>& basis, int width) {
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(Eigen::Index{1} << width);
  for (std::size_t k = 0; k < basis.size(); ++k) out[static_cast<Eigen::Index>(basis[k])] = part[static_cast<Eigen::Index>(k)];
  return out;
}

std::vector<std::uint64_t> basis_for(const Eigen::VectorXcd& v, int width) {
  if (auto n = number_sector_of(v)) return sector_basis(width, *n);
  return full_basis(width);
}

}  // namespace

std::vector<std::uint64_t> full_basis(int width) {
  guard_width(width);
  std::vector<std::uint64_t> out(std::size_t{1} << width);
  for (std::size_t b = 0; b < out.size(); ++b) out[b] = b;
  return out;
}

std::vector<std::uint64_t> sector_basis(int width, int n_particles) {
  guard_width(width);
  std::vector<std::uint64_t> out;
  for (std::uint64_t b = 0; b < (std::uint64_t{1} << width); ++b) {
    if (std::popcount(b) == n_particles) out.push_back(b);
  }
  return out;
}

Eigen::MatrixXcd sector_matrix(const PauliSum& a, const std::vector<std::uint64_t>& basis) {
  guard_width(a.width());
  const auto n = static_cast<Eigen::Index>(basis.size());
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(n, n);
  for (Eigen::Index c = 0; c < n; ++c) {
    for (const auto& [s, w] : a.terms()) {
      std::uint64_t image = 0;
      const cplx ph = s.apply_to_basis(basis[static_cast<std::size_t>(c)], image);
      auto it = std::lower_bound(basis.begin(), basis.end(), image);
      if (it == basis.end() || *it != image) continue;
      m(it - basis.begin(), c) += w * ph;
    }
  }
  return m;
}

Eigen::MatrixXcd materialize(const PauliSum& a) { return sector_matrix(a, full_basis(a.width())); }

std::optional<int> number_sector_of(const Eigen::VectorXcd& v, double tol) {
  std::optional<int> found;
  for (Eigen::Index b = 0; b < v.size(); ++b) {
    if (std::abs(v[b]) <= tol) continue;
    const int n = std::popcount(static_cast<std::uint64_t>(b));
    if (found && *found != n) return std::nullopt;
    found = n;
  }
  return found;
}

GroundState exact_ground_in_basis(const PauliSum& h, const std::vector<std::uint64_t>& basis) {
  if (basis.empty()) throw ValidationError("empty basis for ground-state search");
  const Eigen::MatrixXcd m = sector_matrix(h, basis);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m);
  if (es.info() != Eigen::Success) throw NumericalError("eigensolver failed");
  const Eigen::VectorXd& ev = es.eigenvalues();
  const double e0 = ev[0];
  const double tol = 1e-9 * std::max(1.0, std::abs(e0));
  Eigen::Index deg = 1;
  while (deg < ev.size() && ev[deg] - e0 < tol) ++deg;
  const Eigen::MatrixXcd space = es.eigenvectors().leftCols(deg);

  Eigen::VectorXcd psi;
  if (deg == 1) {
    psi = space.col(0);
  } else {
    for (Eigen::Index k = 0; k < space.rows(); ++k) {
      Eigen::VectorXcd proj = space * space.row(k).adjoint();
      if (proj.norm() > 1e-6) {
        psi = proj / proj.norm();
        break;
      }
    }
  }
  Eigen::Index imax = 0;
  double amax = -1.0;
  for (Eigen::Index k = 0; k < psi.size(); ++k) {
    if (std::abs(psi[k]) > amax + 1e-12) {
      amax = std::abs(psi[k]);
      imax = k;
    }
  }
  psi *= std::conj(psi[imax]) / std::abs(psi[imax]);
  return {e0, scatter(psi, basis, h.width()), static_cast<int>(deg)};
}

GroundState exact_ground(const PauliSum& h, std::optional<int> sector) {
  if (!h.is_hermitian()) throw ValidationError("exact_ground needs a hermitian operator");
  return exact_ground_in_basis(h, sector ? sector_basis(h.width(), *sector) : full_basis(h.width()));
}

Eigen::VectorXcd exact_correction_vector(const PauliSum& h, double e0, cplx z, int sign, const Eigen::VectorXcd& rhs) {
  const int width = h.width();
  if (rhs.size() != (Eigen::Index{1} << width)) throw DimensionError("right-hand side does not match register width");
  const auto basis = basis_for(rhs, width);
  Eigen::MatrixXcd q = static_cast<double>(sign) * sector_matrix(h, basis);
  q.diagonal().array() += z - static_cast<double>(sign) * e0;
  const Eigen::VectorXcd b = gather(rhs, basis);
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(q);
  Eigen::VectorXcd x = lu.solve(b);
  if (!x.allFinite() || (q * x - b).norm() > 1e-9 * std::max(1.0, b.norm())) {
    throw NumericalError("shifted operator is singular at this frequency");
  }
  return scatter(x, basis, width);
}

Eigen::MatrixXcd exact_resolvent_gf(const PauliSum& h, double e0, const Eigen::VectorXcd& psi0, cplx z,
                                    const std::vector<int>& orbitals) {
  const int width = h.width();
  const auto k = static_cast<Eigen::Index>(orbitals.size());
  Eigen::MatrixXcd g = Eigen::MatrixXcd::Zero(k, k);
  for (Branch br : {Branch::particle, Branch::hole}) {
    std::vector<Eigen::VectorXcd> v(orbitals.size());
    for (std::size_t a = 0; a < orbitals.size(); ++a) v[a] = apply_to(perturbation_op(orbitals[a], ladder_of(br), width), psi0);
    for (Eigen::Index j = 0; j < k; ++j) {
      const auto& rhs = v[static_cast<std::size_t>(j)];
      if (rhs.norm() < 1e-12) continue;
      const Eigen::VectorXcd chi = exact_correction_vector(h, e0, z, q_sign(br), rhs);
      for (Eigen::Index i = 0; i < k; ++i) {
        const cplx ov = v[static_cast<std::size_t>(i)].dot(chi);
        if (br == Branch::particle) {
          g(i, j) += ov;
        } else {
          g(j, i) += ov;
        }
      }
    }
  }
  return g;
}

LehmannOracle::LehmannOracle(const PauliSum& h, double e0, const Eigen::VectorXcd& psi0, const std::vector<int>& orbitals)
    : e0_(e0), orbitals_(orbitals) {
  if (psi0.size() != (Eigen::Index{1} << h.width())) throw DimensionError("ground state does not match register width");
  particle_ = build(h, psi0, Branch::particle);
  hole_ = build(h, psi0, Branch::hole);
}

LehmannOracle::Part LehmannOracle::build(const PauliSum& h, const Eigen::VectorXcd& psi0, Branch branch) const {
  const int width = h.width();
  std::vector<std::uint64_t> basis;
  if (auto n = number_sector_of(psi0)) {
    const int target = *n + (branch == Branch::particle ? 1 : -1);
    if (target >= 0 && target <= width) basis = sector_basis(width, target);
  } else {
    basis = full_basis(width);
  }
  Part part;
  const auto k = static_cast<Eigen::Index>(orbitals_.size());
  if (basis.empty()) {
    part.excitation.resize(0);
    part.amp.resize(0, k);
    return part;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(sector_matrix(h, basis));
  if (es.info() != Eigen::Success) throw NumericalError("eigensolver failed");
  part.excitation = es.eigenvalues().array() - e0_;
  part.amp.resize(static_cast<Eigen::Index>(basis.size()), k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const Eigen::VectorXcd v =
        gather(apply_to(perturbation_op(orbitals_[static_cast<std::size_t>(i)], ladder_of(branch), width), psi0), basis);
    part.amp.col(i) = es.eigenvectors().adjoint() * v;
  }
  return part;
}

Eigen::MatrixXcd LehmannOracle::gf(cplx z, Branch branch) const {
  const Part& p = branch == Branch::particle ? particle_ : hole_;
  const double s = static_cast<double>(q_sign(branch));
  Eigen::VectorXcd inv(p.excitation.size());
  for (Eigen::Index n = 0; n < inv.size(); ++n) inv[n] = 1.0 / (z + s * p.excitation[n]);
  const Eigen::MatrixXcd weighted = inv.asDiagonal() * p.amp;
  if (branch == Branch::particle) return p.amp.adjoint() * weighted;  // conj(a_ni) a_nj
  return (p.amp.adjoint() * weighted).transpose();                   // conj(b_nj) b_ni
}

Eigen::MatrixXcd LehmannOracle::gf(cplx z) const { return gf(z, Branch::particle) + gf(z, Branch::hole); }

std::vector<Pole> LehmannOracle::poles(double min_weight) const {
  std::vector<Pole> out;
  for (Branch br : {Branch::particle, Branch::hole}) {
    const Part& p = br == Branch::particle ? particle_ : hole_;
    for (Eigen::Index n = 0; n < p.excitation.size(); ++n) {
      const double w = p.amp.row(n).squaredNorm();
      if (w < min_weight) continue;
      out.push_back({br == Branch::particle ? p.excitation[n] : -p.excitation[n], w, br});
    }
  }
  std::sort(out.begin(), out.end(), [](const Pole& a, const Pole& b) { return a.energy < b.energy; });
  std::vector<Pole> merged;
  for (const auto& p : out) {
    if (!merged.empty() && merged.back().branch == p.branch && std::abs(merged.back().energy - p.energy) < 1e-9) {
      merged.back().weight += p.weight;
    } else {
      merged.push_back(p);
    }
  }
  return merged;
}

}  // namespace corrvec
