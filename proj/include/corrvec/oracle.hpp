#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "corrvec/fermion.hpp"
#include "corrvec/pauli.hpp"

namespace corrvec {

constexpr int kMaxDenseWidth = 14;

/// Dense 2^m x 2^m matrix of a PauliSum.
Eigen::MatrixXcd materialize(const PauliSum& a);

/// Basis indices with exactly `n_particles` set bits, ascending.
std::vector<std::uint64_t> sector_basis(int width, int n_particles);
std::vector<std::uint64_t> full_basis(int width);

/// <basis[r]| A |basis[c]>.
Eigen::MatrixXcd sector_matrix(const PauliSum& a, const std::vector<std::uint64_t>& basis);

/// Particle number of a vector confined to one sector, or nullopt.
std::optional<int> number_sector_of(const Eigen::VectorXcd& v, double tol = 1e-12);

struct GroundState {
  double energy = 0.0;
  Eigen::VectorXcd psi;  // full 2^m register
  int degeneracy = 1;
};

/// Lowest eigenpair, optionally restricted to a particle-number sector.
/// Degenerate ground spaces resolve to the projection of the lowest-index
/// basis state, with the largest amplitude made real and positive.
GroundState exact_ground(const PauliSum& h, std::optional<int> sector = std::nullopt);
GroundState exact_ground_in_basis(const PauliSum& h, const std::vector<std::uint64_t>& basis);

/// Solves (z + sign (H - e0)) chi = rhs.
Eigen::VectorXcd exact_correction_vector(const PauliSum& h, double e0, cplx z, int sign, const Eigen::VectorXcd& rhs);

/// Both branches of the single-particle GF over the given spin-orbitals by
/// direct linear solves.
Eigen::MatrixXcd exact_resolvent_gf(const PauliSum& h, double e0, const Eigen::VectorXcd& psi0, cplx z,
                                    const std::vector<int>& orbitals);

struct Pole {
  double energy;  // pole position in z
  double weight;  // sum over the orbitals of the diagonal residues
  Branch branch;
};

/// Spectral form of the same GF: the N+1 and N-1 sectors are diagonalized
/// once and every z is a sum over poles.
class LehmannOracle {
 public:
  LehmannOracle(const PauliSum& h, double e0, const Eigen::VectorXcd& psi0, const std::vector<int>& orbitals);

  Eigen::MatrixXcd gf(cplx z) const;
  Eigen::MatrixXcd gf(cplx z, Branch branch) const;
  /// Degenerate poles of one branch are merged.
  std::vector<Pole> poles(double min_weight = 1e-8) const;
  int size() const { return static_cast<int>(orbitals_.size()); }

 private:
  struct Part {
    Eigen::VectorXd excitation;  // E_n - E0
    Eigen::MatrixXcd amp;        // amp(n, i) = <n| V_i |psi0>
  };
  Part build(const PauliSum& h, const Eigen::VectorXcd& psi0, Branch branch) const;

  double e0_;
  std::vector<int> orbitals_;
  Part particle_;
  Part hole_;
};

}  // namespace corrvec
