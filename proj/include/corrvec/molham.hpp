#pragma once

#include <filesystem>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace corrvec {

/// Spatial-orbital integrals. The two-body tensor is stored in the
/// physicist order of the Hamiltonian, g(a,b,c,d) multiplying
/// c+_a c+_b c_d c_c, so g(a,b,c,d) = (ac|bd) in chemist notation.
struct MolecularIntegrals {
  int n_orb = 0;
  Eigen::MatrixXd h;
  std::vector<double> g;
  double e_const = 0.0;
  int n_elec = 0;
  int ms2 = 0;
  bool restricted = true;
  std::vector<double> orbital_energies;  // optional, from `e i 0 0 0` lines

  MolecularIntegrals() = default;
  MolecularIntegrals(int n_orb, int n_elec);

  double& g_at(int a, int b, int c, int d) { return g[index(a, b, c, d)]; }
  double g_at(int a, int b, int c, int d) const { return g[index(a, b, c, d)]; }
  /// Chemist-notation view (pq|rs).
  double chem(int p, int q, int r, int s) const { return g_at(p, r, q, s); }
  void set_chem(int p, int q, int r, int s, double value) { g_at(p, r, q, s) = value; }

  void validate() const;

 private:
  std::size_t index(int a, int b, int c, int d) const {
    const auto n = static_cast<std::size_t>(n_orb);
    return ((static_cast<std::size_t>(a) * n + static_cast<std::size_t>(b)) * n + static_cast<std::size_t>(c)) * n +
           static_cast<std::size_t>(d);
  }
};

MolecularIntegrals read_fcidump(const std::filesystem::path& path);
MolecularIntegrals parse_fcidump(const std::string& text);
void write_fcidump(const MolecularIntegrals& ints, const std::filesystem::path& path);
std::string format_fcidump(const MolecularIntegrals& ints);

MolecularIntegrals hubbard_dimer(double t, double u);

struct CasPartition {
  std::vector<int> core;
  std::vector<int> active;
  std::vector<int> virtuals;
  Eigen::MatrixXd v_core;  // active x active
  double e_core = 0.0;
};

/// Folds the doubly occupied core into an active-space Hamiltonian. The
/// returned integrals carry e_const + e_core and n_elec - 2 |core|.
std::pair<CasPartition, MolecularIntegrals> build_cas(const MolecularIntegrals& ints, const std::vector<int>& active);

/// `n_occupied` highest occupied and `n_virtual` lowest unoccupied orbitals
/// (orbitals assumed energy-ordered, as in canonical MO files).
std::vector<int> frontier_active_space(const MolecularIntegrals& ints, int n_occupied, int n_virtual);

struct FockMatrix {
  Eigen::MatrixXd f;
};

/// F_ij = h_ij + sum_{k occ} (2 (ij|kk) - (ik|kj)) with the lowest
/// n_elec / 2 orbitals doubly occupied.
FockMatrix fock_matrix(const MolecularIntegrals& ints);

}  // namespace corrvec
