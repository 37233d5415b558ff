#pragma once

#include <vector>

#include "corrvec/pauli.hpp"

namespace corrvec {

struct MolecularIntegrals;

struct LadderFactor {
  int mode;
  bool dagger;
};

struct FermionTerm {
  cplx coeff;
  std::vector<LadderFactor> factors;  // applied right to left, as written
};

/// Second-quantized operator kept in the factor order it was written in.
class FermionOperator {
 public:
  FermionOperator() = default;
  FermionOperator(cplx coeff, std::vector<LadderFactor> factors);

  static FermionOperator creation(int mode) { return FermionOperator(1.0, {{mode, true}}); }
  static FermionOperator annihilation(int mode) { return FermionOperator(1.0, {{mode, false}}); }
  static FermionOperator number(int mode) { return FermionOperator(1.0, {{mode, true}, {mode, false}}); }

  const std::vector<FermionTerm>& terms() const { return terms_; }
  void add_term(cplx coeff, std::vector<LadderFactor> factors);

  FermionOperator& operator+=(const FermionOperator& other);
  FermionOperator& operator*=(cplx scalar);
  friend FermionOperator operator*(const FermionOperator& a, const FermionOperator& b);

 private:
  std::vector<FermionTerm> terms_;
};

/// Blocked spin-orbital ordering: spatial orbital p with spin up sits on
/// qubit p, spin down on qubit p + n_spatial.
struct SpinOrbitalConvention {
  int n_spatial = 0;

  int qubit(int orbital, int spin) const { return orbital + spin * n_spatial; }
  int orbital_of(int qubit) const { return qubit % n_spatial; }
  int spin_of(int qubit) const { return qubit / n_spatial; }
  int width() const { return 2 * n_spatial; }
};

/// c+_j -> 1/2 (X_j - i Y_j) Z_{j-1} ... Z_0, c_j -> 1/2 (X_j + i Y_j) Z_{j-1} ... Z_0.
PauliSum jordan_wigner(const FermionOperator& op, int width);

enum class LadderKind { creation, annihilation };

/// Particle term: V = c+, Q = z - (H - E0). Hole term: V = c, Q = z + (H - E0).
enum class Branch { particle, hole };

inline LadderKind ladder_of(Branch b) { return b == Branch::particle ? LadderKind::creation : LadderKind::annihilation; }
inline int q_sign(Branch b) { return b == Branch::particle ? -1 : +1; }
inline const char* branch_name(Branch b) { return b == Branch::particle ? "particle" : "hole"; }

/// JW image of a single ladder operator on `orbital` (a qubit index).
PauliSum perturbation_op(int orbital, LadderKind kind, int width);

PauliSum number_operator(int width);

/// True when [H, S_z] = 0 in the blocked order (even width).
bool conserves_sz(const PauliSum& h);

/// lambda * (N - n_target)^2.
PauliSum number_penalty(int width, int n_target, double lambda);

/// Qubit Hamiltonian of the integrals in blocked spin-orbital order:
/// sum h c+c + 1/2 sum g c+ c+ c c - mu N + e_const.
PauliSum hamiltonian_to_qubits(const MolecularIntegrals& ints, double mu = 0.0);

}  // namespace corrvec
