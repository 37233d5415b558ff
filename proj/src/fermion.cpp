#include "corrvec/fermion.hpp"

#include <cmath>
#include <string>

#include "corrvec/errors.hpp"
#include "corrvec/molham.hpp"

namespace corrvec {

FermionOperator::FermionOperator(cplx coeff, std::vector<LadderFactor> factors) {
  add_term(coeff, std::move(factors));
}

void FermionOperator::add_term(cplx coeff, std::vector<LadderFactor> factors) {
  for (const auto& f : factors) {
    if (f.mode < 0) throw DimensionError("negative fermionic mode index");
  }
  terms_.push_back({coeff, std::move(factors)});
}

FermionOperator& FermionOperator::operator+=(const FermionOperator& other) {
  terms_.insert(terms_.end(), other.terms_.begin(), other.terms_.end());
  return *this;
}

FermionOperator& FermionOperator::operator*=(cplx scalar) {
  for (auto& t : terms_) t.coeff *= scalar;
  return *this;
}

FermionOperator operator*(const FermionOperator& a, const FermionOperator& b) {
  FermionOperator out;
  for (const auto& ta : a.terms_) {
    for (const auto& tb : b.terms_) {
      std::vector<LadderFactor> f = ta.factors;
      f.insert(f.end(), tb.factors.begin(), tb.factors.end());
      out.add_term(ta.coeff * tb.coeff, std::move(f));
    }
  }
  return out;
}

namespace {

PauliSum ladder_image(int mode, bool dagger, int width) {
  if (mode < 0 || mode >= width) {
    throw DimensionError("fermionic mode " + std::to_string(mode) + " outside register of width " +
                         std::to_string(width));
  }
  PauliString xs(width);
  PauliString ys(width);
  for (int q = 0; q < mode; ++q) {
    xs.set(q, Pauli::Z);
    ys.set(q, Pauli::Z);
  }
  xs.set(mode, Pauli::X);
  ys.set(mode, Pauli::Y);
  PauliSum out(width);
  out.add_term(xs, 0.5);
  out.add_term(ys, dagger ? cplx{0.0, -0.5} : cplx{0.0, 0.5});
  return out;
}

}  // namespace

PauliSum jordan_wigner(const FermionOperator& op, int width) {
  PauliSum out(width);
  for (const auto& term : op.terms()) {
    PauliSum prod = PauliSum::identity(width, term.coeff);
    for (const auto& f : term.factors) prod = sum_multiply(prod, ladder_image(f.mode, f.dagger, width));
    out += prod;
  }
  return out;
}

PauliSum perturbation_op(int orbital, LadderKind kind, int width) {
  return ladder_image(orbital, kind == LadderKind::creation, width);
}

PauliSum number_operator(int width) {
  PauliSum out(width);
  for (int q = 0; q < width; ++q) {
    out.add_term(PauliString(width), 0.5);
    out.add_term(PauliString::single(width, q, Pauli::Z), -0.5);
  }
  return out;
}

bool conserves_sz(const PauliSum& h) {
  const int m = h.width();
  if (m % 2 != 0) return false;
  PauliSum sz(m);
  for (int q = 0; q < m; ++q) sz.add_term(PauliString::single(m, q, Pauli::Z), q < m / 2 ? 1.0 : -1.0);
  const PauliSum comm = h * sz - sz * h;
  for (const auto& [s, w] : comm.terms()) {
    if (std::abs(w) > 1e-12) return false;
  }
  return true;
}

PauliSum number_penalty(int width, int n_target, double lambda) {
  if (lambda == 0.0) return PauliSum(width);
  PauliSum shifted = number_operator(width) - PauliSum::identity(width, static_cast<double>(n_target));
  return sum_multiply(shifted, shifted) * cplx{lambda};
}

PauliSum hamiltonian_to_qubits(const MolecularIntegrals& ints, double mu) {
  ints.validate();
  const int n = ints.n_orb;
  const SpinOrbitalConvention conv{n};
  const int m = conv.width();

  std::vector<PauliSum> up(m);
  std::vector<PauliSum> down(m);
  for (int p = 0; p < m; ++p) {
    up[p] = ladder_image(p, true, m);
    down[p] = ladder_image(p, false, m);
  }

  PauliSum out = PauliSum::identity(m, ints.e_const);

  for (int p = 0; p < m; ++p) {
    for (int q = 0; q < m; ++q) {
      if (conv.spin_of(p) != conv.spin_of(q)) continue;
      double c = ints.h(conv.orbital_of(p), conv.orbital_of(q));
      if (p == q) c -= mu;
      if (c == 0.0) continue;
      out += sum_multiply(up[p], down[q]) * cplx{c};
    }
  }

  // 1/2 sum g_{pqrs} c+_p c+_q c_s c_r over spin orbitals; spin is carried
  // from p to r and from q to s.
  std::vector<PauliSum> creators(static_cast<std::size_t>(m) * m);
  std::vector<PauliSum> annihilators(static_cast<std::size_t>(m) * m);
  for (int p = 0; p < m; ++p) {
    for (int q = 0; q < m; ++q) {
      if (p == q) continue;
      creators[static_cast<std::size_t>(p) * m + q] = sum_multiply(up[p], up[q]);
      annihilators[static_cast<std::size_t>(p) * m + q] = sum_multiply(down[q], down[p]);  // c_q c_p
    }
  }
  for (int p = 0; p < m; ++p) {
    for (int q = 0; q < m; ++q) {
      if (p == q) continue;
      for (int r = 0; r < m; ++r) {
        if (conv.spin_of(r) != conv.spin_of(p)) continue;
        for (int s = 0; s < m; ++s) {
          if (r == s || conv.spin_of(s) != conv.spin_of(q)) continue;
          const double v =
              ints.g_at(conv.orbital_of(p), conv.orbital_of(q), conv.orbital_of(r), conv.orbital_of(s));
          if (v == 0.0) continue;
          // annihilators[r*m+s] holds c_s c_r.
          out += sum_multiply(creators[static_cast<std::size_t>(p) * m + q],
                              annihilators[static_cast<std::size_t>(r) * m + s]) *
                 cplx{0.5 * v};
        }
      }
    }
  }
  return out;
}

}  // namespace corrvec
