#pragma once

#include <complex>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "corrvec/state.hpp"

namespace corrvec {

enum class Pauli : std::uint8_t { I = 0, X = 1, Y = 2, Z = 3 };

char pauli_letter(Pauli p);

/// Tensor product of single-qubit Paulis over a fixed register width.
///
/// Stored as x/z bit masks so that P = i^{#Y} X^x Z^z. Textual labels put
/// qubit 0 rightmost ("IX" is X on qubit 0 of a 2-qubit register).
class PauliString {
 public:
  static constexpr int kMaxWidth = 62;

  PauliString() = default;
  explicit PauliString(int width);

  static PauliString from_label(std::string_view label);
  static PauliString single(int width, int qubit, Pauli p);

  int width() const { return width_; }
  Pauli at(int qubit) const;
  void set(int qubit, Pauli p);

  std::uint64_t x_mask() const { return x_; }
  std::uint64_t z_mask() const { return z_; }
  int y_count() const;
  bool is_identity() const { return x_ == 0 && z_ == 0; }
  int weight() const;
  std::string label() const;

  bool commutes_with(const PauliString& other) const;

  /// Applies the string to computational basis state |b>: returns the phase
  /// and writes the image index.
  cplx apply_to_basis(std::uint64_t b, std::uint64_t& image) const;

  friend bool operator==(const PauliString& a, const PauliString& b) {
    return a.width_ == b.width_ && a.x_ == b.x_ && a.z_ == b.z_;
  }
  /// Ordering by width, then by label read left to right with I < X < Y < Z.
  friend bool operator<(const PauliString& a, const PauliString& b);

 private:
  int width_ = 0;
  std::uint64_t x_ = 0;
  std::uint64_t z_ = 0;
};

struct PauliProduct {
  cplx phase;
  PauliString string;
};

/// a * b = phase * c with phase in {1, i, -1, -i}.
PauliProduct multiply_strings(const PauliString& a, const PauliString& b);

/// Weighted sum of Pauli strings on a common register width. Duplicate
/// strings are merged on insertion; terms whose magnitude falls below
/// kPruneTolerance are dropped.
class PauliSum {
 public:
  using TermMap = std::map<PauliString, cplx>;
  static constexpr double kPruneTolerance = 1e-14;

  PauliSum() = default;
  explicit PauliSum(int width) : width_(width) {}
  PauliSum(const PauliString& s, cplx coeff);

  static PauliSum identity(int width, cplx coeff = 1.0);
  static PauliSum from_label(std::string_view label, cplx coeff = 1.0);

  int width() const { return width_; }
  const TermMap& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }
  bool empty() const { return terms_.empty(); }
  cplx coefficient(const PauliString& s) const;

  void add_term(const PauliString& s, cplx coeff);

  PauliSum& operator+=(const PauliSum& other);
  PauliSum& operator-=(const PauliSum& other);
  PauliSum& operator*=(cplx scalar);

  bool is_hermitian(double tol = 1e-12) const;
  /// Largest |Im w_a|; zero for a hermitian sum.
  double max_imag_coefficient() const;
  double one_norm() const;

  /// One line per term: `coeff_re coeff_im letters`, terms in canonical order.
  std::string dump() const;
  static PauliSum parse_dump(std::string_view text);

  friend bool operator==(const PauliSum& a, const PauliSum& b) {
    return a.width_ == b.width_ && a.terms_ == b.terms_;
  }

 private:
  int width_ = 0;
  TermMap terms_;
};

PauliSum operator+(PauliSum a, const PauliSum& b);
PauliSum operator-(PauliSum a, const PauliSum& b);
PauliSum operator*(PauliSum a, cplx scalar);
PauliSum operator*(cplx scalar, PauliSum a);

PauliSum sum_multiply(const PauliSum& a, const PauliSum& b);
inline PauliSum operator*(const PauliSum& a, const PauliSum& b) { return sum_multiply(a, b); }

PauliSum adjoint(const PauliSum& a);

/// out = P |in>.
Eigen::VectorXcd apply_to(const PauliString& p, const Eigen::VectorXcd& in);
/// out = A |in>.
Eigen::VectorXcd apply_to(const PauliSum& a, const Eigen::VectorXcd& in);

/// <bra| P |ket>.
cplx matrix_element(const Eigen::VectorXcd& bra, const PauliString& p, const Eigen::VectorXcd& ket);
/// <bra| A |ket>.
cplx matrix_element(const Eigen::VectorXcd& bra, const PauliSum& a, const Eigen::VectorXcd& ket);

/// Tr(rho P).
cplx pauli_trace(const Eigen::MatrixXcd& rho, const PauliString& p);

/// <state|A|state>. For hermitian A the imaginary part is checked to be
/// below 1e-10 and the result is returned as a real number in `cplx` form.
cplx expectation_exact(const QuantumState& state, const PauliSum& a);

}  // namespace corrvec
