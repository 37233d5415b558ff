#include "corrvec/pauli.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "corrvec/errors.hpp"

namespace corrvec {

namespace {

constexpr cplx kIPow[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};

int letter_code(std::uint64_t x, std::uint64_t z, int q) {
  const bool xb = (x >> q) & 1U;
  const bool zb = (z >> q) & 1U;
  if (xb) return zb ? 2 : 1;
  return zb ? 3 : 0;
}

void check_width(int a, int b, const char* what) {
  if (a != b) {
    throw DimensionError(std::string(what) + ": width mismatch (" + std::to_string(a) + " vs " + std::to_string(b) +
                         ")");
  }
}

}  // namespace

char pauli_letter(Pauli p) {
  switch (p) {
    case Pauli::I: return 'I';
    case Pauli::X: return 'X';
    case Pauli::Y: return 'Y';
    case Pauli::Z: return 'Z';
  }
  return '?';
}

PauliString::PauliString(int width) : width_(width) {
  if (width < 0 || width > kMaxWidth) throw DimensionError("Pauli string width out of range");
}

PauliString PauliString::from_label(std::string_view label) {
  PauliString s(static_cast<int>(label.size()));
  for (std::size_t k = 0; k < label.size(); ++k) {
    const int q = static_cast<int>(label.size() - 1 - k);
    switch (label[k]) {
      case 'I': break;
      case 'X': s.set(q, Pauli::X); break;
      case 'Y': s.set(q, Pauli::Y); break;
      case 'Z': s.set(q, Pauli::Z); break;
      default: throw ParseError(std::string("bad Pauli letter '") + label[k] + "'", 0);
    }
  }
  return s;
}

PauliString PauliString::single(int width, int qubit, Pauli p) {
  PauliString s(width);
  s.set(qubit, p);
  return s;
}

Pauli PauliString::at(int qubit) const {
  if (qubit < 0 || qubit >= width_) throw DimensionError("qubit index out of range");
  return static_cast<Pauli>(letter_code(x_, z_, qubit));
}

void PauliString::set(int qubit, Pauli p) {
  if (qubit < 0 || qubit >= width_) throw DimensionError("qubit index out of range");
  const std::uint64_t bit = std::uint64_t{1} << qubit;
  x_ &= ~bit;
  z_ &= ~bit;
  if (p == Pauli::X || p == Pauli::Y) x_ |= bit;
  if (p == Pauli::Z || p == Pauli::Y) z_ |= bit;
}

int PauliString::y_count() const { return std::popcount(x_ & z_); }

int PauliString::weight() const { return std::popcount(x_ | z_); }

std::string PauliString::label() const {
  std::string out(static_cast<std::size_t>(width_), 'I');
  for (int q = 0; q < width_; ++q) out[static_cast<std::size_t>(width_ - 1 - q)] = pauli_letter(at(q));
  return out;
}

bool PauliString::commutes_with(const PauliString& other) const {
  check_width(width_, other.width_, "commutes_with");
  return (std::popcount((x_ & other.z_) ^ (z_ & other.x_)) % 2) == 0;
}

cplx PauliString::apply_to_basis(std::uint64_t b, std::uint64_t& image) const {
  image = b ^ x_;
  const int k = (y_count() + 2 * std::popcount(b & z_)) & 3;
  return kIPow[k];
}

bool operator<(const PauliString& a, const PauliString& b) {
  if (a.width_ != b.width_) return a.width_ < b.width_;
  for (int q = a.width_ - 1; q >= 0; --q) {
    const int la = letter_code(a.x_, a.z_, q);
    const int lb = letter_code(b.x_, b.z_, q);
    if (la != lb) return la < lb;
  }
  return false;
}

PauliProduct multiply_strings(const PauliString& a, const PauliString& b) {
  check_width(a.width(), b.width(), "multiply_strings");
  PauliString c(a.width());
  const std::uint64_t xc = a.x_mask() ^ b.x_mask();
  const std::uint64_t zc = a.z_mask() ^ b.z_mask();
  for (int q = 0; q < a.width(); ++q) c.set(q, static_cast<Pauli>(letter_code(xc, zc, q)));
  const int k = a.y_count() + b.y_count() - c.y_count() + 2 * std::popcount(a.z_mask() & b.x_mask());
  return {kIPow[((k % 4) + 4) % 4], c};
}

PauliSum::PauliSum(const PauliString& s, cplx coeff) : width_(s.width()) { add_term(s, coeff); }

PauliSum PauliSum::identity(int width, cplx coeff) { return PauliSum(PauliString(width), coeff); }

PauliSum PauliSum::from_label(std::string_view label, cplx coeff) {
  return PauliSum(PauliString::from_label(label), coeff);
}

cplx PauliSum::coefficient(const PauliString& s) const {
  auto it = terms_.find(s);
  return it == terms_.end() ? cplx{0.0} : it->second;
}

void PauliSum::add_term(const PauliString& s, cplx coeff) {
  check_width(width_, s.width(), "PauliSum::add_term");
  auto [it, inserted] = terms_.try_emplace(s, coeff);
  if (!inserted) it->second += coeff;
  if (std::abs(it->second) < kPruneTolerance) terms_.erase(it);
}

PauliSum& PauliSum::operator+=(const PauliSum& other) {
  check_width(width_, other.width_, "PauliSum::operator+=");
  for (const auto& [s, c] : other.terms_) add_term(s, c);
  return *this;
}

PauliSum& PauliSum::operator-=(const PauliSum& other) {
  check_width(width_, other.width_, "PauliSum::operator-=");
  for (const auto& [s, c] : other.terms_) add_term(s, -c);
  return *this;
}

PauliSum& PauliSum::operator*=(cplx scalar) {
  for (auto it = terms_.begin(); it != terms_.end();) {
    it->second *= scalar;
    if (std::abs(it->second) < kPruneTolerance) {
      it = terms_.erase(it);
    } else {
      ++it;
    }
  }
  return *this;
}

bool PauliSum::is_hermitian(double tol) const { return max_imag_coefficient() <= tol; }

double PauliSum::max_imag_coefficient() const {
  double m = 0.0;
  for (const auto& [s, c] : terms_) m = std::max(m, std::abs(c.imag()));
  return m;
}

double PauliSum::one_norm() const {
  double n = 0.0;
  for (const auto& [s, c] : terms_) n += std::abs(c);
  return n;
}

std::string PauliSum::dump() const {
  std::string out;
  char buf[96];
  for (const auto& [s, c] : terms_) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g ", c.real(), c.imag());
    out += buf;
    out += s.label();
    out += '\n';
  }
  return out;
}

PauliSum PauliSum::parse_dump(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  PauliSum out;
  bool first = true;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    double re = 0.0;
    double im = 0.0;
    std::string letters;
    if (!(ls >> re >> im >> letters)) throw ParseError("malformed Pauli term", lineno);
    PauliString s = PauliString::from_label(letters);
    if (first) {
      out = PauliSum(s.width());
      first = false;
    }
    out.add_term(s, {re, im});
  }
  return out;
}

PauliSum operator+(PauliSum a, const PauliSum& b) { return a += b; }
PauliSum operator-(PauliSum a, const PauliSum& b) { return a -= b; }
PauliSum operator*(PauliSum a, cplx scalar) { return a *= scalar; }
PauliSum operator*(cplx scalar, PauliSum a) { return a *= scalar; }

PauliSum sum_multiply(const PauliSum& a, const PauliSum& b) {
  check_width(a.width(), b.width(), "sum_multiply");
  PauliSum out(a.width());
  for (const auto& [sa, ca] : a.terms()) {
    for (const auto& [sb, cb] : b.terms()) {
      auto [phase, sc] = multiply_strings(sa, sb);
      out.add_term(sc, phase * ca * cb);
    }
  }
  return out;
}

PauliSum adjoint(const PauliSum& a) {
  PauliSum out(a.width());
  for (const auto& [s, c] : a.terms()) out.add_term(s, std::conj(c));
  return out;
}

Eigen::VectorXcd apply_to(const PauliString& p, const Eigen::VectorXcd& in) {
  if (in.size() != (Eigen::Index{1} << p.width())) throw DimensionError("apply: state width mismatch");
  Eigen::VectorXcd out(in.size());
  const std::uint64_t n = static_cast<std::uint64_t>(in.size());
  for (std::uint64_t b = 0; b < n; ++b) {
    std::uint64_t img = 0;
    const cplx ph = p.apply_to_basis(b, img);
    out[static_cast<Eigen::Index>(img)] = ph * in[static_cast<Eigen::Index>(b)];
  }
  return out;
}

Eigen::VectorXcd apply_to(const PauliSum& a, const Eigen::VectorXcd& in) {
  if (in.size() != (Eigen::Index{1} << a.width())) throw DimensionError("apply: state width mismatch");
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(in.size());
  const std::uint64_t n = static_cast<std::uint64_t>(in.size());
  for (const auto& [s, c] : a.terms()) {
    for (std::uint64_t b = 0; b < n; ++b) {
      std::uint64_t img = 0;
      const cplx ph = s.apply_to_basis(b, img);
      out[static_cast<Eigen::Index>(img)] += c * ph * in[static_cast<Eigen::Index>(b)];
    }
  }
  return out;
}

cplx matrix_element(const Eigen::VectorXcd& bra, const PauliString& p, const Eigen::VectorXcd& ket) {
  if (bra.size() != ket.size() || ket.size() != (Eigen::Index{1} << p.width())) {
    throw DimensionError("matrix_element: width mismatch");
  }
  cplx acc = 0.0;
  const std::uint64_t n = static_cast<std::uint64_t>(ket.size());
  for (std::uint64_t b = 0; b < n; ++b) {
    std::uint64_t img = 0;
    const cplx ph = p.apply_to_basis(b, img);
    acc += std::conj(bra[static_cast<Eigen::Index>(img)]) * ph * ket[static_cast<Eigen::Index>(b)];
  }
  return acc;
}

cplx matrix_element(const Eigen::VectorXcd& bra, const PauliSum& a, const Eigen::VectorXcd& ket) {
  if (bra.size() != ket.size() || ket.size() != (Eigen::Index{1} << a.width())) {
    throw DimensionError("matrix_element: width mismatch");
  }
  cplx acc = 0.0;
  for (const auto& [s, c] : a.terms()) acc += c * matrix_element(bra, s, ket);
  return acc;
}

cplx pauli_trace(const Eigen::MatrixXcd& rho, const PauliString& p) {
  if (rho.rows() != (Eigen::Index{1} << p.width())) throw DimensionError("pauli_trace: width mismatch");
  cplx acc = 0.0;
  const std::uint64_t n = static_cast<std::uint64_t>(rho.rows());
  for (std::uint64_t b = 0; b < n; ++b) {
    std::uint64_t img = 0;
    const cplx ph = p.apply_to_basis(b, img);
    acc += rho(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(img)) * ph;
  }
  return acc;
}

cplx expectation_exact(const QuantumState& state, const PauliSum& a) {
  check_width(state.width(), a.width(), "expectation_exact");
  const cplx v = matrix_element(state.amplitudes(), a, state.amplitudes());
  if (a.is_hermitian()) {
    if (std::abs(v.imag()) > 1e-10) throw NumericalError("hermitian expectation has imaginary part");
    return {v.real(), 0.0};
  }
  return v;
}

}  // namespace corrvec
