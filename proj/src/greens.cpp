#include "corrvec/greens.hpp"

#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "corrvec/errors.hpp"
#include "corrvec/molham.hpp"
#include "corrvec/oracle.hpp"

namespace corrvec {

namespace {

constexpr double kDetThreshold = 1e-12;

void check_cas(const GreensSeries& cas, const Eigen::MatrixXd& f, const std::vector<int>& idx) {
  if (f.rows() != f.cols()) throw DimensionError("Fock matrix is not square");
  if (static_cast<int>(idx.size()) != cas.dimension()) throw DimensionError("CAS index set does not match CAS GF dimension");
  std::vector<char> seen(static_cast<std::size_t>(f.rows()), 0);
  for (int i : idx) {
    if (i < 0 || i >= f.rows()) throw DimensionError("CAS index outside the full space");
    if (seen[static_cast<std::size_t>(i)]++) throw ValidationError("duplicate CAS index");
  }
}

Eigen::MatrixXd restrict(const Eigen::MatrixXd& f, const std::vector<int>& idx) {
  const auto n = static_cast<Eigen::Index>(idx.size());
  Eigen::MatrixXd out(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = 0; b < n; ++b) out(a, b) = f(idx[static_cast<std::size_t>(a)], idx[static_cast<std::size_t>(b)]);
  }
  return out;
}

GreensSeries full_shell(const GreensSeries& cas, const Eigen::MatrixXd& f) {
  GreensSeries out(cas.grid, static_cast<int>(f.rows()));
  out.valid = cas.valid;
  out.point_errors = cas.point_errors;
  return out;
}

}  // namespace

const char* grid_kind_name(GridKind k) { return k == GridKind::retarded ? "retarded" : "matsubara"; }

void FrequencyGrid::validate() const {
  if (points.empty()) throw ValidationError("frequency grid is empty");
  for (const auto& z : points) {
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) throw ValidationError("non-finite grid point");
    if (z.imag() <= 0.0) throw ValidationError("grid points need a positive imaginary part");
    if (kind == GridKind::matsubara && z.real() != 0.0) throw ValidationError("Matsubara points must be imaginary");
  }
  if (kind == GridKind::retarded && !(eta > 0.0)) throw ValidationError("retarded grid needs eta > 0");
}

FrequencyGrid retarded_grid(double wmin, double wmax, int n, double eta) {
  if (n < 1) throw ValidationError("grid needs at least one point");
  if (!(eta > 0.0)) throw ValidationError("broadening must be positive");
  if (wmax < wmin) throw ValidationError("grid range is reversed");
  FrequencyGrid g;
  g.kind = GridKind::retarded;
  g.eta = eta;
  for (int k = 0; k < n; ++k) {
    const double w = n == 1 ? wmin : wmin + (wmax - wmin) * k / (n - 1);
    g.points.emplace_back(w, eta);
  }
  return g;
}

FrequencyGrid matsubara_grid(double wmax, int n) {
  if (n < 1) throw ValidationError("grid needs at least one point");
  if (!(wmax > 0.0)) throw ValidationError("Matsubara cutoff must be positive");
  FrequencyGrid g;
  g.kind = GridKind::matsubara;
  const double lo = std::log(wmax / 1000.0);
  const double hi = std::log(wmax);
  for (int k = 0; k < n; ++k) {
    const double w = n == 1 ? wmax : std::exp(lo + (hi - lo) * k / (n - 1));
    g.points.emplace_back(0.0, w);
  }
  return g;
}

GreensSeries::GreensSeries(FrequencyGrid grid_, int dimension)
    : grid(std::move(grid_)),
      g(grid.size(), Eigen::MatrixXcd::Zero(dimension, dimension)),
      valid(grid.size(), 1),
      point_errors(grid.size()),
      diagnostics(grid.size()) {}

double GreensSeries::trace(std::size_t k) const { return trace_spectrum(g.at(k)); }

std::size_t GreensSeries::valid_count() const {
  std::size_t n = 0;
  for (char v : valid) n += v ? 1 : 0;
  return n;
}

double trace_spectrum(const Eigen::MatrixXcd& g) {
  if (g.rows() != g.cols()) throw DimensionError("trace of a non-square matrix");
  return g.diagonal().imag().sum();
}

Eigen::MatrixXcd g0(const Eigen::MatrixXd& f, cplx z) {
  if (f.rows() != f.cols()) throw DimensionError("Fock matrix is not square");
  const auto n = f.rows();
  const Eigen::MatrixXcd a = z * Eigen::MatrixXcd::Identity(n, n) - f.cast<cplx>();
  Eigen::FullPivLU<Eigen::MatrixXcd> lu(a);
  if (!lu.isInvertible()) throw NumericalError(fmt::format("z - F is singular at z = {}{:+}i", z.real(), z.imag()));
  return lu.inverse();
}

Eigen::MatrixXcd g0(const FockMatrix& f, cplx z) { return g0(f.f, z); }

Eigen::MatrixXd spin_orbital_fock(const FockMatrix& f) {
  const auto n = f.f.rows();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  out.topLeftCorner(n, n) = f.f;
  out.bottomRightCorner(n, n) = f.f;
  return out;
}

std::vector<int> cas_spin_orbitals(const std::vector<int>& active, int n_orb) {
  std::vector<int> out;
  for (int a : active) {
    if (a < 0 || a >= n_orb) throw DimensionError("active orbital outside the orbital range");
    out.push_back(a);
  }
  for (int a : active) out.push_back(a + n_orb);
  return out;
}

GreensSeries dyson_embed(const GreensSeries& cas, const Eigen::MatrixXd& f, const std::vector<int>& cas_index) {
  check_cas(cas, f, cas_index);
  GreensSeries out = full_shell(cas, f);
  const Eigen::MatrixXd f_cas = restrict(f, cas_index);
  const auto n = f.rows();
  const auto nc = f_cas.rows();
  for (std::size_t k = 0; k < cas.size(); ++k) {
    if (!cas.valid[k]) continue;
    const cplx z = cas.grid.points[k];
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(cas.g[k]);
    const double det = std::abs(lu.determinant());
    if (!(det > kDetThreshold)) {
      out.valid[k] = 0;
      out.point_errors[k] = fmt::format("|det G_cas| = {:.3e}", det);
      continue;
    }
    const Eigen::MatrixXcd sigma =
        z * Eigen::MatrixXcd::Identity(nc, nc) - f_cas.cast<cplx>() - lu.inverse();
    Eigen::MatrixXcd a = z * Eigen::MatrixXcd::Identity(n, n) - f.cast<cplx>();
    for (Eigen::Index r = 0; r < nc; ++r) {
      for (Eigen::Index c = 0; c < nc; ++c) a(cas_index[static_cast<std::size_t>(r)], cas_index[static_cast<std::size_t>(c)]) -= sigma(r, c);
    }
    Eigen::FullPivLU<Eigen::MatrixXcd> full(a);
    if (!full.isInvertible()) {
      out.valid[k] = 0;
      out.point_errors[k] = "embedded resolvent is singular";
      continue;
    }
    out.g[k] = full.inverse();
  }
  return out;
}

GreensSeries nondyson_embed(const GreensSeries& cas, const Eigen::MatrixXd& f, const std::vector<int>& cas_index) {
  check_cas(cas, f, cas_index);
  GreensSeries out = full_shell(cas, f);
  const auto nc = static_cast<Eigen::Index>(cas_index.size());
  for (std::size_t k = 0; k < cas.size(); ++k) {
    if (!cas.valid[k]) continue;
    Eigen::MatrixXcd g = g0(f, cas.grid.points[k]);
    for (Eigen::Index r = 0; r < nc; ++r) {
      for (Eigen::Index c = 0; c < nc; ++c) g(cas_index[static_cast<std::size_t>(r)], cas_index[static_cast<std::size_t>(c)]) = cas.g[k](r, c);
    }
    out.g[k] = std::move(g);
  }
  return out;
}

GreensSeries g0_series(const Eigen::MatrixXd& f, const FrequencyGrid& grid) {
  GreensSeries out(grid, static_cast<int>(f.rows()));
  for (std::size_t k = 0; k < grid.size(); ++k) out.g[k] = g0(f, grid.points[k]);
  return out;
}

GreensSeries oracle_series(const LehmannOracle& oracle, const FrequencyGrid& grid) {
  GreensSeries out(grid, oracle.size());
  for (std::size_t k = 0; k < grid.size(); ++k) out.g[k] = oracle.gf(grid.points[k]);
  return out;
}

double spectral_weight(const GreensSeries& s) {
  if (s.grid.kind != GridKind::retarded) throw ValidationError("spectral weight needs a retarded grid");
  double acc = 0.0;
  for (std::size_t k = 1; k < s.size(); ++k) {
    const double dw = s.grid.points[k].real() - s.grid.points[k - 1].real();
    acc += 0.5 * dw * (s.trace(k) + s.trace(k - 1));
  }
  return -acc / std::numbers::pi;
}

}  // namespace corrvec
