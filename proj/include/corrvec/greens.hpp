#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "corrvec/fermion.hpp"
#include "corrvec/state.hpp"

namespace corrvec {

struct FockMatrix;
class LehmannOracle;

enum class GridKind { retarded, matsubara };

const char* grid_kind_name(GridKind k);

struct FrequencyGrid {
  GridKind kind = GridKind::retarded;
  std::vector<cplx> points;
  double eta = 0.0;  // retarded grids only

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  void validate() const;
};

/// n evenly spaced points w + i eta on [wmin, wmax].
FrequencyGrid retarded_grid(double wmin, double wmax, int n, double eta = 0.05);
/// n points i w, log-spaced from wmax / 1000 to wmax.
FrequencyGrid matsubara_grid(double wmax = 10.0, int n = 64);

struct PointDiagnostic {
  int orbital = 0;
  Branch branch = Branch::particle;
  double residual = 0.0;
  cplx gamma{0.0, 0.0};
  int depth = 0;
  int sweeps = 0;
  bool converged = false;
  bool zero = false;
  bool refined = false;
  std::string error;
};

struct GreensSeries {
  FrequencyGrid grid;
  std::vector<Eigen::MatrixXcd> g;
  std::vector<char> valid;  // 0 where the point was skipped
  std::vector<std::string> point_errors;
  std::vector<std::vector<PointDiagnostic>> diagnostics;

  GreensSeries() = default;
  GreensSeries(FrequencyGrid grid, int dimension);

  int dimension() const { return g.empty() ? 0 : static_cast<int>(g.front().rows()); }
  std::size_t size() const { return g.size(); }
  double trace(std::size_t k) const;
  std::size_t valid_count() const;
};

/// sum_a Im G_aa.
double trace_spectrum(const Eigen::MatrixXcd& g);

/// [z - F]^-1.
Eigen::MatrixXcd g0(const Eigen::MatrixXd& f, cplx z);
Eigen::MatrixXcd g0(const FockMatrix& f, cplx z);

/// F (+) F in the blocked spin-orbital order.
Eigen::MatrixXd spin_orbital_fock(const FockMatrix& f);
/// Full-space spin-orbital index of every CAS spin-orbital: active[k] for
/// position k and active[k] + n_orb for position k + |active|.
std::vector<int> cas_spin_orbitals(const std::vector<int>& active, int n_orb);

/// Sigma = (z - F_cas) - G_cas^-1 inserted into the full resolvent. Points
/// with |det G_cas| <= 1e-12 are skipped and flagged.
GreensSeries dyson_embed(const GreensSeries& cas, const Eigen::MatrixXd& f, const std::vector<int>& cas_index);
/// G0 + P (G_cas - G0) P.
GreensSeries nondyson_embed(const GreensSeries& cas, const Eigen::MatrixXd& f, const std::vector<int>& cas_index);

GreensSeries g0_series(const Eigen::MatrixXd& f, const FrequencyGrid& grid);
GreensSeries oracle_series(const LehmannOracle& oracle, const FrequencyGrid& grid);

/// -(1/pi) times the trapezoid integral of the trace spectrum over a
/// retarded grid.
double spectral_weight(const GreensSeries& s);

}  // namespace corrvec
