#include "corrvec/molham.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include "corrvec/errors.hpp"

namespace corrvec {

MolecularIntegrals::MolecularIntegrals(int n_orb_, int n_elec_)
    : n_orb(n_orb_),
      h(Eigen::MatrixXd::Zero(n_orb_, n_orb_)),
      g(static_cast<std::size_t>(n_orb_) * n_orb_ * n_orb_ * n_orb_, 0.0),
      n_elec(n_elec_) {
  if (n_orb_ < 0) throw ValidationError("negative orbital count");
}

void MolecularIntegrals::validate() const {
  if (h.rows() != n_orb || h.cols() != n_orb) throw DimensionError("one-body tensor does not match n_orb");
  if (g.size() != static_cast<std::size_t>(n_orb) * n_orb * n_orb * n_orb) {
    throw DimensionError("two-body tensor does not match n_orb");
  }
  if (n_orb > 0 && (h - h.transpose()).cwiseAbs().maxCoeff() > 1e-10) {
    throw ValidationError("one-body integrals are not hermitian");
  }
  if (n_elec < 0 || n_elec > 2 * n_orb) throw ValidationError("electron count outside [0, 2 n_orb]");
}

namespace {

std::string upper(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return s;
}

bool header_int(const std::string& header, const char* key, int& out) {
  const std::regex re(std::string("\\b") + key + "\\s*=\\s*(-?\\d+)");
  std::smatch m;
  if (!std::regex_search(header, m, re)) return false;
  out = std::stoi(m[1].str());
  return true;
}

class SymmetricSetter {
 public:
  explicit SymmetricSetter(MolecularIntegrals& ints)
      : ints_(ints),
        g_set_(ints.g.size(), 0),
        h_set_(static_cast<std::size_t>(ints.n_orb) * ints.n_orb, 0) {}

  void two_body(int p, int q, int r, int s, double v, int line) {
    const int perms[8][4] = {{p, q, r, s}, {q, p, r, s}, {p, q, s, r}, {q, p, s, r},
                             {r, s, p, q}, {s, r, p, q}, {r, s, q, p}, {s, r, q, p}};
    for (const auto& pm : perms) {
      double& slot = ints_.g_at(pm[0], pm[2], pm[1], pm[3]);  // (pq|rs) -> physicist (pr,qs)
      char& flag = g_set_[flat4(pm[0], pm[2], pm[1], pm[3])];
      put(slot, flag, v, line);
    }
  }

  void one_body(int p, int q, double v, int line) {
    put(ints_.h(p, q), h_set_[static_cast<std::size_t>(p) * ints_.n_orb + q], v, line);
    put(ints_.h(q, p), h_set_[static_cast<std::size_t>(q) * ints_.n_orb + p], v, line);
  }

 private:
  static void put(double& slot, char& flag, double v, int line) {
    if (flag && std::abs(slot - v) > 1e-12 * std::max(1.0, std::abs(v))) {
      throw ValidationError("FCIDUMP entry on line " + std::to_string(line) +
                            " contradicts a symmetry-equivalent entry");
    }
    slot = v;
    flag = 1;
  }

  std::size_t flat4(int a, int b, int c, int d) const {
    const auto n = static_cast<std::size_t>(ints_.n_orb);
    return ((static_cast<std::size_t>(a) * n + b) * n + c) * n + d;
  }

  MolecularIntegrals& ints_;
  std::vector<char> g_set_;
  std::vector<char> h_set_;
};

}  // namespace

MolecularIntegrals parse_fcidump(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  std::string header;
  bool in_header = false;
  bool header_done = false;
  while (!header_done && std::getline(in, line)) {
    ++lineno;
    const std::string u = upper(line);
    if (!in_header) {
      if (u.find_first_not_of(" \t\r") == std::string::npos) continue;
      if (u.find("&FCI") == std::string::npos) throw ParseError("FCIDUMP must start with an &FCI namelist", lineno);
      in_header = true;
    }
    header += u + ' ';
    if (u.find("&END") != std::string::npos || u.find('/') != std::string::npos) header_done = true;
  }
  if (!header_done) throw ParseError("unterminated &FCI namelist", lineno);

  int norb = -1;
  int nelec = -1;
  if (!header_int(header, "NORB", norb)) throw ParseError("header lacks NORB", lineno);
  if (!header_int(header, "NELEC", nelec)) throw ParseError("header lacks NELEC", lineno);
  int ms2 = 0;
  header_int(header, "MS2", ms2);
  if (std::regex_search(header, std::regex("\\bIUHF\\s*=\\s*1|\\bUHF\\s*=\\s*\\.?T"))) {
    throw ValidationError("unrestricted FCIDUMP files are not supported");
  }

  MolecularIntegrals ints(norb, nelec);
  ints.ms2 = ms2;
  SymmetricSetter setter(ints);
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::replace(line.begin(), line.end(), 'D', 'E');
    std::replace(line.begin(), line.end(), 'd', 'e');
    std::istringstream ls(line);
    double v = 0.0;
    int i = 0;
    int j = 0;
    int k = 0;
    int l = 0;
    if (!(ls >> v >> i >> j >> k >> l)) throw ParseError("malformed integral line", lineno);
    std::string rest;
    if (ls >> rest) throw ParseError("trailing tokens on integral line", lineno);
    for (int idx : {i, j, k, l}) {
      if (idx < 0 || idx > norb) throw ParseError("orbital index out of range", lineno);
    }
    if (i > 0 && j > 0 && k > 0 && l > 0) {
      setter.two_body(i - 1, j - 1, k - 1, l - 1, v, lineno);
    } else if (i > 0 && j > 0 && k == 0 && l == 0) {
      setter.one_body(i - 1, j - 1, v, lineno);
    } else if (i > 0 && j == 0 && k == 0 && l == 0) {
      if (ints.orbital_energies.empty()) ints.orbital_energies.assign(static_cast<std::size_t>(norb), 0.0);
      ints.orbital_energies[static_cast<std::size_t>(i - 1)] = v;
    } else if (i == 0 && j == 0 && k == 0 && l == 0) {
      ints.e_const = v;
    } else {
      throw ParseError("unrecognized index pattern", lineno);
    }
  }
  ints.validate();
  return ints;
}

MolecularIntegrals read_fcidump(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ParseError("cannot open FCIDUMP file " + path.string(), 0);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_fcidump(ss.str());
}

std::string format_fcidump(const MolecularIntegrals& ints) {
  ints.validate();
  const int n = ints.n_orb;
  std::string out;
  char buf[128];
  std::snprintf(buf, sizeof buf, " &FCI NORB=%d,NELEC=%d,MS2=%d,\n  ORBSYM=", n, ints.n_elec, ints.ms2);
  out += buf;
  for (int i = 0; i < n; ++i) out += "1,";
  out += "\n  ISYM=1,\n &END\n";
  auto line = [&](double v, int i, int j, int k, int l) {
    std::snprintf(buf, sizeof buf, "%.17g %d %d %d %d\n", v, i, j, k, l);
    out += buf;
  };
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      for (int k = 0; k < n; ++k) {
        for (int l = 0; l <= k; ++l) {
          if (i * (i + 1) / 2 + j < k * (k + 1) / 2 + l) continue;
          const double v = ints.chem(i, j, k, l);
          if (v != 0.0) line(v, i + 1, j + 1, k + 1, l + 1);
        }
      }
    }
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      if (ints.h(i, j) != 0.0) line(ints.h(i, j), i + 1, j + 1, 0, 0);
    }
  }
  for (std::size_t i = 0; i < ints.orbital_energies.size(); ++i) {
    line(ints.orbital_energies[i], static_cast<int>(i) + 1, 0, 0, 0);
  }
  line(ints.e_const, 0, 0, 0, 0);
  return out;
}

void write_fcidump(const MolecularIntegrals& ints, const std::filesystem::path& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << format_fcidump(ints);
}

MolecularIntegrals hubbard_dimer(double t, double u) {
  MolecularIntegrals ints(2, 2);
  ints.h(0, 1) = -t;
  ints.h(1, 0) = -t;
  ints.g_at(0, 0, 0, 0) = u;
  ints.g_at(1, 1, 1, 1) = u;
  return ints;
}

std::pair<CasPartition, MolecularIntegrals> build_cas(const MolecularIntegrals& ints,
                                                      const std::vector<int>& active_in) {
  ints.validate();
  const int n = ints.n_orb;
  std::set<int> active(active_in.begin(), active_in.end());
  if (active.size() != active_in.size()) throw ValidationError("active space lists an orbital twice");
  for (int a : active) {
    if (a < 0 || a >= n) throw ValidationError("active orbital index out of range");
  }

  CasPartition part;
  part.active.assign(active.begin(), active.end());
  const int n_docc = ints.n_elec / 2;
  for (int k = 0; k < n; ++k) {
    if (active.count(k)) continue;
    (k < n_docc ? part.core : part.virtuals).push_back(k);
  }
  const int n_act_elec = ints.n_elec - 2 * static_cast<int>(part.core.size());
  const int n_act = static_cast<int>(part.active.size());
  if (n_act_elec < 0) throw ValidationError("active electron count is negative");
  if (n_act_elec > 2 * n_act) throw ValidationError("core cannot be doubly occupied with this active space");

  part.v_core = Eigen::MatrixXd::Zero(n_act, n_act);
  for (int a = 0; a < n_act; ++a) {
    for (int b = 0; b < n_act; ++b) {
      const int i = part.active[static_cast<std::size_t>(a)];
      const int j = part.active[static_cast<std::size_t>(b)];
      double v = 0.0;
      for (int k : part.core) v += 2.0 * ints.chem(i, j, k, k) - ints.chem(i, k, k, j);
      part.v_core(a, b) = v;
    }
  }
  double e_core = 0.0;
  for (int k : part.core) {
    e_core += 2.0 * ints.h(k, k);
    for (int l : part.core) e_core += 2.0 * ints.chem(k, k, l, l) - ints.chem(k, l, l, k);
  }
  part.e_core = e_core;

  MolecularIntegrals cas(n_act, n_act_elec);
  cas.ms2 = ints.ms2;
  cas.restricted = ints.restricted;
  cas.e_const = ints.e_const + e_core;
  for (int a = 0; a < n_act; ++a) {
    for (int b = 0; b < n_act; ++b) {
      cas.h(a, b) = ints.h(part.active[static_cast<std::size_t>(a)], part.active[static_cast<std::size_t>(b)]) +
                    part.v_core(a, b);
      for (int c = 0; c < n_act; ++c) {
        for (int d = 0; d < n_act; ++d) {
          cas.g_at(a, b, c, d) =
              ints.g_at(part.active[static_cast<std::size_t>(a)], part.active[static_cast<std::size_t>(b)],
                        part.active[static_cast<std::size_t>(c)], part.active[static_cast<std::size_t>(d)]);
        }
      }
    }
  }
  if (!ints.orbital_energies.empty()) {
    for (int a : part.active) cas.orbital_energies.push_back(ints.orbital_energies[static_cast<std::size_t>(a)]);
  }
  return {std::move(part), std::move(cas)};
}

std::vector<int> frontier_active_space(const MolecularIntegrals& ints, int n_occupied, int n_virtual) {
  const int n_docc = ints.n_elec / 2;
  if (n_occupied < 0 || n_virtual < 0 || n_occupied > n_docc || n_docc + n_virtual > ints.n_orb) {
    throw ValidationError("frontier active space does not fit the orbital set");
  }
  std::vector<int> out;
  for (int k = n_docc - n_occupied; k < n_docc + n_virtual; ++k) out.push_back(k);
  return out;
}

FockMatrix fock_matrix(const MolecularIntegrals& ints) {
  ints.validate();
  if (ints.n_elec % 2 != 0) throw ValidationError("restricted Fock matrix needs an even electron count");
  const int n = ints.n_orb;
  const int n_docc = ints.n_elec / 2;
  FockMatrix f{ints.h};
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      double v = 0.0;
      for (int k = 0; k < n_docc; ++k) v += 2.0 * ints.chem(i, j, k, k) - ints.chem(i, k, k, j);
      f.f(i, j) += v;
    }
  }
  return f;
}

}  // namespace corrvec
