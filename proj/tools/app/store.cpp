#include "store.hpp"

#include <Eigen/Core>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "corrvec/errors.hpp"
#include "corrvec/vqe.hpp"

namespace corrvec::app {

using nlohmann::json;

std::string canonical_numeric_text(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  const std::size_t n = text.size();
  auto is_digit = [](char c) { return c >= '0' && c <= '9'; };
  auto ident = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; };
  while (i < n) {
    const char c = text[i];
    if (c == '"') {
      const std::size_t start = i++;
      while (i < n && text[i] != '"') i += text[i] == '\\' ? 2 : 1;
      i = std::min(i + 1, n);
      out.append(text, start, i - start);
      continue;
    }
    const bool starts_number =
        (is_digit(c) || ((c == '-' || c == '.') && i + 1 < n && (is_digit(text[i + 1]) || text[i + 1] == '.'))) &&
        (i == 0 || !ident(text[i - 1]));
    if (!starts_number) {
      out.push_back(c);
      ++i;
      continue;
    }
    std::size_t j = i;
    if (text[j] == '-') ++j;
    while (j < n && is_digit(text[j])) ++j;
    if (j < n && text[j] == '.') {
      ++j;
      while (j < n && is_digit(text[j])) ++j;
    }
    if (j < n && (text[j] == 'e' || text[j] == 'E')) {
      std::size_t k = j + 1;
      if (k < n && (text[k] == '+' || text[k] == '-')) ++k;
      if (k < n && is_digit(text[k])) {
        j = k;
        while (j < n && is_digit(text[j])) ++j;
      }
    }
    double v = std::strtod(text.substr(i, j - i).c_str(), nullptr);
    if (v == 0.0) v = 0.0;
    out += fmt::format("{:.12g}", v);
    i = j;
  }
  return out;
}

std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 failed");
  }
  std::string hex;
  for (unsigned int k = 0; k < len; ++k) hex += fmt::format("{:02x}", md[k]);
  return hex;
}

std::string numeric_digest(const std::string& text) { return sha256_hex(canonical_numeric_text(text)); }

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ParseError(fmt::format("cannot read {}", p.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void atomic_write(const fs::path& p, const std::string& content) {
  const fs::path tmp = p.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error(fmt::format("cannot write {}", tmp.string()));
    out << content;
    out.flush();
    if (!out) throw std::runtime_error(fmt::format("write to {} failed", tmp.string()));
  }
  fs::rename(tmp, p);
}

namespace {

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
double number_of(const json& j) { return j.is_null() ? std::nan("") : j.get<double>(); }

Branch parse_branch(const std::string& s) {
  if (s == "particle") return Branch::particle;
  if (s == "hole") return Branch::hole;
  throw ParseError("unknown branch " + s);
}

GridKind parse_grid_kind(const std::string& s) {
  if (s == "retarded") return GridKind::retarded;
  if (s == "matsubara") return GridKind::matsubara;
  throw ParseError("unknown grid kind " + s);
}

}  // namespace

std::string series_to_jsonl(const GreensSeries& s) {
  std::string out;
  const int d = s.dimension();
  for (std::size_t k = 0; k < s.size(); ++k) {
    json rec;
    rec["k"] = k;
    rec["kind"] = grid_kind_name(s.grid.kind);
    rec["eta"] = s.grid.eta;
    rec["z_re"] = s.grid.points[k].real();
    rec["z_im"] = s.grid.points[k].imag();
    rec["dim"] = d;
    json re = json::array(), im = json::array();
    for (int r = 0; r < d; ++r) {
      for (int c = 0; c < d; ++c) {
        re.push_back(number(s.g[k](r, c).real()));
        im.push_back(number(s.g[k](r, c).imag()));
      }
    }
    rec["g_re"] = re;
    rec["g_im"] = im;
    const bool valid = s.valid.empty() || s.valid[k];
    rec["valid"] = valid;
    rec["trace_spectrum"] = valid ? number(s.trace(k)) : json(nullptr);
    rec["error"] = k < s.point_errors.size() ? s.point_errors[k] : "";
    json res = json::array(), gre = json::array(), gim = json::array(), depth = json::array(), diag = json::array();
    if (k < s.diagnostics.size()) {
      for (const auto& p : s.diagnostics[k]) {
        res.push_back(number(p.residual));
        gre.push_back(number(p.gamma.real()));
        gim.push_back(number(p.gamma.imag()));
        depth.push_back(p.depth);
        diag.push_back({{"orbital", p.orbital},
                        {"branch", branch_name(p.branch)},
                        {"sweeps", p.sweeps},
                        {"converged", p.converged},
                        {"zero", p.zero},
                        {"refined", p.refined},
                        {"error", p.error}});
      }
    }
    rec["residuals"] = res;
    rec["gamma_re"] = gre;
    rec["gamma_im"] = gim;
    rec["depth"] = depth;
    rec["columns"] = diag;
    out += rec.dump();
    out += '\n';
  }
  return out;
}

GreensSeries series_from_jsonl(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<json> recs;
  try {
    while (std::getline(in, line)) {
      if (!line.empty()) recs.push_back(json::parse(line));
    }
  } catch (const json::exception& e) {
    throw ParseError(fmt::format("series line {}: {}", recs.size() + 1, e.what()));
  }
  if (recs.empty()) throw ParseError("series file has no records");
  try {
    FrequencyGrid grid;
    grid.kind = parse_grid_kind(recs.front().at("kind").get<std::string>());
    grid.eta = recs.front().at("eta").get<double>();
    for (const auto& r : recs) grid.points.emplace_back(r.at("z_re").get<double>(), r.at("z_im").get<double>());
    const int d = recs.front().at("dim").get<int>();
    GreensSeries s(grid, d);
    for (std::size_t k = 0; k < recs.size(); ++k) {
      const auto& r = recs[k];
      if (r.at("k").get<std::size_t>() != k) throw ParseError("series records out of order");
      if (r.at("dim").get<int>() != d) throw ParseError("series dimension changes between records");
      const auto& re = r.at("g_re");
      const auto& im = r.at("g_im");
      if (re.size() != static_cast<std::size_t>(d * d) || im.size() != re.size()) {
        throw ParseError("series record has the wrong number of elements");
      }
      for (int a = 0; a < d; ++a) {
        for (int b = 0; b < d; ++b) {
          s.g[k](a, b) = cplx(number_of(re[a * d + b]), number_of(im[a * d + b]));
        }
      }
      s.valid[k] = r.at("valid").get<bool>() ? 1 : 0;
      s.point_errors[k] = r.at("error").get<std::string>();
      const auto& cols = r.at("columns");
      for (std::size_t c = 0; c < cols.size(); ++c) {
        PointDiagnostic p;
        p.orbital = cols[c].at("orbital").get<int>();
        p.branch = parse_branch(cols[c].at("branch").get<std::string>());
        p.sweeps = cols[c].at("sweeps").get<int>();
        p.converged = cols[c].at("converged").get<bool>();
        p.zero = cols[c].at("zero").get<bool>();
        p.refined = cols[c].at("refined").get<bool>();
        p.error = cols[c].at("error").get<std::string>();
        p.residual = number_of(r.at("residuals").at(c));
        p.gamma = cplx(number_of(r.at("gamma_re").at(c)), number_of(r.at("gamma_im").at(c)));
        p.depth = r.at("depth").at(c).get<int>();
        s.diagnostics[k].push_back(p);
      }
    }
    return s;
  } catch (const json::exception& e) {
    throw ParseError(fmt::format("malformed series record: {}", e.what()));
  }
}

std::string series_to_csv(const GreensSeries& s) {
  std::string out = "z_re,z_im,trace_spectrum,spectral_function\n";
  for (std::size_t k = 0; k < s.size(); ++k) {
    const bool valid = s.valid.empty() || s.valid[k];
    const double t = valid ? s.trace(k) : std::nan("");
    out += fmt::format("{:.17g},{:.17g},{:.17g},{:.17g}\n", s.grid.points[k].real(), s.grid.points[k].imag(), t,
                       -t / M_PI);
  }
  return out;
}

json record_to_json(const PointRecord& r) {
  json col = json::array();
  for (const auto& c : r.column) col.push_back({number(c.real()), number(c.imag())});
  json theta = json::array();
  for (double t : r.solution.theta) theta.push_back(number(t));
  return {{"point", r.point},
          {"orbital", r.orbital},
          {"branch", branch_name(r.branch)},
          {"refined", r.refined},
          {"depth", r.solution.spec.depth},
          {"theta", theta},
          {"residual", number(r.solution.residual)},
          {"g", number(r.solution.g)},
          {"gamma", {number(r.solution.gamma.real()), number(r.solution.gamma.imag())}},
          {"sweeps", r.solution.sweeps},
          {"converged", r.solution.converged},
          {"zero", r.solution.zero},
          {"column", col},
          {"error", r.error}};
}

PointRecord record_from_json(const json& j, const std::vector<GateKind>& pattern, int width) {
  try {
    PointRecord r;
    r.point = j.at("point").get<int>();
    r.orbital = j.at("orbital").get<int>();
    r.branch = parse_branch(j.at("branch").get<std::string>());
    r.refined = j.at("refined").get<bool>();
    r.solution.spec.width = width;
    r.solution.spec.depth = j.at("depth").get<int>();
    r.solution.spec.pattern = pattern;
    for (const auto& t : j.at("theta")) r.solution.theta.push_back(number_of(t));
    r.solution.residual = number_of(j.at("residual"));
    r.solution.g = number_of(j.at("g"));
    r.solution.gamma = cplx(number_of(j.at("gamma").at(0)), number_of(j.at("gamma").at(1)));
    r.solution.sweeps = j.at("sweeps").get<int>();
    r.solution.converged = j.at("converged").get<bool>();
    r.solution.zero = j.at("zero").get<bool>();
    for (const auto& c : j.at("column")) r.column.emplace_back(number_of(c.at(0)), number_of(c.at(1)));
    r.error = j.at("error").get<std::string>();
    if (static_cast<int>(r.solution.theta.size()) != r.solution.spec.num_slots()) {
      throw ParseError("checkpoint angles do not match the ansatz");
    }
    return r;
  } catch (const json::exception& e) {
    throw ParseError(fmt::format("malformed checkpoint record: {}", e.what()));
  }
}

Manifest Manifest::load(const fs::path& dir) {
  const fs::path p = dir / kFileName;
  json j;
  try {
    j = json::parse(read_file(p));
  } catch (const json::exception& e) {
    throw ParseError(fmt::format("{}: {}", p.string(), e.what()));
  }
  Manifest m;
  try {
    m.config_ = j.at("config");
    for (const auto& [name, s] : j.at("stages").items()) {
      m.stages_[name] = {s.at("status").get<std::string>(), s.at("wall_seconds").get<double>(), s.value("detail", json::object())};
    }
    for (const auto& [name, f] : j.at("files").items()) {
      m.files_[name] = {f.at("sha256").get<std::string>(), f.at("bytes").get<std::uintmax_t>()};
    }
  } catch (const json::exception& e) {
    throw ParseError(fmt::format("{}: {}", p.string(), e.what()));
  }
  return m;
}

Manifest Manifest::load_or_empty(const fs::path& dir) {
  return fs::exists(dir / kFileName) ? load(dir) : Manifest{};
}

void Manifest::write_file(const fs::path& dir, const std::string& name, const std::string& content) {
  atomic_write(dir / name, content);
  files_[name] = {numeric_digest(content), content.size()};
}

json Manifest::to_json() const {
  json stages = json::object();
  for (const auto& [name, s] : stages_) {
    stages[name] = {{"status", s.status}, {"wall_seconds", s.wall_seconds}, {"detail", s.detail}};
  }
  json files = json::object();
  for (const auto& [name, f] : files_) files[name] = {{"sha256", f.sha256}, {"bytes", f.bytes}};
  return {{"format", "corrvec-manifest/1"},
          {"config", config_},
          {"stages", stages},
          {"files", files},
          {"digest", "sha256 of numeric text at 12 significant digits"},
          {"versions", version_info()}};
}

void Manifest::save(const fs::path& dir) const { atomic_write(dir / kFileName, to_json().dump(2) + "\n"); }

std::vector<std::string> Manifest::verify(const fs::path& dir) const {
  std::vector<std::string> problems;
  for (const auto& [name, f] : files_) {
    const fs::path p = dir / name;
    if (!fs::exists(p)) {
      problems.push_back(fmt::format("{} is missing", name));
      continue;
    }
    if (numeric_digest(read_file(p)) != f.sha256) problems.push_back(fmt::format("{} does not match its digest", name));
  }
  return problems;
}

json version_info() {
  return {{"corrvec", "0.1.0"},
          {"eigen", fmt::format("{}.{}.{}", EIGEN_WORLD_VERSION, EIGEN_MAJOR_VERSION, EIGEN_MINOR_VERSION)},
          {"nlohmann_json", fmt::format("{}.{}.{}", NLOHMANN_JSON_VERSION_MAJOR, NLOHMANN_JSON_VERSION_MINOR,
                                        NLOHMANN_JSON_VERSION_PATCH)},
          {"fmt", FMT_VERSION},
          {"compiler", __VERSION__}};
}

}  // namespace corrvec::app
