#include "config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "corrvec/errors.hpp"

namespace corrvec::app {

using nlohmann::json;

namespace {

// Strict reader: every key must be consumed, types must match.
class Reader {
 public:
  Reader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(fmt::format("{} must be an object", where_));
  }
  ~Reader() noexcept(false) {
    if (std::uncaught_exceptions()) return;
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError(fmt::format("unknown key '{}' in {}", it.key(), where_));
    }
  }

  bool has(const std::string& k) const { return j_.contains(k); }
  const json& raw(const std::string& k) {
    seen_.insert(k);
    return j_.at(k);
  }
  std::string path(const std::string& k) const { return where_ + "." + k; }

  template <class T>
  void get(const std::string& k, T& out) {
    if (!has(k)) return;
    out = convert<T>(raw(k), path(k));
  }

  template <class T>
  static T convert(const json& v, const std::string& where) {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError(where + " must be a boolean");
      return v.get<bool>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw ConfigError(where + " must be an integer");
      if constexpr (std::is_unsigned_v<T>) {
        if (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0) {
          throw ConfigError(where + " must be non-negative");
        }
      }
      return v.get<T>();
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw ConfigError(where + " must be a number");
      return v.get<T>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError(where + " must be a string");
      return v.get<std::string>();
    } else {
      if (!v.is_array()) throw ConfigError(where + " must be an array");
      T out;
      for (std::size_t i = 0; i < v.size(); ++i) {
        out.push_back(convert<typename T::value_type>(v[i], fmt::format("{}[{}]", where, i)));
      }
      return out;
    }
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

template <class E>
E parse_enum(const std::string& s, const std::vector<std::pair<const char*, E>>& table, const std::string& where) {
  for (const auto& [name, v] : table) {
    if (s == name) return v;
  }
  std::string names;
  for (const auto& [name, v] : table) names += std::string(names.empty() ? "" : ", ") + name;
  throw ConfigError(fmt::format("{} must be one of: {}", where, names));
}

template <class E>
const char* enum_name(E v, const std::vector<std::pair<const char*, E>>& table) {
  for (const auto& [name, e] : table) {
    if (e == v) return name;
  }
  return "?";
}

const std::vector<std::pair<const char*, GridKind>> kGridKinds{{"retarded", GridKind::retarded},
                                                               {"matsubara", GridKind::matsubara}};
const std::vector<std::pair<const char*, ResidualKind>> kResiduals{{"v_norm", ResidualKind::v_norm},
                                                                   {"reconstruction", ResidualKind::reconstruction}};
const std::vector<std::pair<const char*, EmbeddingMode>> kEmbeddings{{"none", EmbeddingMode::none},
                                                                     {"dyson", EmbeddingMode::dyson},
                                                                     {"nondyson", EmbeddingMode::nondyson},
                                                                     {"both", EmbeddingMode::both}};
const std::vector<std::pair<const char*, E0Source>> kE0{{"vqe", E0Source::vqe}, {"exact", E0Source::exact}};
const std::vector<std::pair<const char*, CasSource>> kCas{{"sweep", CasSource::sweep}, {"oracle", CasSource::oracle}};
const std::vector<std::pair<const char*, MeasureMode>> kModes{{"exact", MeasureMode::exact},
                                                              {"sampled", MeasureMode::sampled}};
const std::vector<std::pair<const char*, GateKind>> kRotations{{"RX", GateKind::Rx}, {"RY", GateKind::Ry}, {"RZ", GateKind::Rz}};

AnsatzConfig read_ansatz(const json& j, const std::string& where) {
  AnsatzConfig a;
  Reader r(j, where);
  r.get("depth", a.depth);
  if (r.has("pattern")) {
    const auto names = Reader::convert<std::vector<std::string>>(r.raw("pattern"), r.path("pattern"));
    a.pattern.clear();
    for (const auto& n : names) a.pattern.push_back(parse_enum(n, kRotations, r.path("pattern")));
  }
  return a;
}

json write_ansatz(const AnsatzConfig& a) {
  json p = json::array();
  for (auto k : a.pattern) p.push_back(enum_name(k, kRotations));
  return {{"depth", a.depth}, {"pattern", p}};
}

}  // namespace

const char* embedding_name(EmbeddingMode m) { return enum_name(m, kEmbeddings); }

FrequencyGrid GridSpec::build() const {
  try {
    return kind == GridKind::retarded ? retarded_grid(w_min, w_max, points, eta) : matsubara_grid(w_max, points);
  } catch (const ValidationError& e) {
    throw ConfigError(std::string("grid: ") + e.what());
  }
}

std::filesystem::path RunConfig::resolve(const std::string& p) const {
  const std::filesystem::path path(p);
  return path.is_absolute() || base_dir.empty() ? path : base_dir / path;
}

void RunConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError(m); };
  if (hamiltonian.fcidump && hamiltonian.fcidump->empty()) fail("hamiltonian.fcidump must not be empty");
  if (active_space) {
    if (active_space->orbitals.empty() && active_space->occupied + active_space->virtuals <= 0) {
      fail("active_space needs orbitals or a frontier selection");
    }
    if (active_space->occupied < 0 || active_space->virtuals < 0) fail("active_space counts must be non-negative");
  }
  if (embedding != EmbeddingMode::none && !active_space) fail("embedding requires an active_space");
  if (penalty < 0.0) fail("penalty must be non-negative");
  if (sector && *sector < 0) fail("sector must be non-negative");
  if (grid.points < 1) fail("grid.points must be at least 1");
  if (grid.kind == GridKind::retarded && !(grid.eta > 0.0)) fail("grid.eta must be positive");
  if (grid.kind == GridKind::retarded && grid.w_max < grid.w_min) fail("grid range is reversed");
  if (grid.kind == GridKind::matsubara && !(grid.w_max > 0.0)) fail("grid.w_max must be positive");
  for (const auto* a : {&ansatz, &vqe.ansatz}) {
    if (a->depth < 1) fail("ansatz depth must be at least 1");
    if (a->pattern.empty()) fail("ansatz pattern must not be empty");
  }
  if (!(vqe.tol > 0.0) || vqe.max_sweeps < 1) fail("vqe tol and max_sweeps must be positive");
  if (!(optimizer.eps > 0.0)) fail("optimizer.eps must be positive");
  if (optimizer.max_sweeps < 1 || optimizer.stall_sweeps < 1) fail("optimizer sweep counts must be positive");
  if (optimizer.stall_rel < 0.0 || optimizer.refine_threshold <= 0.0) fail("optimizer thresholds out of range");
  if (optimizer.max_depth != 0 && optimizer.max_depth < ansatz.depth) fail("optimizer.max_depth is below ansatz.depth");
  if (measurement.shots == 0) fail("measurement.shots must be positive");
  try {
    noise.validate();
  } catch (const std::exception& e) {
    fail(std::string("noise: ") + e.what());
  }
  if (embed.noise_sigma < 0.0) fail("embed.noise_sigma must be non-negative");
  for (double p : noise_scan.p2) {
    if (!(p >= 0.0) || p * noise.boost > 15.0 / 16.0) fail("noise_scan.p2 entries must lie in [0, 15/16 / boost]");
  }
  if (!(success_fraction >= 0.0 && success_fraction <= 1.0)) fail("success_fraction must lie in [0, 1]");
  if (output.empty()) fail("output must not be empty");
}

json RunConfig::to_json() const {
  json h = json::object();
  if (hamiltonian.fcidump) {
    h["fcidump"] = *hamiltonian.fcidump;
  } else {
    h["hubbard"] = {{"t", hamiltonian.hubbard_t}, {"u", hamiltonian.hubbard_u}};
  }
  json j;
  j["hamiltonian"] = h;
  if (active_space) {
    j["active_space"] = {{"orbitals", active_space->orbitals},
                         {"occupied", active_space->occupied},
                         {"virtual", active_space->virtuals}};
  }
  j["mu"] = mu;
  j["penalty"] = penalty;
  if (sector) j["sector"] = *sector;
  j["grid"] = {{"kind", enum_name(grid.kind, kGridKinds)},
               {"w_min", grid.w_min},
               {"w_max", grid.w_max},
               {"points", grid.points},
               {"eta", grid.eta}};
  j["ansatz"] = write_ansatz(ansatz);
  j["vqe"] = {{"ansatz", write_ansatz(vqe.ansatz)}, {"tol", vqe.tol}, {"max_sweeps", vqe.max_sweeps}};
  j["optimizer"] = {{"eps", optimizer.eps},
                    {"residual", enum_name(optimizer.residual, kResiduals)},
                    {"max_sweeps", optimizer.max_sweeps},
                    {"stall_sweeps", optimizer.stall_sweeps},
                    {"stall_rel", optimizer.stall_rel},
                    {"max_depth", optimizer.max_depth},
                    {"refine", optimizer.refine},
                    {"refine_threshold", optimizer.refine_threshold}};
  j["measurement"] = {{"mode", enum_name(measurement.mode, kModes)},
                      {"shots", measurement.shots},
                      {"seed", measurement.seed}};
  j["noise"] = {{"enabled", noise.enabled}, {"p2", noise.p2}, {"boost", noise.boost}, {"zne", noise.zne}};
  j["embedding"] = embedding_name(embedding);
  j["embed"] = {{"source", enum_name(embed.source, kCas)},
                {"noise_sigma", embed.noise_sigma},
                {"noise_seed", embed.noise_seed}};
  j["e0_source"] = enum_name(e0_source, kE0);
  j["restricted"] = restricted;
  j["spin_blocks"] = spin_blocks;
  j["noise_scan"] = {{"p2", noise_scan.p2}, {"reoptimize", noise_scan.reoptimize}};
  j["success_fraction"] = success_fraction;
  j["output"] = output;
  return j;
}

RunConfig RunConfig::from_json(const json& j, const std::filesystem::path& base_dir) {
  RunConfig c;
  c.base_dir = base_dir;
  {
    Reader r(j, "config");
    if (!r.has("hamiltonian")) throw ConfigError("config.hamiltonian is required");
    {
      Reader h(r.raw("hamiltonian"), "hamiltonian");
      if (h.has("fcidump") == h.has("hubbard")) throw ConfigError("hamiltonian needs exactly one of fcidump, hubbard");
      if (h.has("fcidump")) {
        std::string p;
        h.get("fcidump", p);
        c.hamiltonian.fcidump = p;
      } else {
        Reader hb(h.raw("hubbard"), "hamiltonian.hubbard");
        hb.get("t", c.hamiltonian.hubbard_t);
        hb.get("u", c.hamiltonian.hubbard_u);
      }
    }
    if (r.has("active_space")) {
      Reader a(r.raw("active_space"), "active_space");
      ActiveSpaceSpec as;
      a.get("orbitals", as.orbitals);
      a.get("occupied", as.occupied);
      a.get("virtual", as.virtuals);
      c.active_space = as;
    }
    r.get("mu", c.mu);
    r.get("penalty", c.penalty);
    if (r.has("sector")) {
      int s = 0;
      r.get("sector", s);
      c.sector = s;
    }
    if (r.has("grid")) {
      Reader g(r.raw("grid"), "grid");
      std::string kind = "retarded";
      g.get("kind", kind);
      c.grid.kind = parse_enum(kind, kGridKinds, "grid.kind");
      if (c.grid.kind == GridKind::matsubara) c.grid.w_max = 10.0, c.grid.points = 64;
      g.get("w_min", c.grid.w_min);
      g.get("w_max", c.grid.w_max);
      g.get("points", c.grid.points);
      g.get("eta", c.grid.eta);
    }
    if (r.has("ansatz")) c.ansatz = read_ansatz(r.raw("ansatz"), "ansatz");
    if (r.has("vqe")) {
      Reader v(r.raw("vqe"), "vqe");
      if (v.has("ansatz")) c.vqe.ansatz = read_ansatz(v.raw("ansatz"), "vqe.ansatz");
      v.get("tol", c.vqe.tol);
      v.get("max_sweeps", c.vqe.max_sweeps);
    }
    if (r.has("optimizer")) {
      Reader o(r.raw("optimizer"), "optimizer");
      o.get("eps", c.optimizer.eps);
      if (o.has("residual")) {
        c.optimizer.residual =
            parse_enum(Reader::convert<std::string>(o.raw("residual"), "optimizer.residual"), kResiduals, "optimizer.residual");
      }
      o.get("max_sweeps", c.optimizer.max_sweeps);
      o.get("stall_sweeps", c.optimizer.stall_sweeps);
      o.get("stall_rel", c.optimizer.stall_rel);
      o.get("max_depth", c.optimizer.max_depth);
      o.get("refine", c.optimizer.refine);
      o.get("refine_threshold", c.optimizer.refine_threshold);
    }
    if (r.has("measurement")) {
      Reader m(r.raw("measurement"), "measurement");
      if (m.has("mode")) {
        c.measurement.mode = parse_enum(Reader::convert<std::string>(m.raw("mode"), "measurement.mode"), kModes, "measurement.mode");
      }
      m.get("shots", c.measurement.shots);
      m.get("seed", c.measurement.seed);
    }
    if (r.has("noise")) {
      Reader n(r.raw("noise"), "noise");
      n.get("enabled", c.noise.enabled);
      n.get("p2", c.noise.p2);
      n.get("boost", c.noise.boost);
      n.get("zne", c.noise.zne);
    }
    if (r.has("embedding")) {
      c.embedding = parse_enum(Reader::convert<std::string>(r.raw("embedding"), "embedding"), kEmbeddings, "embedding");
    }
    if (r.has("embed")) {
      Reader e(r.raw("embed"), "embed");
      if (e.has("source")) {
        c.embed.source = parse_enum(Reader::convert<std::string>(e.raw("source"), "embed.source"), kCas, "embed.source");
      }
      e.get("noise_sigma", c.embed.noise_sigma);
      e.get("noise_seed", c.embed.noise_seed);
    }
    if (r.has("e0_source")) {
      c.e0_source = parse_enum(Reader::convert<std::string>(r.raw("e0_source"), "e0_source"), kE0, "e0_source");
    }
    r.get("restricted", c.restricted);
    r.get("spin_blocks", c.spin_blocks);
    if (r.has("noise_scan")) {
      Reader n(r.raw("noise_scan"), "noise_scan");
      n.get("p2", c.noise_scan.p2);
      n.get("reoptimize", c.noise_scan.reoptimize);
    }
    r.get("success_fraction", c.success_fraction);
    r.get("output", c.output);
  }
  c.validate();
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError(fmt::format("cannot open config file {}", file.string()));
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("config is not valid JSON: {}", e.what()));
  }
  return from_json(j, file.parent_path());
}

}  // namespace corrvec::app
