#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "corrvec/correction_vector.hpp"
#include "corrvec/errors.hpp"
#include "corrvec/greens.hpp"
#include "corrvec/oracle.hpp"
#include "store.hpp"

namespace corrvec::app {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

void note(const CommandOptions& o, const std::string& msg) {
  if (!o.quiet) fmt::print(stderr, "corrvec: {}\n", msg);
}

fs::path output_dir(const RunConfig& c) { return c.resolve(c.output); }

fs::path prepare_output(const RunConfig& c) {
  const fs::path dir = output_dir(c);
  fs::create_directories(dir);
  return dir;
}

std::string digest_of(const json& j) { return sha256_hex(j.dump()); }

json ground_key(const RunConfig& c) {
  const json j = c.to_json();
  json k;
  for (const char* f : {"hamiltonian", "active_space", "mu", "penalty", "vqe", "measurement", "noise", "e0_source"}) {
    if (j.contains(f)) k[f] = j[f];
  }
  return k;
}

json sweep_key(const RunConfig& c) {
  json k = ground_key(c);
  const json j = c.to_json();
  for (const char* f : {"grid", "ansatz", "optimizer", "restricted", "spin_blocks"}) k[f] = j[f];
  return k;
}

json pattern_json(const std::vector<GateKind>& p) {
  json a = json::array();
  for (auto g : p) a.push_back(gate_name(g));
  return a;
}

Estimator make_estimator(const RunConfig& c) { return Estimator(c.measurement, c.noise); }

std::vector<int> reference_occupation(const MolecularIntegrals& ints) {
  const int n_up = (ints.n_elec + ints.ms2) / 2;
  const int n_dn = (ints.n_elec - ints.ms2) / 2;
  if (n_up > ints.n_orb || n_dn > ints.n_orb || n_dn < 0) throw ValidationError("electron count does not fit the orbitals");
  std::vector<int> occ;
  for (int p = 0; p < n_up; ++p) occ.push_back(p);
  for (int p = 0; p < n_dn; ++p) occ.push_back(p + ints.n_orb);
  return occ;
}

json ground_json(const RunConfig& c, const System& sys, const GroundResult& g) {
  json theta = json::array();
  for (double t : g.theta) theta.push_back(t);
  return {{"config_digest", digest_of(ground_key(c))},
          {"e0", g.e0},
          {"e0_vqe", g.e0_vqe},
          {"e0_exact", g.e0_exact},
          {"e0_source", c.e0_source == E0Source::vqe ? "vqe" : "exact"},
          {"n_qubits", sys.width},
          {"n_electrons", sys.ints.n_elec},
          {"ansatz", {{"depth", g.spec.depth}, {"pattern", pattern_json(g.spec.pattern)}}},
          {"theta", theta},
          {"converged", g.trace.converged},
          {"iterations", g.trace.iterations},
          {"cost_history", g.trace.cost_history}};
}

void persist_ground(Manifest& m, const fs::path& dir, const RunConfig& c, const System& sys, const GroundResult& g,
                    double wall) {
  m.write_file(dir, "ground_state.json", ground_json(c, sys, g).dump(2) + "\n");
  m.write_file(dir, "ground_state.log", g.trace.to_log());
  m.set_stage("ground_state", {"ok", wall, {{"e0", g.e0}, {"e0_exact", g.e0_exact}, {"converged", g.trace.converged}}});
}

std::optional<GroundResult> load_ground(const RunConfig& c, const fs::path& dir) {
  const fs::path p = dir / "ground_state.json";
  if (!fs::exists(p)) return std::nullopt;
  const json j = json::parse(read_file(p), nullptr, false);
  if (j.is_discarded() || j.value("config_digest", "") != digest_of(ground_key(c))) return std::nullopt;
  GroundResult g;
  g.e0 = j.at("e0").get<double>();
  g.e0_vqe = j.at("e0_vqe").get<double>();
  g.e0_exact = j.at("e0_exact").get<double>();
  g.theta = j.at("theta").get<std::vector<double>>();
  g.spec.width = j.at("n_qubits").get<int>();
  g.spec.depth = j.at("ansatz").at("depth").get<int>();
  g.spec.pattern = c.vqe.ansatz.pattern;
  g.trace.converged = j.at("converged").get<bool>();
  g.trace.iterations = j.at("iterations").get<int>();
  g.trace.cost_history = j.at("cost_history").get<std::vector<double>>();
  g.trace.theta = g.theta;
  if (static_cast<int>(g.theta.size()) != g.spec.num_slots()) return std::nullopt;
  return g;
}

SweepOptions sweep_options(const RunConfig& c, int width) {
  SweepOptions s;
  s.spec.width = width;
  s.spec.depth = c.ansatz.depth;
  s.spec.pattern = c.ansatz.pattern;
  s.cv.eps = c.optimizer.eps;
  s.cv.residual = c.optimizer.residual;
  s.cv.max_sweeps = c.optimizer.max_sweeps;
  s.cv.stall_sweeps = c.optimizer.stall_sweeps;
  s.cv.stall_rel = c.optimizer.stall_rel;
  s.cv.max_depth = c.optimizer.max_depth;
  s.restricted = c.restricted;
  s.spin_blocks = c.spin_blocks;
  s.refine = c.optimizer.refine;
  s.refine_threshold = c.optimizer.refine_threshold;
  s.workers = worker_count();
  return s;
}

struct RecordKeyLess {
  bool operator()(const PointRecord& a, const PointRecord& b) const {
    return std::tuple(a.point, a.orbital, a.branch, a.refined) < std::tuple(b.point, b.orbital, b.branch, b.refined);
  }
};

constexpr const char* kCheckpoint = "sweep.checkpoint.jsonl";

std::string checkpoint_text(const std::string& digest, std::vector<PointRecord> records) {
  std::sort(records.begin(), records.end(), RecordKeyLess{});
  std::string out = json{{"config_digest", digest}, {"records", records.size()}}.dump() + "\n";
  for (const auto& r : records) out += record_to_json(r).dump() + "\n";
  return out;
}

std::vector<PointRecord> load_checkpoint(const fs::path& p, const std::string& digest, const SweepOptions& s) {
  if (!fs::exists(p)) return {};
  std::istringstream in(read_file(p));
  std::string line;
  if (!std::getline(in, line)) return {};
  const json head = json::parse(line, nullptr, false);
  if (head.is_discarded() || head.value("config_digest", "") != digest) {
    throw ConfigError(fmt::format("{} belongs to a different configuration; remove it or change the output directory",
                                  p.string()));
  }
  std::vector<PointRecord> records;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw ParseError(fmt::format("corrupt checkpoint record in {}", p.string()));
    records.push_back(record_from_json(j, s.spec.pattern, s.spec.width));
  }
  return records;
}

std::pair<std::size_t, std::size_t> converged_columns(const GreensSeries& s) {
  std::size_t good = 0, total = 0;
  for (const auto& point : s.diagnostics) {
    for (const auto& d : point) {
      ++total;
      if (d.error.empty() && (d.converged || d.zero)) ++good;
    }
  }
  return {good, total};
}

GreensSeries add_noise(GreensSeries s, double sigma, std::uint64_t seed) {
  if (sigma <= 0.0) return s;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, sigma);
  for (auto& g : s.g) {
    for (Eigen::Index r = 0; r < g.rows(); ++r) {
      for (Eigen::Index c = 0; c < g.cols(); ++c) g(r, c) += cplx(n(rng), n(rng));
    }
  }
  return s;
}

struct SpectrumDelta {
  double max_abs = 0.0;
  double max_off_peak = 0.0;
  std::size_t compared = 0;
};

SpectrumDelta spectrum_delta(const GreensSeries& a, const GreensSeries& b, const std::vector<Pole>& poles) {
  SpectrumDelta d;
  const double eta = a.grid.eta;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (!a.valid[k] || !b.valid[k]) continue;
    const double delta = std::abs(a.trace(k) - b.trace(k));
    ++d.compared;
    d.max_abs = std::max(d.max_abs, delta);
    bool off_peak = a.grid.kind == GridKind::retarded;
    for (const auto& p : poles) {
      if (std::abs(a.grid.points[k].real() - p.energy) <= 3.0 * eta) off_peak = false;
    }
    if (off_peak) d.max_off_peak = std::max(d.max_off_peak, delta);
  }
  return d;
}

json delta_json(const SpectrumDelta& d) {
  return {{"max_abs_spectrum_delta", d.max_abs}, {"max_off_peak_spectrum_delta", d.max_off_peak}, {"points_compared", d.compared}};
}

std::size_t invalid_count(const GreensSeries& s) { return s.size() - s.valid_count(); }

void write_series(Manifest& m, const fs::path& dir, const std::string& stem, const GreensSeries& s) {
  m.write_file(dir, stem + ".jsonl", series_to_jsonl(s));
  m.write_file(dir, stem + ".csv", series_to_csv(s));
}

}  // namespace

int worker_count() {
  int n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* cap = std::getenv("CORRVEC_MAX_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(cap, &end, 10);
    if (end == cap || *end != '\0' || v < 1) throw ConfigError("CORRVEC_MAX_WORKERS must be a positive integer");
    n = std::min<long>(n, v);
  }
  return n;
}

System load_system(const RunConfig& c) {
  System s;
  if (c.hamiltonian.fcidump) {
    const fs::path p = c.resolve(*c.hamiltonian.fcidump);
    if (!fs::exists(p)) throw ParseError(fmt::format("FCIDUMP {} does not exist", p.string()));
    s.full = read_fcidump(p);
  } else {
    s.full = hubbard_dimer(c.hamiltonian.hubbard_t, c.hamiltonian.hubbard_u);
  }
  s.ints = s.full;
  if (c.active_space) {
    std::vector<int> active = c.active_space->orbitals;
    if (active.empty()) active = frontier_active_space(s.full, c.active_space->occupied, c.active_space->virtuals);
    auto [part, ints] = build_cas(s.full, active);
    s.cas = std::move(part);
    s.ints = std::move(ints);
  }
  s.h = hamiltonian_to_qubits(s.ints, c.mu);
  s.width = s.h.width();
  if (s.width > kMaxDenseWidth) throw ValidationError(fmt::format("{} qubits exceed the simulator limit", s.width));
  s.occupied = reference_occupation(s.ints);
  return s;
}

GroundResult solve_ground(const RunConfig& c, const System& sys) {
  GroundResult g;
  g.spec.width = sys.width;
  g.spec.depth = c.vqe.ansatz.depth;
  g.spec.pattern = c.vqe.ansatz.pattern;
  const Estimator est = make_estimator(c);
  VqeOptions vo;
  vo.tol = c.vqe.tol;
  vo.max_sweeps = c.vqe.max_sweeps;
  vo.seed = c.measurement.seed;
  vo.occupied = sys.occupied;
  PauliSum cost = sys.h;
  if (c.penalty > 0.0) cost += number_penalty(sys.width, sys.ints.n_elec, c.penalty);
  const VqeResult r = vqe_ground_state(cost, g.spec, est, vo);
  g.theta = r.theta;
  g.trace = r.trace;
  g.e0_vqe = est.expectation(build_hea(g.spec), g.theta, sys.h, (std::uint64_t{1} << 40) + c.measurement.seed);
  g.e0_exact = exact_ground(sys.h, sys.ints.n_elec).energy;
  g.e0 = c.e0_source == E0Source::vqe ? g.e0_vqe : g.e0_exact;
  return g;
}

int cmd_ground_state(const RunConfig& c, const CommandOptions& o) {
  const auto t0 = Clock::now();
  const System sys = load_system(c);
  const GroundResult g = solve_ground(c, sys);
  const fs::path dir = prepare_output(c);
  Manifest m = Manifest::load_or_empty(dir);
  m.set_config(c.to_json());
  persist_ground(m, dir, c, sys, g, seconds_since(t0));
  m.save(dir);
  note(o, fmt::format("E0 = {:.10f} (exact {:.10f}, {} sweeps)", g.e0, g.e0_exact, g.trace.iterations));
  return g.trace.converged ? kExitOk : kExitConvergence;
}

int cmd_sweep(const RunConfig& c, const CommandOptions& o) {
  const auto t0 = Clock::now();
  const FrequencyGrid grid = c.grid.build();
  const System sys = load_system(c);
  const fs::path dir = prepare_output(c);
  Manifest m = Manifest::load_or_empty(dir);
  m.set_config(c.to_json());

  std::optional<GroundResult> ground = load_ground(c, dir);
  if (!ground) {
    const auto tg = Clock::now();
    ground = solve_ground(c, sys);
    persist_ground(m, dir, c, sys, *ground, seconds_since(tg));
    m.save(dir);
  }

  const Estimator est = make_estimator(c);
  GfProblem problem(sys.h, ground->e0, ground->spec, ground->theta, est, c.measurement.seed);
  problem.set_reference_occupation(sys.occupied);

  SweepOptions so = sweep_options(c, sys.width);
  so.stop_after = o.stop_after;
  const std::string digest = digest_of(sweep_key(c));
  const fs::path ckpt = dir / kCheckpoint;
  std::vector<PointRecord> records = load_checkpoint(ckpt, digest, so);
  if (!records.empty()) note(o, fmt::format("resuming with {} solved points", records.size()));

  std::mutex mu;
  auto last_flush = Clock::now();
  const RecordSink sink = [&](const PointRecord& r) {
    std::lock_guard<std::mutex> lock(mu);
    records.push_back(r);
    if (seconds_since(last_flush) > 1.0) {
      atomic_write(ckpt, checkpoint_text(digest, records));
      last_flush = Clock::now();
    }
  };
  const std::vector<PointRecord> prior = records;
  const SweepState st = run_gf_sweep(problem, grid, so, prior, sink);
  m.write_file(dir, kCheckpoint, checkpoint_text(digest, st.records));

  if (!st.complete) {
    m.set_stage("sweep", {"partial", seconds_since(t0), {{"records", st.records.size()}}});
    m.save(dir);
    note(o, fmt::format("stopped after {} records; rerun to resume", st.records.size()));
    return kExitOk;
  }

  const GreensSeries s = assemble_series(grid, sys.width, so, st.records);
  write_series(m, dir, "series", s);
  const auto [good, total] = converged_columns(s);
  const double fraction = total ? static_cast<double>(good) / static_cast<double>(total) : 1.0;
  const bool ok = fraction >= c.success_fraction && s.valid_count() * 1.0 >= c.success_fraction * s.size();
  m.set_stage("sweep", {ok ? "ok" : "convergence_budget", seconds_since(t0),
                        {{"points", s.size()},
                         {"valid_points", s.valid_count()},
                         {"converged_columns", good},
                         {"total_columns", total},
                         {"converged_fraction", fraction},
                         {"e0", ground->e0}}});
  m.save(dir);
  note(o, fmt::format("sweep finished: {}/{} columns converged", good, total));
  return ok ? kExitOk : kExitConvergence;
}

int cmd_oracle(const RunConfig& c, const CommandOptions& o) {
  const auto t0 = Clock::now();
  const FrequencyGrid grid = c.grid.build();
  const System sys = load_system(c);
  const int sector = c.sector.value_or(sys.ints.n_elec);
  if (sector > sys.width) throw ConfigError("sector exceeds the number of spin-orbitals");
  const GroundState gs = exact_ground(sys.h, sector);
  std::vector<int> orbitals(sys.width);
  for (int q = 0; q < sys.width; ++q) orbitals[q] = q;
  const LehmannOracle oracle(sys.h, gs.energy, gs.psi, orbitals);
  const GreensSeries s = oracle_series(oracle, grid);

  json poles = json::array();
  for (const auto& p : oracle.poles()) poles.push_back({{"energy", p.energy}, {"weight", p.weight}, {"branch", branch_name(p.branch)}});
  const fs::path dir = prepare_output(c);
  Manifest m = Manifest::load_or_empty(dir);
  m.set_config(c.to_json());
  write_series(m, dir, "oracle", s);
  m.write_file(dir, "oracle_poles.json",
               json{{"e0", gs.energy}, {"sector", sector}, {"degeneracy", gs.degeneracy}, {"mu", c.mu}, {"poles", poles}}.dump(2) +
                   "\n");
  m.set_stage("oracle", {"ok", seconds_since(t0), {{"e0", gs.energy}, {"sector", sector}}});
  m.save(dir);
  note(o, fmt::format("oracle E0 = {:.10f} in sector N = {}", gs.energy, sector));
  return kExitOk;
}

int cmd_embed(const RunConfig& c, const CommandOptions& o) {
  const auto t0 = Clock::now();
  if (c.embedding == EmbeddingMode::none) throw ConfigError("embed needs embedding = dyson, nondyson or both");
  const FrequencyGrid grid = c.grid.build();
  const System sys = load_system(c);
  const fs::path dir = output_dir(c);

  GreensSeries cas;
  if (c.embed.source == CasSource::sweep) {
    const fs::path p = dir / "series.jsonl";
    if (!fs::exists(p)) throw ParseError(fmt::format("{} not found; run the sweep first", p.string()));
    cas = series_from_jsonl(read_file(p));
    if (cas.dimension() != sys.width) throw ParseError("stored CAS series does not match the active space");
  } else {
    const GroundState gs = exact_ground(sys.h, sys.ints.n_elec);
    std::vector<int> orbitals(sys.width);
    for (int q = 0; q < sys.width; ++q) orbitals[q] = q;
    cas = oracle_series(LehmannOracle(sys.h, gs.energy, gs.psi, orbitals), grid);
  }
  cas = add_noise(std::move(cas), c.embed.noise_sigma, c.embed.noise_seed);

  const Eigen::MatrixXd f = spin_orbital_fock(fock_matrix(sys.full));
  const std::vector<int> idx = cas_spin_orbitals(sys.cas->active, sys.full.n_orb);

  std::optional<GreensSeries> reference;
  std::vector<Pole> poles;
  const int full_width = 2 * sys.full.n_orb;
  if (full_width <= kMaxDenseWidth) {
    const PauliSum hf = hamiltonian_to_qubits(sys.full, c.mu);
    const GroundState gs = exact_ground(hf, sys.full.n_elec);
    std::vector<int> orbitals(full_width);
    for (int q = 0; q < full_width; ++q) orbitals[q] = q;
    const LehmannOracle oracle(hf, gs.energy, gs.psi, orbitals);
    poles = oracle.poles(1e-3);
    reference = oracle_series(oracle, cas.grid);
  }

  fs::create_directories(dir);
  Manifest m = Manifest::load_or_empty(dir);
  m.set_config(c.to_json());
  json report = {{"cas_source", c.embed.source == CasSource::sweep ? "sweep" : "oracle"},
                 {"noise_sigma", c.embed.noise_sigma},
                 {"modes", json::object()}};
  std::optional<GreensSeries> dyson, nondyson;
  if (c.embedding == EmbeddingMode::dyson || c.embedding == EmbeddingMode::both) dyson = dyson_embed(cas, f, idx);
  if (c.embedding == EmbeddingMode::nondyson || c.embedding == EmbeddingMode::both) nondyson = nondyson_embed(cas, f, idx);
  for (const auto& [name, s] : {std::pair{"dyson", &dyson}, std::pair{"nondyson", &nondyson}}) {
    if (!*s) continue;
    write_series(m, dir, std::string("embed_") + name, **s);
    json entry = {{"singular_points", invalid_count(**s)}};
    if (reference) entry["vs_full_oracle"] = delta_json(spectrum_delta(**s, *reference, poles));
    report["modes"][name] = entry;
  }
  if (dyson && nondyson) report["dyson_vs_nondyson"] = delta_json(spectrum_delta(*dyson, *nondyson, poles));
  if (reference) write_series(m, dir, "oracle_full", *reference);
  m.write_file(dir, "embed_report.json", report.dump(2) + "\n");
  m.set_stage("embed", {"ok", seconds_since(t0), report});
  m.save(dir);
  note(o, "embedding written");
  return kExitOk;
}

int cmd_noise_scan(const RunConfig& c, const CommandOptions& o) {
  const auto t0 = Clock::now();
  if (c.noise_scan.p2.empty()) throw ConfigError("noise_scan.p2 must list at least one strength");
  const System sys = load_system(c);
  RunConfig exact_cfg = c;
  exact_cfg.noise.enabled = false;
  const GroundResult ref = solve_ground(exact_cfg, sys);
  const Circuit circ = build_hea(ref.spec);
  const std::uint64_t task = (std::uint64_t{1} << 41) + c.measurement.seed;

  auto energy_at = [&](double p2, bool zne) {
    NoiseModel nm = c.noise;
    nm.enabled = p2 > 0.0;
    nm.p2 = p2;
    nm.zne = zne;
    if (!c.noise_scan.reoptimize || !nm.enabled) {
      return Estimator(c.measurement, nm).expectation(circ, ref.theta, sys.h, task);
    }
    RunConfig rc = c;
    rc.noise = nm;
    return solve_ground(rc, sys).e0_vqe;
  };

  std::string csv = "p2,energy_raw,energy_zne,error_raw,error_zne\n";
  json rows = json::array();
  for (double p2 : c.noise_scan.p2) {
    const double raw = energy_at(p2, false);
    const double zne = energy_at(p2, true);
    csv += fmt::format("{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", p2, raw, zne, raw - ref.e0_vqe, zne - ref.e0_vqe);
    rows.push_back({{"p2", p2}, {"energy_raw", raw}, {"energy_zne", zne}});
  }
  const fs::path dir = prepare_output(c);
  Manifest m = Manifest::load_or_empty(dir);
  m.set_config(c.to_json());
  m.write_file(dir, "noise_scan.csv", csv);
  const json out = {{"e0_noiseless", ref.e0_vqe}, {"e0_exact", ref.e0_exact}, {"boost", c.noise.boost}, {"levels", rows}};
  m.write_file(dir, "noise_scan.json", out.dump(2) + "\n");
  m.set_stage("noise_scan", {"ok", seconds_since(t0), {{"levels", rows.size()}}});
  m.save(dir);
  note(o, fmt::format("noise scan over {} strengths written", rows.size()));
  return kExitOk;
}

int cmd_compare(const CommandOptions& o) {
  if (o.inputs.size() != 2) throw ConfigError("compare needs exactly two series files");
  std::vector<GreensSeries> s;
  for (const auto& in : o.inputs) {
    const fs::path p(in);
    if (!fs::exists(p)) throw ParseError(fmt::format("{} does not exist", in));
    const std::string text = read_file(p);
    if (!o.force) {
      const fs::path dir = p.parent_path().empty() ? fs::path(".") : p.parent_path();
      if (!fs::exists(dir / Manifest::kFileName)) throw ParseError(fmt::format("{} has no manifest (use --force)", in));
      const Manifest m = Manifest::load(dir);
      const auto it = m.files().find(p.filename().string());
      if (it == m.files().end()) throw ParseError(fmt::format("{} is not listed in its manifest (use --force)", in));
      if (it->second.sha256 != numeric_digest(text)) {
        throw ParseError(fmt::format("{} does not match its manifest digest (use --force)", in));
      }
    }
    s.push_back(series_from_jsonl(text));
  }
  const auto& a = s[0];
  const auto& b = s[1];
  if (a.size() != b.size() || a.dimension() != b.dimension() || a.grid.kind != b.grid.kind) {
    throw CompareFailure(fmt::format("grids are not aligned ({} x {} vs {} x {})", a.size(), a.dimension(), b.size(),
                                     b.dimension()));
  }
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (std::abs(a.grid.points[k] - b.grid.points[k]) > 1e-12 * std::max(1.0, std::abs(a.grid.points[k]))) {
      throw CompareFailure(fmt::format("grids are not aligned at point {}", k));
    }
  }
  double max_t = 0.0, sum_t = 0.0, max_g = 0.0, sum_g = 0.0;
  std::size_t n = 0;
  int worst = -1;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (!a.valid[k] || !b.valid[k]) continue;
    const double dt = std::abs(a.trace(k) - b.trace(k));
    const double dg = (a.g[k] - b.g[k]).cwiseAbs().maxCoeff();
    max_t = std::max(max_t, dt);
    sum_t += dt;
    if (dg > max_g) worst = static_cast<int>(k);
    max_g = std::max(max_g, dg);
    sum_g += (a.g[k] - b.g[k]).cwiseAbs().mean();
    ++n;
  }
  const json report = {{"points_compared", n},
                       {"points_skipped", a.size() - n},
                       {"max_abs_trace_delta", max_t},
                       {"mean_abs_trace_delta", n ? sum_t / n : 0.0},
                       {"max_abs_element_delta", max_g},
                       {"mean_abs_element_delta", n ? sum_g / n : 0.0},
                       {"worst_point", worst},
                       {"tolerance", o.tol}};
  std::cout << report.dump(2) << "\n";
  if (o.out) {
    const fs::path dir(*o.out);
    fs::create_directories(dir);
    Manifest m = Manifest::load_or_empty(dir);
    m.write_file(dir, "compare_report.json", report.dump(2) + "\n");
    m.set_stage("compare", {o.tol > 0.0 && max_g > o.tol ? "failed" : "ok", 0.0, report});
    m.save(dir);
  }
  if (o.tol > 0.0 && max_g > o.tol) {
    note(o, fmt::format("max |dG| = {:.6g} exceeds tolerance {:.6g}", max_g, o.tol));
    return kExitCompare;
  }
  return kExitOk;
}

int run_command(const std::string& name, const CommandOptions& o) {
  try {
    if (name == "compare") return cmd_compare(o);
    RunConfig c = RunConfig::load(o.config_path);
    if (o.seed) c.measurement.seed = *o.seed;
    if (o.out) {
      c.output = fs::absolute(*o.out).string();
    }
    c.validate();
    if (name == "ground-state") return cmd_ground_state(c, o);
    if (name == "sweep") return cmd_sweep(c, o);
    if (name == "embed") return cmd_embed(c, o);
    if (name == "oracle") return cmd_oracle(c, o);
    if (name == "noise-scan") return cmd_noise_scan(c, o);
    throw ConfigError("unknown command " + name);
  } catch (const ConfigError& e) {
    fmt::print(stderr, "corrvec: config error: {}\n", e.what());
    return kExitConfig;
  } catch (const ValidationError& e) {
    fmt::print(stderr, "corrvec: invalid input: {}\n", e.what());
    return kExitConfig;
  } catch (const ParseError& e) {
    fmt::print(stderr, "corrvec: ingestion error: {}\n", e.what());
    return kExitIngestion;
  } catch (const CompareFailure& e) {
    fmt::print(stderr, "corrvec: comparison failed: {}\n", e.what());
    return kExitCompare;
  } catch (const std::exception& e) {
    fmt::print(stderr, "corrvec: error: {}\n", e.what());
    return kExitOther;
  }
}

}  // namespace corrvec::app
