#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "app/commands.hpp"
#include "app/config.hpp"
#include "app/store.hpp"
#include "corrvec/errors.hpp"
#include "corrvec/oracle.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;
using namespace corrvec;
using namespace corrvec::app;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("corrvec_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write_config(const fs::path& dir, json j) {
  const fs::path p = dir / "run.json";
  std::ofstream(p) << j.dump(2);
  return p;
}

int run(const std::string& cmd, const fs::path& cfg, long stop_after = -1) {
  CommandOptions o;
  o.config_path = cfg.string();
  o.stop_after = stop_after;
  o.quiet = true;
  return run_command(cmd, o);
}

json dimer_config(double u, const std::string& out) {
  return {{"hamiltonian", {{"hubbard", {{"t", 1.0}, {"u", u}}}}},
          {"grid", {{"kind", "retarded"}, {"w_min", -3.0}, {"w_max", 7.0}, {"points", 6}, {"eta", 0.1}}},
          {"optimizer", {{"eps", 1e-4}}},
          {"penalty", 1.0},
          {"output", out}};
}

json read_json(const fs::path& p) { return json::parse(read_file(p)); }

}  // namespace

TEST(Config, RoundTripIsIdentity) {
  RunConfig c;
  c.hamiltonian.fcidump = "lih.fcidump";
  c.active_space = ActiveSpaceSpec{{1, 2}, 0, 0};
  c.embedding = EmbeddingMode::both;
  c.grid.kind = GridKind::matsubara;
  c.grid.w_max = 10.0;
  c.grid.points = 64;
  c.noise.enabled = true;
  c.measurement.mode = MeasureMode::sampled;
  c.noise_scan.p2 = {0.0, 1e-3};
  c.ansatz.pattern = {GateKind::Rx, GateKind::Ry, GateKind::Rz};
  const json j = c.to_json();
  const RunConfig back = RunConfig::from_json(j);
  EXPECT_EQ(back.to_json(), j);
  EXPECT_EQ(RunConfig::from_json(json::parse(j.dump())).to_json().dump(), j.dump());
}

TEST(Config, DefaultsFillMissingKeys) {
  const RunConfig c = RunConfig::from_json({{"hamiltonian", {{"hubbard", {{"t", 1.0}, {"u", 4.0}}}}}});
  EXPECT_EQ(c.grid.points, 101);
  EXPECT_EQ(c.optimizer.residual, ResidualKind::reconstruction);
  EXPECT_EQ(c.embedding, EmbeddingMode::none);
}

TEST(Config, RejectsUnknownKeys) {
  const json base = {{"hamiltonian", {{"hubbard", {{"t", 1.0}, {"u", 4.0}}}}}};
  json top = base;
  top["gird"] = json::object();
  EXPECT_THROW(RunConfig::from_json(top), ConfigError);
  json nested = base;
  nested["optimizer"] = {{"epsilon", 0.1}};
  EXPECT_THROW(RunConfig::from_json(nested), ConfigError);
  json deep = base;
  deep["hamiltonian"]["hubbard"]["v"] = 1.0;
  EXPECT_THROW(RunConfig::from_json(deep), ConfigError);
}

TEST(Config, RejectsInconsistentValues) {
  const json base = {{"hamiltonian", {{"hubbard", {{"t", 1.0}, {"u", 4.0}}}}}};
  json emb = base;
  emb["embedding"] = "dyson";
  EXPECT_THROW(RunConfig::from_json(emb), ConfigError);
  json grid = base;
  grid["grid"] = {{"points", 0}};
  EXPECT_THROW(RunConfig::from_json(grid), ConfigError);
  json type = base;
  type["grid"] = {{"points", "many"}};
  EXPECT_THROW(RunConfig::from_json(type), ConfigError);
  json both = base;
  both["hamiltonian"]["fcidump"] = "x";
  EXPECT_THROW(RunConfig::from_json(both), ConfigError);
  json pattern = base;
  pattern["ansatz"] = {{"pattern", {"RY", "CNOT"}}};
  EXPECT_THROW(RunConfig::from_json(pattern), ConfigError);
}

TEST(Store, CanonicalNumericText) {
  EXPECT_EQ(canonical_numeric_text("[1.00000000000001,-0.0,2e3]"), "[1,0,2000]");
  EXPECT_EQ(canonical_numeric_text("{\"h2_2.0A\":0.12345678901234}"), "{\"h2_2.0A\":0.123456789012}");
  EXPECT_EQ(canonical_numeric_text("z_re,x1\n-1.5,3\n"), "z_re,x1\n-1.5,3\n");
  EXPECT_EQ(numeric_digest("1.0000000000000001"), numeric_digest("1"));
  EXPECT_NE(numeric_digest("1.0001"), numeric_digest("1"));
}

TEST(Store, Sha256KnownVector) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Store, SeriesRoundTrip) {
  const auto grid = retarded_grid(-1.0, 1.0, 4, 0.05);
  GreensSeries s(grid, 2);
  for (std::size_t k = 0; k < s.size(); ++k) s.g[k] << cplx(k, 0.5), cplx(-1e-17, 3.0), 1.0 / 3.0, cplx(0, -2.0);
  s.valid[2] = 0;
  s.point_errors[2] = "singular";
  PointDiagnostic d;
  d.residual = 1e-9;
  d.gamma = {0.25, -4.0};
  d.depth = 3;
  d.converged = true;
  s.diagnostics[1].push_back(d);
  const std::string text = series_to_jsonl(s);
  const GreensSeries back = series_from_jsonl(text);
  EXPECT_EQ(series_to_jsonl(back), text);
  EXPECT_EQ(back.g[3], s.g[3]);
  EXPECT_FALSE(back.valid[2]);
  ASSERT_EQ(back.diagnostics[1].size(), 1u);
  EXPECT_EQ(back.diagnostics[1][0].gamma, d.gamma);
  EXPECT_THROW(series_from_jsonl("{\"k\":0}\n"), ParseError);
}

TEST(Store, ManifestDetectsTampering) {
  const fs::path dir = scratch("manifest");
  Manifest m;
  m.write_file(dir, "a.csv", "1,2\n");
  m.save(dir);
  EXPECT_TRUE(Manifest::load(dir).verify(dir).empty());
  std::ofstream(dir / "a.csv") << "1,3\n";
  EXPECT_EQ(Manifest::load(dir).verify(dir).size(), 1u);
  fs::remove(dir / "a.csv");
  EXPECT_EQ(Manifest::load(dir).verify(dir).size(), 1u);
}

TEST(Cli, GroundStateDimerAndDeterminism) {
  const fs::path dir = scratch("ground");
  const fs::path cfg = write_config(dir, dimer_config(2.0, "out"));
  ASSERT_EQ(run("ground-state", cfg), kExitOk);
  const json g = read_json(dir / "out" / "ground_state.json");
  EXPECT_NEAR(g.at("e0").get<double>(), 1.0 - std::sqrt(5.0), 1e-4);
  EXPECT_NEAR(g.at("e0").get<double>(), -1.23607, 1e-4);
  const std::string first = read_file(dir / "out" / "ground_state.json");
  ASSERT_EQ(run("ground-state", cfg), kExitOk);
  EXPECT_EQ(read_file(dir / "out" / "ground_state.json"), first);
  EXPECT_TRUE(Manifest::load(dir / "out").verify(dir / "out").empty());
}

TEST(Cli, MissingFcidumpIsIngestionError) {
  const fs::path dir = scratch("missing");
  const fs::path cfg = write_config(dir, {{"hamiltonian", {{"fcidump", "nope.fcidump"}}}, {"output", "out"}});
  EXPECT_EQ(run("ground-state", cfg), kExitIngestion);
  EXPECT_FALSE(fs::exists(dir / "out"));
}

TEST(Cli, ConfigErrorsExitTwo) {
  const fs::path dir = scratch("badcfg");
  json j = dimer_config(4.0, "out");
  j["bogus"] = 1;
  EXPECT_EQ(run("sweep", write_config(dir, j)), kExitConfig);
  j.erase("bogus");
  j["grid"]["points"] = 0;
  EXPECT_EQ(run("sweep", write_config(dir, j)), kExitConfig);
  EXPECT_FALSE(fs::exists(dir / "out"));
}

TEST(Cli, SweepResumeMatchesUninterrupted) {
  const fs::path dir = scratch("resume");
  json j = dimer_config(4.0, "full");
  const fs::path cfg_full = write_config(dir, j);
  ASSERT_EQ(run("sweep", cfg_full), kExitOk);
  j["output"] = "split";
  const fs::path sub = dir / "split_cfg";
  fs::create_directories(sub);
  j["output"] = (dir / "split").string();
  const fs::path cfg_split = write_config(sub, j);
  ASSERT_EQ(run("sweep", cfg_split, 5), kExitOk);
  EXPECT_FALSE(fs::exists(dir / "split" / "series.jsonl"));
  ASSERT_EQ(run("sweep", cfg_split, 7), kExitOk);
  ASSERT_EQ(run("sweep", cfg_split), kExitOk);
  EXPECT_EQ(read_file(dir / "split" / "series.jsonl"), read_file(dir / "full" / "series.jsonl"));
  EXPECT_EQ(read_file(dir / "split" / "series.csv"), read_file(dir / "full" / "series.csv"));

  // Against the exact poles of the dimer.
  const GreensSeries s = series_from_jsonl(read_file(dir / "full" / "series.jsonl"));
  const PauliSum h = hamiltonian_to_qubits(hubbard_dimer(1.0, 4.0));
  const GroundState gs = exact_ground(h, 2);
  const LehmannOracle oracle(h, gs.energy, gs.psi, {0, 1, 2, 3});
  for (std::size_t k = 0; k < s.size(); ++k) {
    EXPECT_NEAR(s.trace(k), trace_spectrum(oracle.gf(s.grid.points[k])), 0.05) << k;
  }
}

TEST(Cli, OracleSectorShiftsWithMu) {
  const fs::path dir = scratch("oracle");
  json j = {{"hamiltonian", {{"fcidump", testutil::data("h2_3.0A.fcidump").string()}}},
            {"grid", {{"points", 11}}},
            {"output", "mu0"}};
  ASSERT_EQ(run("oracle", write_config(dir, j)), kExitOk);
  j["mu"] = 0.3;
  j["output"] = "mu1";
  ASSERT_EQ(run("oracle", write_config(dir, j)), kExitOk);
  const double e0 = read_json(dir / "mu0" / "oracle_poles.json").at("e0").get<double>();
  const double e1 = read_json(dir / "mu1" / "oracle_poles.json").at("e0").get<double>();
  EXPECT_NEAR(e1, e0 - 0.3 * 2, 1e-10);
  j["sector"] = 1;
  j["output"] = "mu1_n1";
  ASSERT_EQ(run("oracle", write_config(dir, j)), kExitOk);
  const double e1n = read_json(dir / "mu1_n1" / "oracle_poles.json").at("e0").get<double>();
  const PauliSum h = hamiltonian_to_qubits(read_fcidump(testutil::data("h2_3.0A.fcidump")));
  EXPECT_NEAR(e1n, exact_ground(h, 1).energy - 0.3, 1e-10);
}

TEST(Cli, CompareReportsAndRefuses) {
  const fs::path dir = scratch("compare");
  json j = {{"hamiltonian", {{"fcidump", testutil::data("h2_2.0A.fcidump").string()}}},
            {"grid", {{"points", 11}}},
            {"output", "a"}};
  ASSERT_EQ(run("oracle", write_config(dir, j)), kExitOk);
  j["output"] = "b";
  j["grid"]["points"] = 12;
  ASSERT_EQ(run("oracle", write_config(dir, j)), kExitOk);

  CommandOptions o;
  o.quiet = true;
  o.tol = 1e-12;
  o.inputs = {(dir / "a" / "oracle.jsonl").string(), (dir / "a" / "oracle.jsonl").string()};
  EXPECT_EQ(run_command("compare", o), kExitOk);
  o.inputs[1] = (dir / "b" / "oracle.jsonl").string();
  EXPECT_EQ(run_command("compare", o), kExitCompare);

  fs::copy_file(dir / "a" / "oracle.jsonl", dir / "loose.jsonl");
  o.inputs[1] = (dir / "loose.jsonl").string();
  EXPECT_EQ(run_command("compare", o), kExitIngestion);
  o.force = true;
  EXPECT_EQ(run_command("compare", o), kExitOk);
}

TEST(Cli, NoiseScan) {
  const fs::path dir = scratch("noise");
  json j = {{"hamiltonian", {{"fcidump", testutil::data("h2_2.0A.fcidump").string()}}}, {"output", "out"}};
  EXPECT_EQ(run("noise-scan", write_config(dir, j)), kExitConfig);
  j["noise_scan"] = {{"p2", {0.0, 1e-3, 2e-3}}};
  ASSERT_EQ(run("noise-scan", write_config(dir, j)), kExitOk);
  const json r = read_json(dir / "out" / "noise_scan.json");
  const auto& lv = r.at("levels");
  const double e0 = r.at("e0_noiseless").get<double>();
  EXPECT_DOUBLE_EQ(lv[0].at("energy_raw").get<double>(), e0);
  EXPECT_DOUBLE_EQ(lv[0].at("energy_zne").get<double>(), e0);
  EXPECT_LT(lv[0].at("energy_raw").get<double>(), lv[1].at("energy_raw").get<double>());
  EXPECT_LT(lv[1].at("energy_raw").get<double>(), lv[2].at("energy_raw").get<double>());
  EXPECT_LT(std::abs(lv[1].at("energy_zne").get<double>() - e0), std::abs(lv[1].at("energy_raw").get<double>() - e0));
}

TEST(Cli, EmbedOracleLiHNondyson) {
  const fs::path dir = scratch("embed");
  json j = {{"hamiltonian", {{"fcidump", testutil::data("lih_2.0A.fcidump").string()}}},
            {"active_space", {{"orbitals", {1, 2}}}},
            {"grid", {{"w_min", -2.6}, {"w_max", 0.0}, {"points", 131}}},
            {"embedding", "nondyson"},
            {"embed", {{"source", "oracle"}}},
            {"output", "out"}};
  ASSERT_EQ(run("embed", write_config(dir, j)), kExitOk);
  const GreensSeries s = series_from_jsonl(read_file(dir / "out" / "embed_nondyson.jsonl"));
  const auto f = fock_matrix(read_fcidump(testutil::data("lih_2.0A.fcidump")));
  const double core = f.f(0, 0);
  std::size_t best = 0;
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (std::abs(s.grid.points[k].real() - core) < std::abs(s.grid.points[best].real() - core)) best = k;
  }
  EXPECT_LT(s.trace(best), -5.0);
  const json rep = read_json(dir / "out" / "embed_report.json");
  EXPECT_EQ(rep.at("modes").at("nondyson").at("singular_points").get<int>(), 0);
  EXPECT_TRUE(Manifest::load(dir / "out").verify(dir / "out").empty());
}
