#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "corrvec/circuit.hpp"
#include "corrvec/correction_vector.hpp"
#include "corrvec/greens.hpp"

namespace corrvec::app {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct HamiltonianSource {
  std::optional<std::string> fcidump;  // path, relative to the config file
  double hubbard_t = 1.0;
  double hubbard_u = 4.0;
};

struct ActiveSpaceSpec {
  std::vector<int> orbitals;  // explicit list, or
  int occupied = 0;           // frontier selection when `orbitals` is empty
  int virtuals = 0;
};

struct GridSpec {
  GridKind kind = GridKind::retarded;
  double w_min = -1.5;
  double w_max = 1.5;
  int points = 101;
  double eta = 0.05;

  FrequencyGrid build() const;
};

struct AnsatzConfig {
  int depth = 2;
  std::vector<GateKind> pattern{GateKind::Ry, GateKind::Rz};
};

struct VqeConfig {
  AnsatzConfig ansatz;
  double tol = 1e-8;
  int max_sweeps = 200;
};

struct OptimizerConfig {
  double eps = 0.05;
  ResidualKind residual = ResidualKind::reconstruction;
  int max_sweeps = 300;
  int stall_sweeps = 10;
  double stall_rel = 0.01;
  int max_depth = 0;
  bool refine = true;
  double refine_threshold = 0.2;
};

enum class EmbeddingMode { none, dyson, nondyson, both };
enum class E0Source { vqe, exact };
enum class CasSource { sweep, oracle };

struct EmbedConfig {
  CasSource source = CasSource::sweep;
  double noise_sigma = 0.0;  // Gaussian noise added to the CAS GF
  std::uint64_t noise_seed = 0;
};

struct NoiseScanConfig {
  std::vector<double> p2;
  bool reoptimize = false;
};

struct RunConfig {
  HamiltonianSource hamiltonian;
  std::optional<ActiveSpaceSpec> active_space;
  double mu = 0.0;
  double penalty = 0.5;
  std::optional<int> sector;  // oracle sector; defaults to the electron count
  GridSpec grid;
  AnsatzConfig ansatz;
  VqeConfig vqe;
  OptimizerConfig optimizer;
  MeasurementSettings measurement;
  NoiseModel noise;
  EmbeddingMode embedding = EmbeddingMode::none;
  EmbedConfig embed;
  E0Source e0_source = E0Source::vqe;
  bool restricted = true;
  bool spin_blocks = true;
  NoiseScanConfig noise_scan;
  double success_fraction = 0.95;
  std::string output = "out";

  std::filesystem::path base_dir;  // not serialized

  void validate() const;
  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
  static RunConfig load(const std::filesystem::path& file);

  std::filesystem::path resolve(const std::string& p) const;
};

const char* embedding_name(EmbeddingMode m);

}  // namespace corrvec::app
