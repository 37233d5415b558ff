#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "config.hpp"
#include "corrvec/molham.hpp"
#include "corrvec/pauli.hpp"
#include "corrvec/vqe.hpp"

namespace corrvec::app {

enum ExitCode : int {
  kExitOk = 0,
  kExitOther = 1,
  kExitConfig = 2,
  kExitIngestion = 3,
  kExitConvergence = 4,
  kExitCompare = 5,
};

class CompareFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CommandOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  bool force = false;
  long stop_after = -1;
  std::vector<std::string> inputs;  // compare: series A and B
  double tol = 0.0;                 // compare: element tolerance, 0 disables
  bool quiet = false;
};

/// Hamiltonian of the run: the active-space problem when one is configured.
struct System {
  MolecularIntegrals full;
  std::optional<CasPartition> cas;
  MolecularIntegrals ints;
  PauliSum h;
  int width = 0;
  std::vector<int> occupied;  // reference determinant, blocked spin order
};

struct GroundResult {
  double e0 = 0.0;
  double e0_vqe = 0.0;
  double e0_exact = 0.0;
  AnsatzSpec spec;
  std::vector<double> theta;
  OptimizationTrace trace;
};

System load_system(const RunConfig& c);
GroundResult solve_ground(const RunConfig& c, const System& sys);

int cmd_ground_state(const RunConfig& c, const CommandOptions& o);
int cmd_sweep(const RunConfig& c, const CommandOptions& o);
int cmd_embed(const RunConfig& c, const CommandOptions& o);
int cmd_oracle(const RunConfig& c, const CommandOptions& o);
int cmd_compare(const CommandOptions& o);
int cmd_noise_scan(const RunConfig& c, const CommandOptions& o);

/// Loads the config, applies the overrides, dispatches, and maps errors to
/// exit codes.
int run_command(const std::string& name, const CommandOptions& o);

/// hardware_concurrency capped by CORRVEC_MAX_WORKERS.
int worker_count();

}  // namespace corrvec::app
