#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "corrvec/correction_vector.hpp"
#include "corrvec/greens.hpp"

namespace corrvec::app {

namespace fs = std::filesystem;

/// Every number outside string literals rewritten with 12 significant digits.
std::string canonical_numeric_text(const std::string& text);
std::string sha256_hex(const std::string& data);
std::string numeric_digest(const std::string& text);

std::string read_file(const fs::path& p);
/// Writes `<p>.tmp` and renames it over `p`.
void atomic_write(const fs::path& p, const std::string& content);

std::string series_to_jsonl(const GreensSeries& s);
GreensSeries series_from_jsonl(const std::string& text);
/// z_re, z_im, trace_spectrum, spectral_function.
std::string series_to_csv(const GreensSeries& s);

nlohmann::json record_to_json(const PointRecord& r);
PointRecord record_from_json(const nlohmann::json& j, const std::vector<GateKind>& pattern, int width);

struct ManifestFile {
  std::string sha256;
  std::uintmax_t bytes = 0;

  friend bool operator==(const ManifestFile&, const ManifestFile&) = default;
};

struct StageStatus {
  std::string status;
  double wall_seconds = 0.0;
  nlohmann::json detail = nlohmann::json::object();
};

class Manifest {
 public:
  static constexpr const char* kFileName = "manifest.json";

  /// Existing manifest of `dir`, or an empty one.
  static Manifest load_or_empty(const fs::path& dir);
  static Manifest load(const fs::path& dir);

  void set_config(const nlohmann::json& config) { config_ = config; }
  const nlohmann::json& config() const { return config_; }
  void set_stage(const std::string& name, StageStatus s) { stages_[name] = std::move(s); }
  const std::map<std::string, StageStatus>& stages() const { return stages_; }
  const std::map<std::string, ManifestFile>& files() const { return files_; }

  /// Writes `content` atomically into dir/name and records its digest.
  void write_file(const fs::path& dir, const std::string& name, const std::string& content);
  void save(const fs::path& dir) const;

  /// Missing files and digest mismatches, empty when consistent.
  std::vector<std::string> verify(const fs::path& dir) const;

  nlohmann::json to_json() const;

 private:
  nlohmann::json config_ = nlohmann::json::object();
  std::map<std::string, StageStatus> stages_;
  std::map<std::string, ManifestFile> files_;
};

nlohmann::json version_info();

}  // namespace corrvec::app
