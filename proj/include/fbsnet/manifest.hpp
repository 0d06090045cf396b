#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace fbsnet {

inline constexpr int kManifestVersion = 1;

/// Record of one CLI invocation, stored next to its main output as
/// <out>.manifest.json.
struct RunManifest {
  std::string command;
  std::vector<std::string> argv;
  /// argv that reproduces the outputs using only this manifest as config.
  std::vector<std::string> rerun_argv;
  nlohmann::json config = nlohmann::json::object();
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string started_utc;
  std::string finished_utc;
  std::string status = "running";
  std::vector<std::string> outputs;
  nlohmann::json results = nlohmann::json::object();
  std::string code_version;
};

nlohmann::json manifest_to_json(const RunManifest& m);

std::filesystem::path manifest_path(const std::filesystem::path& out);

/// Atomic write of manifest_to_json(m).
void write_manifest(const RunManifest& m, const std::filesystem::path& path);

/// Lowercase hex SHA-256 of the bytes.
std::string sha256_hex(const std::string& bytes);

/// Canonical hash of a config: SHA-256 of its compact JSON dump.
std::string config_hash(const nlohmann::json& config);

std::string utc_timestamp();

const char* code_version();

}  // namespace fbsnet
