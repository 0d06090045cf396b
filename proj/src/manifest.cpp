#include "fbsnet/manifest.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>

#include <openssl/evp.h>

#include "fbsnet/params_io.hpp"
#include "fbsnet/types.hpp"

#ifndef FBSNET_VERSION
#define FBSNET_VERSION "unknown"
#endif

namespace fbsnet {

nlohmann::json manifest_to_json(const RunManifest& m) {
  return {{"manifest_version", kManifestVersion},
          {"command", m.command},
          {"argv", m.argv},
          {"rerun_argv", m.rerun_argv},
          {"config", m.config},
          {"config_hash", m.config_hash},
          {"seed", m.seed},
          {"started_utc", m.started_utc},
          {"finished_utc", m.finished_utc},
          {"status", m.status},
          {"outputs", m.outputs},
          {"results", m.results},
          {"code_version", m.code_version}};
}

std::filesystem::path manifest_path(const std::filesystem::path& out) {
  return std::filesystem::path(out.string() + ".manifest.json");
}

void write_manifest(const RunManifest& m, const std::filesystem::path& path) {
  write_file_atomic(path, manifest_to_json(m).dump(2) + "\n");
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw IoError("SHA-256 computation failed");
  }
  std::string hex;
  hex.reserve(2 * len);
  static const char* kDigits = "0123456789abcdef";
  for (unsigned int i = 0; i < len; ++i) {
    hex += kDigits[digest[i] >> 4];
    hex += kDigits[digest[i] & 0xF];
  }
  return hex;
}

std::string config_hash(const nlohmann::json& config) { return sha256_hex(config.dump()); }

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

const char* code_version() { return FBSNET_VERSION; }

}  // namespace fbsnet
