#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "fbsnet/experiments.hpp"
#include "fbsnet/learning.hpp"
#include "fbsnet/regularizer.hpp"

namespace fbsnet {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DataConfig {
  std::string path;  // load this dataset instead of generating one
  Eigen::Index m = 32;
  Eigen::Index n = 128;
  std::size_t train = 512;
  std::size_t val = 64;
  double sparsity = 0.1;
  double noise = 0.01;
  std::uint64_t seed = 7;
};

struct NetworkConfig {
  double T = 1.0;
  std::size_t layers = 8;
};

struct SweepConfig {
  std::vector<std::size_t> layers{4, 8, 16, 32};
};

struct GammaConfig {
  std::vector<std::size_t> layers{16, 32, 64, 128, 256};
  std::size_t nref = 4096;
  std::size_t grid = 4096;
  Eigen::Index m = 8;
  Eigen::Index n = 16;
  std::size_t samples = 2;
  std::uint64_t seed = 11;
  double alpha0 = 1.0;
  double lambda0 = 0.05;
};

struct StabilityConfig {
  std::string target = "y";
  int first_exp = 1;
  int last_exp = 6;
  std::uint64_t direction_seed = 1;
  std::string mode = "discrete";
  std::size_t depth = 8;
  std::size_t epochs = 50;
  std::size_t batch_size = 0;  // 0: full batch
};

/// Every configurable value of the command-line tool, defaults filled.
struct RunConfig {
  DataConfig data;
  NetworkConfig network;
  Regularizer reg = Regularizer::l1();
  ObjectiveConfig objective;
  TrainConfig train;
  SweepConfig sweep;
  GammaConfig gamma;
  StabilityConfig stability;

  void validate() const;
};

/// Parsed TOML-subset document plus the source line of every key
/// ("section.key" -> line).
struct TomlDocument {
  nlohmann::json root = nlohmann::json::object();
  std::map<std::string, int> lines;
};

/// Accepts [section] headers, key = value pairs, '#' comments, strings,
/// booleans, integers, floats and single-line arrays of those.
TomlDocument parse_toml(std::string_view text, const std::string& source = "<config>");

/// Builds a config from a JSON object of sections. Unknown sections or keys
/// are rejected. `lines` is only used to decorate error messages.
RunConfig config_from_json(const nlohmann::json& root,
                           const std::map<std::string, int>& lines = {},
                           const std::string& source = "<config>");

nlohmann::json config_to_json(const RunConfig& cfg);

/// Loads *.json (plain config or a run manifest) or the TOML subset. An
/// empty file yields the defaults.
RunConfig load_config(const std::filesystem::path& path);

}  // namespace fbsnet
