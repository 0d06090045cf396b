#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "fbsnet/dynamics.hpp"
#include "fbsnet/learning.hpp"

namespace fbsnet {

/// On-disk layout (see docs/FORMATS.md):
///   <path>       little-endian IEEE-754 float64 payload, no padding
///   <path>.json  header with shape metadata and the payload length
///
/// NetworkParams / Control payload: A_0..A_{N-1} (each row-major m x n),
/// then alpha[0..N-1], then lambda[0..N-1].
/// Dataset payload: b_j (all samples), then y_j, then x0_j, then A_true
/// row-major.
inline constexpr const char* kFormatName = "fbsnet-f64le";
inline constexpr int kFormatVersion = 1;

std::filesystem::path header_path(const std::filesystem::path& payload);

void save_params(const NetworkParams& p, const std::filesystem::path& path,
                 const nlohmann::json& extra = nlohmann::json::object());
NetworkParams load_params(const std::filesystem::path& path);

void save_control(const Control& u, const std::filesystem::path& path,
                  const nlohmann::json& extra = nlohmann::json::object());
Control load_control(const std::filesystem::path& path);

void save_dataset(const Dataset& d, const std::filesystem::path& path,
                  const nlohmann::json& extra = nlohmann::json::object());
Dataset load_dataset(const std::filesystem::path& path);

nlohmann::json read_header(const std::filesystem::path& path);

/// Writes via a temporary sibling and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);
std::string read_file(const std::filesystem::path& path);

}  // namespace fbsnet
