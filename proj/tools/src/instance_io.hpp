#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "nnr/nnls.hpp"

namespace nnr::cli {

using Echo = std::vector<std::pair<std::string, std::string>>;

/// FNV-1a over the little-endian float64 bytes, column-major.
std::uint64_t matrix_hash(const DenseMatrix& X);
std::string hex64(std::uint64_t v);

struct InstancePaths {
  std::filesystem::path manifest;
  std::filesystem::path matrix;
};

/// <dir>/<name>.json (manifest) and <dir>/<name>.bin (raw matrix).
InstancePaths write_instance(const std::filesystem::path& dir, const std::string& name, const RegressionInstance& inst,
                             const Echo& config, std::uint64_t seed);

struct LoadedInstance {
  RegressionInstance inst;
  nlohmann::ordered_json manifest;
  std::uint64_t hash = 0;
};

/// Reads a manifest and its matrix; the recorded hash must match.
LoadedInstance read_instance(const std::filesystem::path& manifest);

}  // namespace nnr::cli
