#pragma once

#include <chrono>
#include <filesystem>
#include <string>

#include "gpcbf/serialization.hpp"

namespace gpcbf::cli {

inline constexpr const char* kToolVersion = "0.3.0";

/// Lower-case hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);
std::string sha256_hex(const std::string& bytes);

/// Collects one command's configuration, inputs, outputs and outcome, then
/// writes `<output>.manifest.json`. Timestamps live only here so the
/// artifacts themselves stay byte-identical across reruns.
class RunManifest {
 public:
  explicit RunManifest(std::string command);

  Json& config() { return doc_["config"]; }
  Json& interpretation() { return doc_["interpretation"]; }
  void add_seed(const std::string& name, std::uint64_t seed);
  void add_input(const std::filesystem::path& path);
  void add_output(const std::filesystem::path& path);
  void stage(const std::string& name, const std::string& outcome, double seconds);
  void set_outcome(const std::string& outcome, int exit_code);

  /// Hashes every output (they must exist) and writes the manifest.
  void write(const std::filesystem::path& path);

 private:
  Json doc_;
  std::chrono::steady_clock::time_point start_;
};

std::filesystem::path manifest_path_for(const std::filesystem::path& output);

}  // namespace gpcbf::cli
