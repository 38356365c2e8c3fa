#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace exemplar::cli {

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

/// Run manifest written next to a stage's primary output as <out>.manifest.json.
struct Manifest {
  std::string stage;
  std::uint64_t seed = 0;
  std::string config_text;  // canonical key=value lines, all options
  std::vector<std::filesystem::path> inputs;
  std::vector<std::filesystem::path> artifacts;
  nlohmann::json metrics = nlohmann::json::object();

  static std::filesystem::path path_for(const std::filesystem::path& primary_output);
  nlohmann::json to_json() const;
  void write(const std::filesystem::path& primary_output) const;
};

/// Removes the registered files unless commit() was called.
class OutputGuard {
 public:
  OutputGuard() = default;
  OutputGuard(const OutputGuard&) = delete;
  OutputGuard& operator=(const OutputGuard&) = delete;
  ~OutputGuard();

  const std::filesystem::path& add(std::filesystem::path p);
  void commit() { committed_ = true; }

 private:
  std::vector<std::filesystem::path> paths_;
  bool committed_ = false;
};

}  // namespace exemplar::cli
