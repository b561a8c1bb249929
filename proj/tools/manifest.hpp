#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace hwmor::cli {

std::string sha256_file(const std::filesystem::path& path);
std::string sha256_text(const std::string& text);

/// Provenance record written next to every artifact a subcommand produces.
struct RunManifest {
  std::string tool_version;
  std::string command;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> inputs;     // path -> sha256
  std::map<std::string, std::string> artifacts;  // path -> sha256
  std::map<std::string, double> timings;         // stage -> seconds

  void add_input(const std::filesystem::path& path);
  void add_artifact(const std::filesystem::path& path);
  nlohmann::json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);
};

void write_manifest(const RunManifest& manifest, const std::filesystem::path& path);
RunManifest read_manifest(const std::filesystem::path& path);

/// Paths whose current hash no longer matches the manifest (missing files included).
std::vector<std::string> stale_entries(const RunManifest& manifest);

/// `<artifact>.manifest.json`
std::filesystem::path manifest_path_for(const std::filesystem::path& artifact);

}  // namespace hwmor::cli
