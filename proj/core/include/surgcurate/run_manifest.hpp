#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace surgcurate {

class ResolvedConfig;

std::string_view tool_version() noexcept;

struct FileFingerprint {
  std::string role;  // e.g. "store", "tree", "report"
  std::string path;
  std::uint64_t size_bytes = 0;
  std::string sha256;  // hex

  bool operator==(const FileFingerprint&) const = default;
};

FileFingerprint fingerprint_file(std::string role, const std::filesystem::path& path);

struct RunManifest {
  std::string command;                  // subcommand, e.g. "cluster"
  std::vector<std::string> argv;        // full argument vector after the program name
  std::map<std::string, std::string> config;
  std::map<std::string, std::uint64_t> seeds;  // stage -> derived seed
  std::vector<FileFingerprint> inputs;
  std::vector<FileFingerprint> outputs;
  std::string tool_version;
  std::string started_at;
  std::string finished_at;

  bool operator==(const RunManifest&) const = default;
};

// "<artifact>.run.json"
std::filesystem::path run_manifest_path(const std::filesystem::path& artifact);

std::string utc_timestamp();

std::string serialize_run_manifest(const RunManifest& manifest);
RunManifest parse_run_manifest(std::string_view text);
void write_run_manifest(const std::filesystem::path& path, const RunManifest& manifest);
RunManifest read_run_manifest(const std::filesystem::path& path);

// Input and output entries whose file is missing or no longer matches.
std::vector<std::string> verify_run_manifest(const RunManifest& manifest);

}  // namespace surgcurate
