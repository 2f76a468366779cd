#include "surgcurate/run_manifest.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "surgcurate/error.hpp"
#include "surgcurate/hashing.hpp"

namespace surgcurate {

using nlohmann::json;

namespace {

json fingerprint_json(const FileFingerprint& f) {
  return {{"role", f.role}, {"path", f.path}, {"size_bytes", f.size_bytes}, {"sha256", f.sha256}};
}

FileFingerprint fingerprint_from_json(const json& j) {
  return {j.at("role").get<std::string>(), j.at("path").get<std::string>(),
          j.at("size_bytes").get<std::uint64_t>(), j.at("sha256").get<std::string>()};
}

}  // namespace

std::string_view tool_version() noexcept { return SURGCURATE_VERSION; }

FileFingerprint fingerprint_file(std::string role, const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw Error(ErrorCode::kInputMissing, "file not found: " + path.string());
  }
  return {std::move(role), path.string(), std::filesystem::file_size(path), to_hex(sha256_file(path))};
}

std::filesystem::path run_manifest_path(const std::filesystem::path& artifact) {
  return std::filesystem::path(artifact.string() + ".run.json");
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string serialize_run_manifest(const RunManifest& m) {
  json j;
  j["command"] = m.command;
  j["argv"] = m.argv;
  j["config"] = m.config;
  j["seeds"] = m.seeds;
  j["inputs"] = json::array();
  for (const auto& f : m.inputs) j["inputs"].push_back(fingerprint_json(f));
  j["outputs"] = json::array();
  for (const auto& f : m.outputs) j["outputs"].push_back(fingerprint_json(f));
  j["tool_version"] = m.tool_version;
  j["started_at"] = m.started_at;
  j["finished_at"] = m.finished_at;
  return j.dump(2) + "\n";
}

RunManifest parse_run_manifest(std::string_view text) {
  try {
    const json j = json::parse(text);
    RunManifest m;
    m.command = j.at("command").get<std::string>();
    m.argv = j.at("argv").get<std::vector<std::string>>();
    m.config = j.at("config").get<std::map<std::string, std::string>>();
    m.seeds = j.at("seeds").get<std::map<std::string, std::uint64_t>>();
    for (const auto& f : j.at("inputs")) m.inputs.push_back(fingerprint_from_json(f));
    for (const auto& f : j.at("outputs")) m.outputs.push_back(fingerprint_from_json(f));
    m.tool_version = j.at("tool_version").get<std::string>();
    m.started_at = j.at("started_at").get<std::string>();
    m.finished_at = j.at("finished_at").get<std::string>();
    return m;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("bad run manifest: ") + e.what());
  }
}

void write_run_manifest(const std::filesystem::path& path, const RunManifest& manifest) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << serialize_run_manifest(manifest);
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

RunManifest read_run_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kInputMissing, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_run_manifest(buf.str());
}

std::vector<std::string> verify_run_manifest(const RunManifest& manifest) {
  std::vector<std::string> bad;
  auto check = [&](const FileFingerprint& f) {
    if (!std::filesystem::exists(f.path) || to_hex(sha256_file(f.path)) != f.sha256) {
      bad.push_back(f.role + ": " + f.path);
    }
  };
  for (const auto& f : manifest.inputs) check(f);
  for (const auto& f : manifest.outputs) check(f);
  return bad;
}

}  // namespace surgcurate
