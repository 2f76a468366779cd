#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "surgcurate/rational.hpp"

namespace surgcurate {

enum class ConfigType { kUInt, kReal, kRational, kBool, kString, kLevels, kRatios };

std::string_view to_string(ConfigType type) noexcept;

struct ConfigKey {
  std::string key;  // "section.name"
  ConfigType type;
  std::string default_value;
  std::string help;

  std::string section() const { return key.substr(0, key.find('.')); }
  std::string name() const { return key.substr(key.find('.') + 1); }
  // "--max-iter" for cluster.max_iter.
  std::string flag() const;
  // "SURGCURATE_CLUSTER_MAX_ITER" for cluster.max_iter.
  std::string env_var() const;
};

inline constexpr std::string_view kEnvPrefix = "SURGCURATE_";

const std::vector<ConfigKey>& config_registry();
const ConfigKey& config_key(std::string_view key);  // throws ConfigError

enum class ConfigSource { kDefault, kFile, kEnv, kFlag };
std::string_view to_string(ConfigSource source) noexcept;

class ResolvedConfig {
 public:
  // Every registry key is present after resolve_config.
  const std::map<std::string, std::string>& values() const noexcept { return values_; }
  const std::map<std::string, ConfigSource>& sources() const noexcept { return sources_; }

  const std::string& text(std::string_view key) const;
  std::uint64_t get_uint(std::string_view key) const;
  double get_real(std::string_view key) const;
  Rational get_rational(std::string_view key) const;
  bool get_bool(std::string_view key) const;
  std::vector<std::size_t> get_levels(std::string_view key) const;

  void set(const std::string& key, std::string value, ConfigSource source);

 private:
  std::map<std::string, std::string> values_;
  std::map<std::string, ConfigSource> sources_;
};

// Checks value against the key's type and returns its canonical text.
std::string normalize_config_value(const ConfigKey& key, std::string_view value);

struct ConfigInputs {
  std::optional<std::filesystem::path> file;  // INI
  std::map<std::string, std::string> flags;   // registry key -> value
  std::map<std::string, std::string> env;     // full variable name -> value
};

// Every SURGCURATE_* variable of the current process.
std::map<std::string, std::string> collect_env();

// flags > env > file > defaults. Throws ConfigError on unknown keys (file,
// flags, or SURGCURATE_ variables) and type mismatches; InputMissing when
// the file does not exist.
ResolvedConfig resolve_config(const ConfigInputs& inputs);

// INI text of the resolved config, one section per registry section.
std::string render_config_ini(const ResolvedConfig& config);

}  // namespace surgcurate
