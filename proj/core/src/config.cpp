#include "surgcurate/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "surgcurate/error.hpp"

extern char** environ;

namespace surgcurate {

namespace {

std::vector<ConfigKey> build_registry() {
  using T = ConfigType;
  return {
      {"cluster.levels", T::kLevels, "25000,5000,1000", "clusters per level, finest first"},
      {"cluster.tol", T::kReal, "1e-4", "relative inertia improvement that stops Lloyd"},
      {"cluster.max_iter", T::kUInt, "100", "Lloyd iteration cap per level"},
      {"cluster.n_init", T::kUInt, "10", "K-means++ restarts per level (best inertia kept)"},
      {"cluster.local_trials", T::kUInt, "2", "seeding candidates per K-means++ step"},
      {"cluster.chunk_size", T::kUInt, "4096", "rows per parallel work chunk"},
      {"cluster.normalize", T::kBool, "true", "unit-normalize rows before clustering"},
      {"curate.fraction", T::kRational, "0.10", "fraction of clips kept"},
      {"curate.allocation", T::kString, "equal", "budget split: equal | proportional"},
      {"sample.p_pure", T::kRational, "0.15", "probability of a pure clinical batch"},
      {"sample.mix", T::kRational, "0.70", "unlabeled share of a mixed batch"},
      {"sample.batch", T::kUInt, "64", "clips per batch"},
      {"sample.n", T::kUInt, "1000", "number of batches"},
      {"sample.schedule", T::kString, "iid", "batch mode schedule: iid | interleave"},
      {"split.ratios", T::kRatios, "7:2:1", "train:val:test ratios"},
      {"split.stratify_by", T::kString, "", "CSV of video_id,label for stratified splits"},
      {"run.seed", T::kUInt, "0", "root seed"},
      {"run.threads", T::kUInt, "0", "worker threads (0 = all cores)"},
  };
}

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorCode::kConfigError, msg); }

std::string trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

std::uint64_t parse_u64(std::string_view s, const std::string& key) {
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || p != s.data() + s.size()) {
    config_error(key + ": expected an unsigned integer, got '" + std::string(s) + "'");
  }
  return v;
}

double parse_real(std::string_view s, const std::string& key) {
  double v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v) || v < 0) {
    config_error(key + ": expected a non-negative number, got '" + std::string(s) + "'");
  }
  return v;
}

bool parse_bool(std::string_view s, const std::string& key) {
  std::string lower(s);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "true" || lower == "1" || lower == "yes" || lower == "on") return true;
  if (lower == "false" || lower == "0" || lower == "no" || lower == "off") return false;
  config_error(key + ": expected a boolean, got '" + std::string(s) + "'");
}

std::vector<std::size_t> parse_levels(std::string_view s, const std::string& key) {
  std::vector<std::size_t> out;
  std::string_view rest = s;
  while (true) {
    const auto comma = rest.find(',');
    const std::string item = trim(rest.substr(0, comma));
    const auto v = parse_u64(item, key);
    if (v == 0) config_error(key + ": level sizes must be positive");
    out.push_back(static_cast<std::size_t>(v));
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  return out;
}

}  // namespace

std::string_view to_string(ConfigType type) noexcept {
  switch (type) {
    case ConfigType::kUInt: return "uint";
    case ConfigType::kReal: return "real";
    case ConfigType::kRational: return "rational";
    case ConfigType::kBool: return "bool";
    case ConfigType::kString: return "string";
    case ConfigType::kLevels: return "levels";
    case ConfigType::kRatios: return "ratios";
  }
  return "?";
}

std::string_view to_string(ConfigSource source) noexcept {
  switch (source) {
    case ConfigSource::kDefault: return "default";
    case ConfigSource::kFile: return "file";
    case ConfigSource::kEnv: return "env";
    case ConfigSource::kFlag: return "flag";
  }
  return "?";
}

std::string ConfigKey::flag() const {
  std::string f = "--" + name();
  std::replace(f.begin(), f.end(), '_', '-');
  return f;
}

std::string ConfigKey::env_var() const {
  std::string v = std::string(kEnvPrefix) + key;
  std::replace(v.begin(), v.end(), '.', '_');
  std::transform(v.begin(), v.end(), v.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return v;
}

const std::vector<ConfigKey>& config_registry() {
  static const std::vector<ConfigKey> registry = build_registry();
  return registry;
}

const ConfigKey& config_key(std::string_view key) {
  for (const auto& k : config_registry()) {
    if (k.key == key) return k;
  }
  config_error("unknown config key '" + std::string(key) + "'");
}

std::string normalize_config_value(const ConfigKey& key, std::string_view raw) {
  const std::string value = trim(raw);
  switch (key.type) {
    case ConfigType::kUInt:
      return std::to_string(parse_u64(value, key.key));
    case ConfigType::kReal:
      parse_real(value, key.key);
      return value;
    case ConfigType::kRational: {
      try {
        const Rational r = parse_rational(value);
        if (r < 0) config_error(key.key + ": must be non-negative");
      } catch (const Error& e) {
        if (e.code() == ErrorCode::kConfigError) throw;
        config_error(key.key + ": expected a number, got '" + value + "'");
      }
      return value;
    }
    case ConfigType::kBool:
      return parse_bool(value, key.key) ? "true" : "false";
    case ConfigType::kString:
      if (key.key == "curate.allocation" && value != "equal" && value != "proportional") {
        config_error(key.key + ": expected equal or proportional, got '" + value + "'");
      }
      if (key.key == "sample.schedule" && value != "iid" && value != "interleave") {
        config_error(key.key + ": expected iid or interleave, got '" + value + "'");
      }
      return value;
    case ConfigType::kLevels: {
      std::string out;
      for (auto v : parse_levels(value, key.key)) out += (out.empty() ? "" : ",") + std::to_string(v);
      return out;
    }
    case ConfigType::kRatios: {
      std::vector<std::uint64_t> parts;
      std::string_view rest = value;
      while (true) {
        const auto colon = rest.find(':');
        parts.push_back(parse_u64(trim(rest.substr(0, colon)), key.key));
        if (colon == std::string_view::npos) break;
        rest.remove_prefix(colon + 1);
      }
      if (parts.size() != 3 || parts[0] + parts[1] + parts[2] == 0) {
        config_error(key.key + ": expected three ratios like 7:2:1, got '" + value + "'");
      }
      return std::to_string(parts[0]) + ":" + std::to_string(parts[1]) + ":" + std::to_string(parts[2]);
    }
  }
  return value;
}

const std::string& ResolvedConfig::text(std::string_view key) const {
  auto it = values_.find(std::string(key));
  if (it == values_.end()) config_error("unknown config key '" + std::string(key) + "'");
  return it->second;
}

std::uint64_t ResolvedConfig::get_uint(std::string_view key) const {
  return parse_u64(text(key), std::string(key));
}

double ResolvedConfig::get_real(std::string_view key) const {
  return parse_real(text(key), std::string(key));
}

Rational ResolvedConfig::get_rational(std::string_view key) const { return parse_rational(text(key)); }

bool ResolvedConfig::get_bool(std::string_view key) const {
  return parse_bool(text(key), std::string(key));
}

std::vector<std::size_t> ResolvedConfig::get_levels(std::string_view key) const {
  return parse_levels(text(key), std::string(key));
}

void ResolvedConfig::set(const std::string& key, std::string value, ConfigSource source) {
  values_[key] = normalize_config_value(config_key(key), value);
  sources_[key] = source;
}

std::map<std::string, std::string> collect_env() {
  std::map<std::string, std::string> out;
  for (char** e = environ; e && *e; ++e) {
    std::string_view entry(*e);
    if (!entry.starts_with(kEnvPrefix)) continue;
    const auto eq = entry.find('=');
    if (eq == std::string_view::npos) continue;
    out.emplace(entry.substr(0, eq), entry.substr(eq + 1));
  }
  return out;
}

ResolvedConfig resolve_config(const ConfigInputs& inputs) {
  ResolvedConfig config;
  for (const auto& k : config_registry()) config.set(k.key, k.default_value, ConfigSource::kDefault);

  if (inputs.file) {
    if (!std::filesystem::exists(*inputs.file)) {
      throw Error(ErrorCode::kInputMissing, "config file not found: " + inputs.file->string());
    }
    boost::property_tree::ptree tree;
    try {
      boost::property_tree::ini_parser::read_ini(inputs.file->string(), tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
      config_error(std::string("cannot parse config file: ") + e.what());
    }
    for (const auto& [section, body] : tree) {
      if (body.empty()) config_error("config key '" + section + "' is outside any section");
      for (const auto& [name, value] : body) {
        const std::string key = section + "." + name;
        config_key(key);
        config.set(key, value.data(), ConfigSource::kFile);
      }
    }
  }

  for (const auto& [var, value] : inputs.env) {
    if (!var.starts_with(kEnvPrefix)) continue;
    const auto match = std::find_if(config_registry().begin(), config_registry().end(),
                                     [&](const ConfigKey& k) { return k.env_var() == var; });
    if (match == config_registry().end()) config_error("unknown config key '" + var + "'");
    config.set(match->key, value, ConfigSource::kEnv);
  }

  for (const auto& [key, value] : inputs.flags) {
    config_key(key);
    config.set(key, value, ConfigSource::kFlag);
  }
  return config;
}

std::string render_config_ini(const ResolvedConfig& config) {
  std::ostringstream out;
  std::string current;
  for (const auto& k : config_registry()) {
    if (k.section() != current) {
      if (!current.empty()) out << '\n';
      current = k.section();
      out << '[' << current << "]\n";
    }
    out << k.name() << " = " << config.text(k.key) << '\n';
  }
  return out.str();
}

}  // namespace surgcurate
