#include "surgcurate/splits.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "surgcurate/apportion.hpp"
#include "surgcurate/corpus.hpp"
#include "surgcurate/error.hpp"
#include "surgcurate/hashing.hpp"
#include "surgcurate/random.hpp"

namespace surgcurate {

using nlohmann::json;

std::string_view to_string(SplitTier tier) noexcept {
  switch (tier) {
    case SplitTier::kOfficial: return "Official";
    case SplitTier::kCommunity: return "Community";
    case SplitTier::kOurs: return "Ours";
  }
  return "?";
}

std::string_view to_string(SplitName split) noexcept {
  switch (split) {
    case SplitName::kTrain: return "train";
    case SplitName::kVal: return "val";
    case SplitName::kTest: return "test";
  }
  return "?";
}

SplitTier parse_tier(std::string_view text) {
  for (auto t : {SplitTier::kOfficial, SplitTier::kCommunity, SplitTier::kOurs}) {
    if (to_string(t) == text) return t;
  }
  throw Error(ErrorCode::kParse, "unknown split tier '" + std::string(text) + "'");
}

SplitName parse_split_name(std::string_view text) {
  for (auto s : kAllSplits) {
    if (to_string(s) == text) return s;
  }
  throw Error(ErrorCode::kParse, "unknown split '" + std::string(text) + "'");
}

SplitRatios parse_ratios(std::string_view text) {
  SplitRatios out{};
  std::size_t part = 0;
  std::string_view rest = text;
  while (true) {
    const auto colon = rest.find(':');
    const std::string_view field = rest.substr(0, colon);
    if (part >= 3) throw Error(ErrorCode::kParse, "ratios need exactly three parts: " + std::string(text));
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), out[part]);
    if (ec != std::errc{} || ptr != field.data() + field.size() || field.empty()) {
      throw Error(ErrorCode::kParse, "bad ratio '" + std::string(text) + "'");
    }
    ++part;
    if (colon == std::string_view::npos) break;
    rest.remove_prefix(colon + 1);
  }
  if (part != 3) throw Error(ErrorCode::kParse, "ratios need exactly three parts: " + std::string(text));
  if (out[0] + out[1] + out[2] == 0) throw Error(ErrorCode::kParse, "ratios sum to zero");
  return out;
}

std::string format_ratios(const SplitRatios& r) {
  return std::to_string(r[0]) + ":" + std::to_string(r[1]) + ":" + std::to_string(r[2]);
}

void SplitAssignment::canonicalize() {
  for (auto& m : members) std::sort(m.begin(), m.end());
}

SplitTier resolve_tier(bool has_official, bool has_community) {
  if (has_official) return SplitTier::kOfficial;
  if (has_community) return SplitTier::kCommunity;
  return SplitTier::kOurs;
}

std::array<std::uint64_t, 3> split_counts(std::uint64_t n, const SplitRatios& ratios) {
  const std::array<std::uint64_t, 3> weights = {ratios[0], ratios[1], ratios[2]};
  const auto v = apportion(n, weights);
  return {v[0], v[1], v[2]};
}

RatioSplit ratio_split(std::vector<std::string> video_ids, const SplitRatios& ratios,
                       std::uint64_t seed, const std::map<std::string, std::string>* strata) {
  if (video_ids.empty()) throw Error(ErrorCode::kEmptyDataset, "no videos to split");
  std::sort(video_ids.begin(), video_ids.end());
  if (std::adjacent_find(video_ids.begin(), video_ids.end()) != video_ids.end()) {
    throw Error(ErrorCode::kParse, "duplicate video id in split input");
  }

  // Strata in label order; without stratification there is a single one.
  std::map<std::string, std::vector<std::string>> groups;
  for (auto& id : video_ids) {
    std::string label;
    if (strata != nullptr) {
      auto it = strata->find(id);
      if (it == strata->end()) throw Error(ErrorCode::kParse, "no stratum for video '" + id + "'");
      label = it->second;
    }
    groups[label].push_back(std::move(id));
  }

  RatioSplit out;
  Rng rng(seed);
  for (auto& [label, ids] : groups) {
    rng.shuffle(std::span(ids));
    const auto counts = split_counts(ids.size(), ratios);
    std::size_t pos = 0;
    for (auto split : kAllSplits) {
      const auto count = counts[static_cast<std::size_t>(split)];
      auto& dest = out.assignment[split];
      dest.insert(dest.end(), ids.begin() + static_cast<std::ptrdiff_t>(pos),
                  ids.begin() + static_cast<std::ptrdiff_t>(pos + count));
      pos += count;
    }
  }
  out.assignment.canonicalize();
  for (auto split : kAllSplits) {
    if (ratios[static_cast<std::size_t>(split)] > 0 && out.assignment[split].empty()) {
      out.warnings.push_back(std::string(to_string(split)) + " split is empty (" +
                             std::to_string(out.assignment.total()) + " videos)");
    }
  }
  return out;
}

namespace {

json assignment_json(const SplitAssignment& a) {
  SplitAssignment sorted = a;
  sorted.canonicalize();
  json j = json::object();
  for (auto split : kAllSplits) j[std::string(to_string(split))] = sorted[split];
  return j;
}

SplitAssignment assignment_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::kParse, "assignment must be an object");
  SplitAssignment a;
  for (const auto& [key, value] : j.items()) {
    a[parse_split_name(key)] = value.get<std::vector<std::string>>();
  }
  a.canonicalize();
  return a;
}

}  // namespace

std::string canonical_assignment(const SplitAssignment& assignment) {
  return assignment_json(assignment).dump();
}

std::string version_manifest(const SplitManifest& manifest) {
  return to_hex(sha256(canonical_assignment(manifest.assignment)));
}

SplitManifest resolve_manifest(std::string dataset_id, const std::vector<std::string>& video_ids,
                               const std::optional<SplitAssignment>& official,
                               const std::optional<SplitAssignment>& community,
                               const SplitRatios& ratios, std::uint64_t seed,
                               std::string created_at, std::vector<std::string>* warnings) {
  SplitManifest m;
  m.dataset_id = std::move(dataset_id);
  m.created_at = std::move(created_at);
  m.tier = resolve_tier(official.has_value(), community.has_value());
  switch (m.tier) {
    case SplitTier::kOfficial: m.assignment = *official; break;
    case SplitTier::kCommunity: m.assignment = *community; break;
    case SplitTier::kOurs: {
      RatioSplit split = ratio_split(video_ids, ratios, seed);
      m.assignment = std::move(split.assignment);
      m.seed = seed;
      m.ratios = ratios;
      if (warnings != nullptr) *warnings = std::move(split.warnings);
      break;
    }
  }
  m.assignment.canonicalize();
  m.version = version_manifest(m);
  return m;
}

json to_json(const SplitManifest& m) {
  json j{{"dataset_id", m.dataset_id},
         {"tier", to_string(m.tier)},
         {"assignment", assignment_json(m.assignment)},
         {"version", m.version},
         {"created_at", m.created_at}};
  if (m.seed) j["seed"] = *m.seed;
  if (m.ratios) j["ratios"] = format_ratios(*m.ratios);
  return j;
}

SplitManifest manifest_from_json(const json& j) {
  try {
    SplitManifest m;
    m.dataset_id = j.at("dataset_id").get<std::string>();
    m.tier = parse_tier(j.at("tier").get<std::string>());
    m.assignment = assignment_from_json(j.at("assignment"));
    m.version = j.at("version").get<std::string>();
    m.created_at = j.value("created_at", "");
    if (j.contains("seed")) m.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("ratios")) m.ratios = parse_ratios(j.at("ratios").get<std::string>());
    return m;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("split manifest: ") + e.what());
  }
}

std::string canonical_manifest(const SplitManifest& manifest) { return to_json(manifest).dump(); }

void write_split_manifest(const std::filesystem::path& path, const SplitManifest& manifest) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << canonical_manifest(manifest) << '\n';
}

namespace {

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kInputMissing, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, path.string() + ": " + e.what());
  }
}

}  // namespace

SplitManifest read_split_manifest(const std::filesystem::path& path) {
  return manifest_from_json(read_json_file(path));
}

SplitAssignment read_assignment_file(const std::filesystem::path& path) {
  try {
    return assignment_from_json(read_json_file(path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, path.string() + ": " + e.what());
  }
}

std::vector<SplitViolation> verify_disjoint(const SplitManifest& manifest, const CorpusIndex& corpus) {
  std::vector<SplitViolation> out;

  std::map<std::string, std::vector<SplitName>> seen;
  for (auto split : kAllSplits) {
    for (const auto& id : manifest.assignment[split]) seen[id].push_back(split);
  }
  for (const auto& [id, splits] : seen) {
    if (splits.size() < 2) continue;
    std::string list;
    for (auto s : splits) list += (list.empty() ? "" : ", ") + std::string(to_string(s));
    out.push_back({SplitViolationKind::kMultipleAssignment, id,
                   "video '" + id + "' assigned more than once (" + list + ")"});
  }

  std::set<std::string> unassigned;
  for (const auto& v : corpus.manifest().videos) {
    if (v.dataset_id == manifest.dataset_id && !seen.contains(v.video_id)) unassigned.insert(v.video_id);
  }
  for (const auto& c : corpus.manifest().clips) {
    const VideoRecord* parent = corpus.find_video(c.video_id);
    if (parent != nullptr && parent->dataset_id == manifest.dataset_id && !seen.contains(c.video_id)) {
      unassigned.insert(c.video_id);
    }
  }
  for (const auto& id : unassigned) {
    out.push_back({SplitViolationKind::kUnassignedVideo, id, "unassigned video '" + id + "'"});
  }

  const std::string expected = version_manifest(manifest);
  if (manifest.version != expected) {
    out.push_back({SplitViolationKind::kVersionMismatch, "",
                   "version " + manifest.version + " does not match payload hash " + expected});
  }
  return out;
}

}  // namespace surgcurate
