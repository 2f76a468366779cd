#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace surgcurate {

class CorpusIndex;

enum class SplitTier { kOfficial, kCommunity, kOurs };
enum class SplitName { kTrain = 0, kVal = 1, kTest = 2 };

inline constexpr std::array<SplitName, 3> kAllSplits = {SplitName::kTrain, SplitName::kVal,
                                                        SplitName::kTest};

std::string_view to_string(SplitTier tier) noexcept;
std::string_view to_string(SplitName split) noexcept;
SplitTier parse_tier(std::string_view text);
SplitName parse_split_name(std::string_view text);

using SplitRatios = std::array<std::uint32_t, 3>;
inline constexpr SplitRatios kDefaultRatios = {7, 2, 1};

// "7:2:1" -> {7, 2, 1}.
SplitRatios parse_ratios(std::string_view text);
std::string format_ratios(const SplitRatios& ratios);

// Video ids per split, each list sorted. A video listed twice is kept as-is so
// that verification can report it.
struct SplitAssignment {
  std::array<std::vector<std::string>, 3> members;

  std::vector<std::string>& operator[](SplitName s) { return members[static_cast<std::size_t>(s)]; }
  const std::vector<std::string>& operator[](SplitName s) const {
    return members[static_cast<std::size_t>(s)];
  }
  std::size_t total() const { return members[0].size() + members[1].size() + members[2].size(); }
  void canonicalize();
  bool operator==(const SplitAssignment&) const = default;
};

struct SplitManifest {
  std::string dataset_id;
  SplitTier tier = SplitTier::kOurs;
  SplitAssignment assignment;
  std::optional<std::uint64_t> seed;       // tier Ours only
  std::optional<SplitRatios> ratios;       // tier Ours only
  std::string version;                     // 64 hex chars
  std::string created_at;
};

SplitTier resolve_tier(bool has_official, bool has_community);

// Target sizes: largest remainder of ratio_i / sum(ratios) * n with ties
// Train > Val > Test.
std::array<std::uint64_t, 3> split_counts(std::uint64_t n, const SplitRatios& ratios);

struct RatioSplit {
  SplitAssignment assignment;
  std::vector<std::string> warnings;
};

// Sorts and shuffles the ids with `seed`, then fills Train, Val, Test in
// order. With `strata` (video_id -> label), each stratum is split separately.
// Throws EmptyDataset on no videos.
RatioSplit ratio_split(std::vector<std::string> video_ids, const SplitRatios& ratios,
                       std::uint64_t seed,
                       const std::map<std::string, std::string>* strata = nullptr);

// Canonical assignment payload: {"test":[...],"train":[...],"val":[...]} with
// sorted keys, sorted lists and no whitespace.
std::string canonical_assignment(const SplitAssignment& assignment);

// SHA-256 (hex) of canonical_assignment().
std::string version_manifest(const SplitManifest& manifest);

// Selects the highest available tier and produces a versioned manifest. The
// official or community assignment is used verbatim when chosen.
SplitManifest resolve_manifest(std::string dataset_id, const std::vector<std::string>& video_ids,
                               const std::optional<SplitAssignment>& official,
                               const std::optional<SplitAssignment>& community,
                               const SplitRatios& ratios, std::uint64_t seed,
                               std::string created_at,
                               std::vector<std::string>* warnings = nullptr);

nlohmann::json to_json(const SplitManifest& manifest);
SplitManifest manifest_from_json(const nlohmann::json& j);
// Canonical JSON text (sorted keys, no insignificant whitespace).
std::string canonical_manifest(const SplitManifest& manifest);
void write_split_manifest(const std::filesystem::path& path, const SplitManifest& manifest);
SplitManifest read_split_manifest(const std::filesystem::path& path);

// External split files: JSON {"train":[...],"val":[...],"test":[...]}.
SplitAssignment read_assignment_file(const std::filesystem::path& path);

enum class SplitViolationKind { kMultipleAssignment, kUnassignedVideo, kVersionMismatch };

struct SplitViolation {
  SplitViolationKind kind;
  std::string video_id;
  std::string message;
};

// Checks that no video sits in two splits (or twice in one) and that every
// video of the manifest's dataset in the corpus, and so every clip of it, is
// assigned. Unassigned videos are reported once each. Also flags a stale
// version string.
std::vector<SplitViolation> verify_disjoint(const SplitManifest& manifest, const CorpusIndex& corpus);

}  // namespace surgcurate
