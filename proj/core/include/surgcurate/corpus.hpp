#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "surgcurate/random.hpp"
#include "surgcurate/rational.hpp"

namespace surgcurate {

enum class SourceStream { kPublicClinical, kWebEducational, kPrivate };

enum class Domain { kLaparoscopy, kEndoscopy, kCataract, kRobotic, kMixed };

inline constexpr std::array<SourceStream, 3> kAllSources = {
    SourceStream::kPublicClinical, SourceStream::kWebEducational, SourceStream::kPrivate};
inline constexpr std::array<Domain, 5> kAllDomains = {
    Domain::kLaparoscopy, Domain::kEndoscopy, Domain::kCataract, Domain::kRobotic, Domain::kMixed};
// Macro-averaged evaluation uses these four only.
inline constexpr std::array<Domain, 4> kClinicalDomains = {
    Domain::kLaparoscopy, Domain::kEndoscopy, Domain::kCataract, Domain::kRobotic};

std::string_view to_string(SourceStream s) noexcept;
std::string_view to_string(Domain d) noexcept;
SourceStream parse_source(std::string_view tag);
Domain parse_domain(std::string_view tag);

struct VideoRecord {
  std::string video_id;
  SourceStream source = SourceStream::kPublicClinical;
  std::string dataset_id;
  Domain domain = Domain::kLaparoscopy;
  std::uint64_t frame_count = 0;
  Rational fps{25};
  double duration_s = 0.0;
};

struct ClipRecord {
  std::string clip_id;
  std::string video_id;
  std::uint64_t start_frame = 0;
  std::uint64_t end_frame = 0;
  std::optional<std::uint64_t> embedding_row;
};

// One JSON-lines corpus manifest. `meta` holds the optional leading
// {"kind":"meta", ...} line (clipping scheme and similar free-form notes).
struct CorpusManifest {
  std::vector<VideoRecord> videos;
  std::vector<ClipRecord> clips;
  nlohmann::json meta = nlohmann::json::object();
};

CorpusManifest parse_manifest(std::istream& in);
CorpusManifest read_manifest(const std::filesystem::path& path);
void write_manifest(std::ostream& out, const CorpusManifest& manifest);

nlohmann::json to_json(const VideoRecord& v);
nlohmann::json to_json(const ClipRecord& c);

// Build-once lookup over a manifest; read-shared afterwards.
class CorpusIndex {
 public:
  explicit CorpusIndex(const CorpusManifest& manifest);

  const VideoRecord* find_video(std::string_view video_id) const;
  std::size_t video_id_count(std::string_view video_id) const;
  std::size_t clip_id_count(std::string_view clip_id) const;
  const CorpusManifest& manifest() const noexcept { return *manifest_; }

 private:
  const CorpusManifest* manifest_;
  std::unordered_map<std::string, std::vector<std::size_t>> videos_;
  std::unordered_map<std::string, std::size_t> clip_counts_;
};

enum class ViolationKind { kDuplicateId, kDanglingReference, kIntervalOutOfRange, kFrameCountMismatch };

struct Violation {
  ViolationKind kind;
  std::string record_id;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;
  // Metadata inconsistencies that do not invalidate the record.
  std::vector<Violation> warnings;

  bool ok() const noexcept { return violations.empty(); }
  void merge(ValidationReport other);
};

ValidationReport validate_record(const VideoRecord& video, const CorpusIndex& corpus);
ValidationReport validate_record(const ClipRecord& clip, const CorpusIndex& corpus);
// Each duplicated id is reported once, not once per occurrence.
ValidationReport validate_corpus(const CorpusIndex& corpus);

// Dataset -> domain lookup table. Keys are lowercase dataset ids.
class DomainMap {
 public:
  DomainMap() = default;
  explicit DomainMap(std::map<std::string, Domain> entries);

  // The public datasets named in the corpus description, plus LapGyn4
  // (benchmark-only, laparoscopic).
  static DomainMap builtin();
  // INI file with a [datasets] section of `dataset_id = Domain` lines.
  static DomainMap load(const std::filesystem::path& path);

  void set(std::string dataset_id, Domain domain);
  const std::map<std::string, Domain>& entries() const noexcept { return entries_; }

 private:
  std::map<std::string, Domain> entries_;
};

Domain domain_of(std::string_view dataset_id, const DomainMap& mapping);

struct StatsCell {
  std::uint64_t video_count = 0;
  std::uint64_t clip_count = 0;
  std::uint64_t frame_sum = 0;

  StatsCell& operator+=(const StatsCell& o) {
    video_count += o.video_count;
    clip_count += o.clip_count;
    frame_sum += o.frame_sum;
    return *this;
  }
  bool operator==(const StatsCell&) const = default;
};

struct CorpusStats {
  std::map<std::pair<SourceStream, Domain>, StatsCell> cells;
  StatsCell totals;

  StatsCell by_source(SourceStream s) const;
  StatsCell by_domain(Domain d) const;
};

// Clips whose parent video is absent are not counted.
CorpusStats corpus_stats(const CorpusManifest& manifest);

// Inventory table per (source, domain) followed by the published scale
// comparison with this corpus appended as the last row.
std::string render_inventory_markdown(const CorpusStats& stats);

struct FrameSize {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  bool operator==(const FrameSize&) const = default;
};

struct CropRect {
  std::uint32_t x = 0;
  std::uint32_t y = 0;
  std::uint32_t size = 0;
  bool operator==(const CropRect&) const = default;
};

inline constexpr std::uint32_t kShortSideTarget = 320;
inline constexpr std::uint32_t kCropSize = 224;

// Scales so the short side equals `target`; the long side is rounded half
// away from zero.
FrameSize resize_shortest_side(FrameSize frame, std::uint32_t target = kShortSideTarget);

// Uniform crop offset; x is drawn before y.
CropRect random_crop_rect(FrameSize frame, Rng& rng, std::uint32_t size = kCropSize);

}  // namespace surgcurate
