#include "surgcurate/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "surgcurate/error.hpp"

namespace surgcurate {

using nlohmann::json;

std::string_view to_string(SourceStream s) noexcept {
  switch (s) {
    case SourceStream::kPublicClinical: return "PublicClinical";
    case SourceStream::kWebEducational: return "WebEducational";
    case SourceStream::kPrivate: return "Private";
  }
  return "?";
}

std::string_view to_string(Domain d) noexcept {
  switch (d) {
    case Domain::kLaparoscopy: return "Laparoscopy";
    case Domain::kEndoscopy: return "Endoscopy";
    case Domain::kCataract: return "Cataract";
    case Domain::kRobotic: return "Robotic";
    case Domain::kMixed: return "Mixed";
  }
  return "?";
}

SourceStream parse_source(std::string_view tag) {
  for (auto s : kAllSources) {
    if (to_string(s) == tag) return s;
  }
  throw Error(ErrorCode::kParse, "unknown source stream '" + std::string(tag) + "'");
}

Domain parse_domain(std::string_view tag) {
  for (auto d : kAllDomains) {
    if (to_string(d) == tag) return d;
  }
  throw Error(ErrorCode::kParse, "unknown domain '" + std::string(tag) + "'");
}

namespace {

std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

void check_fields(const json& obj, std::initializer_list<std::string_view> allowed) {
  for (const auto& [key, _] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw Error(ErrorCode::kParse, "unknown field '" + key + "'");
    }
  }
}

const json& require(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) throw Error(ErrorCode::kParse, std::string("missing field '") + key + "'");
  return *it;
}

std::string require_string(const json& obj, const char* key) {
  const json& v = require(obj, key);
  if (!v.is_string()) throw Error(ErrorCode::kParse, std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

std::uint64_t require_u64(const json& obj, const char* key) {
  const json& v = require(obj, key);
  if (!v.is_number_unsigned()) {
    throw Error(ErrorCode::kParse, std::string("field '") + key + "' must be a nonnegative integer");
  }
  return v.get<std::uint64_t>();
}

Rational parse_fps(const json& v) {
  Rational fps;
  if (v.is_string()) {
    fps = parse_rational(v.get<std::string>());
  } else if (v.is_number()) {
    fps = parse_rational(v.dump());
  } else {
    throw Error(ErrorCode::kParse, "field 'fps' must be a number or a rational string");
  }
  if (fps <= 0) throw Error(ErrorCode::kParse, "field 'fps' must be positive");
  return fps;
}

VideoRecord parse_video(const json& obj) {
  check_fields(obj, {"kind", "video_id", "source", "dataset_id", "domain", "frame_count", "fps",
                     "duration_s"});
  VideoRecord v;
  v.video_id = require_string(obj, "video_id");
  v.source = parse_source(require_string(obj, "source"));
  v.dataset_id = require_string(obj, "dataset_id");
  v.domain = parse_domain(require_string(obj, "domain"));
  v.frame_count = require_u64(obj, "frame_count");
  v.fps = parse_fps(require(obj, "fps"));
  const json& dur = require(obj, "duration_s");
  if (!dur.is_number() || dur.get<double>() < 0.0 || !std::isfinite(dur.get<double>())) {
    throw Error(ErrorCode::kParse, "field 'duration_s' must be a nonnegative number");
  }
  v.duration_s = dur.get<double>();
  return v;
}

ClipRecord parse_clip(const json& obj) {
  check_fields(obj, {"kind", "clip_id", "video_id", "start_frame", "end_frame", "embedding_row"});
  ClipRecord c;
  c.clip_id = require_string(obj, "clip_id");
  c.video_id = require_string(obj, "video_id");
  c.start_frame = require_u64(obj, "start_frame");
  c.end_frame = require_u64(obj, "end_frame");
  if (auto it = obj.find("embedding_row"); it != obj.end() && !it->is_null()) {
    c.embedding_row = require_u64(obj, "embedding_row");
  }
  return c;
}

}  // namespace

json to_json(const VideoRecord& v) {
  json fps = v.fps.denominator() == 1 ? json(v.fps.numerator())
                                      : json(std::to_string(v.fps.numerator()) + "/" +
                                             std::to_string(v.fps.denominator()));
  return json{{"kind", "video"},
              {"video_id", v.video_id},
              {"source", to_string(v.source)},
              {"dataset_id", v.dataset_id},
              {"domain", to_string(v.domain)},
              {"frame_count", v.frame_count},
              {"fps", fps},
              {"duration_s", v.duration_s}};
}

json to_json(const ClipRecord& c) {
  json j{{"kind", "clip"},
         {"clip_id", c.clip_id},
         {"video_id", c.video_id},
         {"start_frame", c.start_frame},
         {"end_frame", c.end_frame}};
  if (c.embedding_row) j["embedding_row"] = *c.embedding_row;
  return j;
}

CorpusManifest parse_manifest(std::istream& in) {
  CorpusManifest m;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      json obj = json::parse(line);
      if (!obj.is_object()) throw Error(ErrorCode::kParse, "record is not a JSON object");
      const std::string kind = require_string(obj, "kind");
      if (kind == "video") {
        m.videos.push_back(parse_video(obj));
      } else if (kind == "clip") {
        m.clips.push_back(parse_clip(obj));
      } else if (kind == "meta") {
        obj.erase("kind");
        m.meta.update(obj);
      } else {
        throw Error(ErrorCode::kParse, "unknown record kind '" + kind + "'");
      }
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kParse, "manifest line " + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(e.code(), "manifest line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return m;
}

CorpusManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kInputMissing, "cannot open corpus manifest " + path.string());
  return parse_manifest(in);
}

void write_manifest(std::ostream& out, const CorpusManifest& manifest) {
  if (!manifest.meta.empty()) {
    json meta = manifest.meta;
    meta["kind"] = "meta";
    out << meta.dump() << '\n';
  }
  for (const auto& v : manifest.videos) out << to_json(v).dump() << '\n';
  for (const auto& c : manifest.clips) out << to_json(c).dump() << '\n';
}

CorpusIndex::CorpusIndex(const CorpusManifest& manifest) : manifest_(&manifest) {
  for (std::size_t i = 0; i < manifest.videos.size(); ++i) {
    videos_[manifest.videos[i].video_id].push_back(i);
  }
  for (const auto& c : manifest.clips) ++clip_counts_[c.clip_id];
}

const VideoRecord* CorpusIndex::find_video(std::string_view video_id) const {
  auto it = videos_.find(std::string(video_id));
  if (it == videos_.end()) return nullptr;
  return &manifest_->videos[it->second.front()];
}

std::size_t CorpusIndex::video_id_count(std::string_view video_id) const {
  auto it = videos_.find(std::string(video_id));
  return it == videos_.end() ? 0 : it->second.size();
}

std::size_t CorpusIndex::clip_id_count(std::string_view clip_id) const {
  auto it = clip_counts_.find(std::string(clip_id));
  return it == clip_counts_.end() ? 0 : it->second;
}

void ValidationReport::merge(ValidationReport other) {
  std::move(other.violations.begin(), other.violations.end(), std::back_inserter(violations));
  std::move(other.warnings.begin(), other.warnings.end(), std::back_inserter(warnings));
}

ValidationReport validate_record(const VideoRecord& video, const CorpusIndex& corpus) {
  ValidationReport report;
  if (corpus.video_id_count(video.video_id) > 1) {
    report.violations.push_back({ViolationKind::kDuplicateId, video.video_id, "duplicate id"});
  }
  const double expected = to_double(video.fps) * video.duration_s;
  if (std::abs(static_cast<double>(video.frame_count) - expected) > video.duration_s + 1e-9) {
    std::ostringstream msg;
    msg << "frame_count " << video.frame_count << " inconsistent with fps x duration = " << expected;
    report.warnings.push_back({ViolationKind::kFrameCountMismatch, video.video_id, msg.str()});
  }
  return report;
}

ValidationReport validate_record(const ClipRecord& clip, const CorpusIndex& corpus) {
  ValidationReport report;
  if (corpus.clip_id_count(clip.clip_id) > 1) {
    report.violations.push_back({ViolationKind::kDuplicateId, clip.clip_id, "duplicate id"});
  }
  const VideoRecord* parent = corpus.find_video(clip.video_id);
  if (parent == nullptr) {
    report.violations.push_back(
        {ViolationKind::kDanglingReference, clip.clip_id, "dangling foreign key"});
  } else if (clip.start_frame >= clip.end_frame || clip.end_frame > parent->frame_count) {
    report.violations.push_back(
        {ViolationKind::kIntervalOutOfRange, clip.clip_id, "interval out of range"});
  }
  return report;
}

ValidationReport validate_corpus(const CorpusIndex& corpus) {
  ValidationReport report;
  std::set<std::string> seen_videos;
  std::set<std::string> seen_clips;
  for (const auto& v : corpus.manifest().videos) {
    ValidationReport r = validate_record(v, corpus);
    if (!seen_videos.insert(v.video_id).second) r.violations.clear();
    report.merge(std::move(r));
  }
  for (const auto& c : corpus.manifest().clips) {
    ValidationReport r = validate_record(c, corpus);
    if (!seen_clips.insert(c.clip_id).second) {
      std::erase_if(r.violations,
                    [](const Violation& v) { return v.kind == ViolationKind::kDuplicateId; });
    }
    report.merge(std::move(r));
  }
  return report;
}

DomainMap::DomainMap(std::map<std::string, Domain> entries) {
  for (auto& [k, v] : entries) entries_[lowercase(k)] = v;
}

DomainMap DomainMap::builtin() {
  using D = Domain;
  return DomainMap({
      {"aixsuture", D::kLaparoscopy},
      {"autolaparo", D::kLaparoscopy},
      {"cholec80", D::kLaparoscopy},
      {"cholect45", D::kLaparoscopy},
      {"cholect50", D::kLaparoscopy},
      {"endoscapes-cvs", D::kLaparoscopy},
      {"heichole", D::kLaparoscopy},
      {"m2cai16", D::kLaparoscopy},
      {"multibypass140", D::kLaparoscopy},
      {"pmlr50", D::kLaparoscopy},
      {"simsurgskill2021", D::kLaparoscopy},
      {"surgicalactions160", D::kLaparoscopy},
      {"lapgyn4", D::kLaparoscopy},
      {"colonoscopic", D::kEndoscopy},
      {"cvc-12k", D::kEndoscopy},
      {"cvc-clinicdb", D::kEndoscopy},
      {"endovis2019", D::kEndoscopy},
      {"hyperkvasir", D::kEndoscopy},
      {"kumc", D::kEndoscopy},
      {"kvasir-capsule", D::kEndoscopy},
      {"ldpolypvideo", D::kEndoscopy},
      {"pitvis", D::kEndoscopy},
      {"polypdiag", D::kEndoscopy},
      {"polypsset", D::kEndoscopy},
      {"cataracts-1k", D::kCataract},
      {"cataract-101", D::kCataract},
      {"cataract-21", D::kCataract},
      {"grasp", D::kRobotic},
      {"jigsaws", D::kRobotic},
      {"psi-ava", D::kRobotic},
      {"sar-rarp50", D::kRobotic},
      {"avos", D::kMixed},
  });
}

DomainMap DomainMap::load(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw Error(ErrorCode::kInputMissing, "domain map not found: " + path.string());
  }
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(path.string(), tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw Error(ErrorCode::kParse, std::string("domain map: ") + e.what());
  }
  DomainMap map;
  for (const auto& [section, body] : tree) {
    if (section != "datasets") {
      throw Error(ErrorCode::kConfigError, "domain map: unknown section [" + section + "]");
    }
    for (const auto& [key, value] : body) map.set(key, parse_domain(value.data()));
  }
  return map;
}

void DomainMap::set(std::string dataset_id, Domain domain) {
  entries_[lowercase(dataset_id)] = domain;
}

Domain domain_of(std::string_view dataset_id, const DomainMap& mapping) {
  auto it = mapping.entries().find(lowercase(dataset_id));
  if (it == mapping.entries().end()) {
    throw Error(ErrorCode::kUnknownDataset, "unknown dataset '" + std::string(dataset_id) + "'");
  }
  return it->second;
}

StatsCell CorpusStats::by_source(SourceStream s) const {
  StatsCell out;
  for (const auto& [key, cell] : cells) {
    if (key.first == s) out += cell;
  }
  return out;
}

StatsCell CorpusStats::by_domain(Domain d) const {
  StatsCell out;
  for (const auto& [key, cell] : cells) {
    if (key.second == d) out += cell;
  }
  return out;
}

CorpusStats corpus_stats(const CorpusManifest& manifest) {
  CorpusStats stats;
  std::unordered_map<std::string, std::pair<SourceStream, Domain>> cell_of;
  for (const auto& v : manifest.videos) {
    const auto key = std::make_pair(v.source, v.domain);
    cell_of.emplace(v.video_id, key);
    auto& cell = stats.cells[key];
    ++cell.video_count;
    cell.frame_sum += v.frame_count;
  }
  for (const auto& c : manifest.clips) {
    auto it = cell_of.find(c.video_id);
    if (it == cell_of.end()) continue;
    ++stats.cells[it->second].clip_count;
  }
  for (const auto& [_, cell] : stats.cells) stats.totals += cell;
  return stats;
}

namespace {

// 10535 -> "10.5K", 214500000 -> "214.5M".
std::string human_count(std::uint64_t n) {
  if (n < 1000) return std::to_string(n);
  const bool millions = n >= 1'000'000;
  const auto unit = static_cast<std::int64_t>(millions ? 1'000'000 : 1'000);
  return format_fixed(Rational(static_cast<std::int64_t>(n), unit), 1) + (millions ? "M" : "K");
}

struct ScaleRow {
  const char* method;
  const char* focus;
  const char* scale;
};

constexpr ScaleRow kPublishedScale[] = {
    {"EndoDINO", "GI Endoscopy", "100K -- 10M images"},
    {"SurgeNetXL", "General Surgery", ">4.7M frames"},
    {"SurgBench-P", "Surgery (11 specialties)", "53M frames"},
    {"EndoMamba", "Endoscopy", "75K clips / 11.3M frames"},
    {"SurgVLP", "Surgical Lectures", "1,400 videos"},
    {"SurgVISTA", "Surgery (>20 procedures)", "3.6K videos / 3.55M frames"},
    {"UniSurg", "Universal Surgery", "3,658 hours"},
};

}  // namespace

std::string render_inventory_markdown(const CorpusStats& stats) {
  std::ostringstream out;
  out << "| Source | Domain | Videos | Clips | Frames |\n";
  out << "|---|---|---:|---:|---:|\n";
  for (const auto& [key, cell] : stats.cells) {
    out << "| " << to_string(key.first) << " | " << to_string(key.second) << " | "
        << cell.video_count << " | " << cell.clip_count << " | " << cell.frame_sum << " |\n";
  }
  out << "| **Total** | | " << stats.totals.video_count << " | " << stats.totals.clip_count << " | "
      << stats.totals.frame_sum << " |\n\n";

  std::set<Domain> present;
  for (const auto& [key, cell] : stats.cells) {
    if (key.second != Domain::kMixed && cell.video_count > 0) present.insert(key.second);
  }

  out << "| Method | Domain Focus | Reported Scale |\n";
  out << "|---|---|---|\n";
  for (const auto& row : kPublishedScale) {
    out << "| " << row.method << " | " << row.focus << " | " << row.scale << " |\n";
  }
  out << "| **This corpus** | Multi-Domain (" << present.size() << " major) | "
      << human_count(stats.totals.video_count) << " videos / " << human_count(stats.totals.frame_sum)
      << " frames |\n";
  return out.str();
}

FrameSize resize_shortest_side(FrameSize frame, std::uint32_t target) {
  if (frame.width == 0 || frame.height == 0 || target == 0) {
    throw Error(ErrorCode::kZeroDimension, "frame dimensions must be >= 1");
  }
  auto scale = [target](std::uint32_t long_side, std::uint32_t short_side) {
    return static_cast<std::uint32_t>(round_half_away(
        Rational(static_cast<std::int64_t>(long_side) * target, short_side)));
  };
  if (frame.width <= frame.height) return {target, scale(frame.height, frame.width)};
  return {scale(frame.width, frame.height), target};
}

CropRect random_crop_rect(FrameSize frame, Rng& rng, std::uint32_t size) {
  if (frame.width < size || frame.height < size) {
    throw Error(ErrorCode::kFrameTooSmall, "frame " + std::to_string(frame.width) + "x" +
                                               std::to_string(frame.height) +
                                               " smaller than crop " + std::to_string(size));
  }
  const auto x = static_cast<std::uint32_t>(rng.uniform_index(frame.width - size + 1ULL));
  const auto y = static_cast<std::uint32_t>(rng.uniform_index(frame.height - size + 1ULL));
  return {x, y, size};
}

}  // namespace surgcurate
