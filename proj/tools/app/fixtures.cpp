#include "surgcurate_app/fixtures.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "surgcurate/error.hpp"
#include "surgcurate/random.hpp"

namespace surgcurate::fixtures {

namespace fs = std::filesystem;

namespace {

std::string padded(std::size_t value, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%0*zu", width, value);
  return buf;
}

void push_point(std::vector<float>& data, std::size_t blob, std::size_t dim, double spacing, double sigma,
                Rng& rng) {
  for (std::size_t i = 0; i < dim; ++i) {
    const double center = i < 64 && ((blob >> i) & 1U) ? spacing : 0.0;
    data.push_back(static_cast<float>(center + sigma * gaussian(rng)));
  }
}

VideoRecord video(std::string id, SourceStream source, std::string dataset, Domain domain,
                  std::uint64_t frames) {
  VideoRecord v;
  v.video_id = std::move(id);
  v.source = source;
  v.dataset_id = std::move(dataset);
  v.domain = domain;
  v.frame_count = frames;
  v.fps = Rational(25);
  v.duration_s = static_cast<double>(frames) / 25.0;
  return v;
}

// Spreads `frames` over `count` videos; the first (frames % count) get one extra.
std::uint64_t share(std::uint64_t frames, std::uint64_t count, std::uint64_t i) {
  return frames / count + (i < frames % count ? 1 : 0);
}

}  // namespace

double gaussian(Rng& rng) {
  const double u1 = 1.0 - rng.uniform_unit();
  const double u2 = rng.uniform_unit();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

EmbeddingMatrix make_blobs(const BlobSpec& spec) {
  Rng rng(spec.seed);
  std::vector<float> data;
  std::vector<std::string> ids;
  for (std::size_t b = 0; b < spec.sizes.size(); ++b) {
    for (std::size_t i = 0; i < spec.sizes[b]; ++i) {
      push_point(data, b, spec.dim, spec.spacing, spec.sigma, rng);
      ids.push_back(spec.prefix + padded(b, 2) + "-" + padded(i, 5));
    }
  }
  return EmbeddingMatrix(spec.dim, std::move(data), std::move(ids));
}

EmbeddingMatrix make_four_blob_fixture() {
  BlobSpec spec;
  spec.sizes = {40, 40, 40, 280};
  spec.dim = 2;
  spec.seed = 4;
  return make_blobs(spec);
}

PipelineFixture make_pipeline_fixture(std::uint64_t seed) {
  constexpr std::size_t kClipsPerVideo = 10;
  constexpr std::uint64_t kFrames = 1600;
  // Videos per web topic; 160 in total, heavily skewed.
  const std::vector<std::size_t> web_topics = {60, 30, 20, 10, 10, 8, 6, 5, 4, 3, 2, 2};
  const std::vector<std::pair<std::string, Domain>> clinical = {
      {"cholec80", Domain::kLaparoscopy},
      {"cataract-101", Domain::kCataract},
      {"hyperkvasir", Domain::kEndoscopy},
      {"jigsaws", Domain::kRobotic}};
  constexpr std::size_t kClinicalVideos = 10;

  PipelineFixture f;
  Rng rng(seed);
  std::vector<float> data;
  std::vector<std::string> ids;
  auto add_clips = [&](const VideoRecord& v, std::size_t blob) {
    for (std::size_t c = 0; c < kClipsPerVideo; ++c) {
      ClipRecord clip;
      clip.clip_id = v.video_id + "-c" + padded(c, 2);
      clip.video_id = v.video_id;
      clip.start_frame = c * (kFrames / kClipsPerVideo);
      clip.end_frame = clip.start_frame + 16;
      clip.embedding_row = ids.size();
      push_point(data, blob, kPipelineDim, 4.0, 0.6, rng);
      ids.push_back(clip.clip_id);
      if (v.source == SourceStream::kPublicClinical) f.clinical.push_back(clip.clip_id);
      f.corpus.clips.push_back(std::move(clip));
    }
  };

  std::size_t web_index = 0;
  for (std::size_t topic = 0; topic < web_topics.size(); ++topic) {
    const auto domain = kAllDomains[topic % kAllDomains.size()];
    for (std::size_t i = 0; i < web_topics[topic]; ++i) {
      auto v = video("web-v" + padded(web_index++, 4), SourceStream::kWebEducational, "web-educational",
                     domain, kFrames);
      add_clips(v, topic);
      f.corpus.videos.push_back(std::move(v));
    }
  }
  for (std::size_t d = 0; d < clinical.size(); ++d) {
    for (std::size_t i = 0; i < kClinicalVideos; ++i) {
      auto v = video(clinical[d].first + "-v" + padded(i, 2), SourceStream::kPublicClinical,
                     clinical[d].first, clinical[d].second, kFrames);
      add_clips(v, web_topics.size() + d);
      f.corpus.videos.push_back(std::move(v));
    }
  }
  f.corpus.meta = {{"fixture", "pipeline"}, {"seed", seed}};
  f.embeddings = EmbeddingMatrix(kPipelineDim, std::move(data), std::move(ids));
  return f;
}

void write_pipeline_fixture(const PipelineFixture& f, const fs::path& dir) {
  fs::create_directories(dir / "blobs");
  {
    std::ofstream out(dir / "corpus.jsonl", std::ios::binary);
    write_manifest(out, f.corpus);
  }
  {
    const auto rows = f.embeddings.rows();
    const auto half = rows / 2;
    const auto data = f.embeddings.data();
    const auto dim = f.embeddings.dim();
    std::ofstream a(dir / "blobs" / "part-000.f32", std::ios::binary);
    a.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(half * dim * sizeof(float)));
    std::ofstream b(dir / "blobs" / "part-001.f32", std::ios::binary);
    b.write(reinterpret_cast<const char*>(data.data() + half * dim),
            static_cast<std::streamsize>((rows - half) * dim * sizeof(float)));
  }
  {
    std::ofstream out(dir / "ids.txt", std::ios::binary);
    for (const auto& id : f.embeddings.row_ids()) out << id << '\n';
  }
  {
    std::ofstream out(dir / "clinical.txt", std::ios::binary);
    for (const auto& id : f.clinical) out << id << '\n';
  }
  {
    std::ofstream out(dir / "strata.csv", std::ios::binary);
    out << "video_id,label\n";
    std::size_t i = 0;
    for (const auto& v : f.corpus.videos) {
      if (v.source == SourceStream::kPublicClinical) out << v.video_id << ',' << (i++ % 3 == 0 ? "rare" : "common") << '\n';
    }
  }
  write_store(f.embeddings, dir / "store.semb");
}

CorpusManifest make_public_subset_manifest() {
  CorpusManifest m;
  const auto builtin = DomainMap::builtin();
  const std::vector<std::pair<std::string, Domain>> datasets(builtin.entries().begin(), builtin.entries().end());
  for (std::uint64_t i = 0; i < kPublicVideos; ++i) {
    const auto& [dataset, domain] = datasets[i % datasets.size()];
    m.videos.push_back(video("pub-" + padded(i, 5), SourceStream::kPublicClinical, dataset, domain,
                             share(kPublicFrames, kPublicVideos, i)));
  }
  m.meta = {{"fixture", "public-subset"}};
  return m;
}

CorpusManifest make_inventory_totals_manifest() {
  CorpusManifest m = make_public_subset_manifest();
  for (std::uint64_t i = 0; i < kWebVideos; ++i) {
    m.videos.push_back(video("web-" + padded(i, 5), SourceStream::kWebEducational, "web-educational",
                             kAllDomains[i % kAllDomains.size()], share(kWebFrames, kWebVideos, i)));
  }
  m.meta = {{"fixture", "inventory-totals"}};
  return m;
}

}  // namespace surgcurate::fixtures
