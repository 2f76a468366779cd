#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "surgcurate/corpus.hpp"
#include "surgcurate/embedding_store.hpp"
#include "surgcurate/random.hpp"

namespace surgcurate::fixtures {

// Isotropic Gaussian blobs. Row ids are "<prefix><blob>-<index>" with
// zero-padded numbers so lexical order equals generation order.
struct BlobSpec {
  std::vector<std::size_t> sizes;
  std::size_t dim = 2;
  double spacing = 10.0;  // centers on a scaled simplex-like grid
  double sigma = 0.5;
  std::uint64_t seed = 1;
  std::string prefix = "blob";
};

EmbeddingMatrix make_blobs(const BlobSpec& spec);

// Four 2-d blobs of 40/40/40/280 points.
EmbeddingMatrix make_four_blob_fixture();

// Standard normal draw from two uniforms (Box-Muller).
double gaussian(Rng& rng);

inline constexpr std::size_t kPipelineClips = 2000;
inline constexpr std::size_t kPipelineDim = 32;

struct PipelineFixture {
  CorpusManifest corpus;
  EmbeddingMatrix embeddings;           // one row per clip
  std::vector<std::string> clinical;    // clip ids from public clinical videos
};

// 2,000 clips over 200 videos; web videos carry imbalanced topic blobs,
// clinical videos come from a handful of public datasets.
PipelineFixture make_pipeline_fixture(std::uint64_t seed = 7);

// Writes corpus.jsonl, blobs/*.f32, ids.txt, clinical.txt, store.semb and
// strata.csv into dir.
void write_pipeline_fixture(const PipelineFixture& fixture, const std::filesystem::path& dir);

// Video-only manifests with the published inventory totals.
inline constexpr std::uint64_t kPublicVideos = 2790;
inline constexpr std::uint64_t kPublicFrames = 39'900'000;
inline constexpr std::uint64_t kWebVideos = 7745;
inline constexpr std::uint64_t kWebFrames = 174'600'000;

CorpusManifest make_inventory_totals_manifest();
CorpusManifest make_public_subset_manifest();

}  // namespace surgcurate::fixtures
