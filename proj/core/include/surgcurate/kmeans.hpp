#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "surgcurate/embedding_store.hpp"
#include "surgcurate/hashing.hpp"
#include "surgcurate/parallel.hpp"
#include "surgcurate/random.hpp"

namespace surgcurate {

struct KMeansOptions {
  double tol = 1e-4;  // relative inertia improvement
  std::size_t max_iter = 100;
  std::size_t n_init = 10;  // K-means++ restarts; the lowest inertia wins
  // Candidates drawn per seeding step; the one leaving the lowest potential
  // is kept. 1 is plain K-means++.
  std::size_t local_trials = 2;
  std::size_t chunk_size = 4096;
  // nullptr runs serially. Results never depend on the pool size.
  const WorkerPool* pool = nullptr;
};

struct ClusterModel {
  std::size_t k = 0;
  std::size_t dim = 0;
  std::vector<float> centroids;              // k x dim, row-major
  std::vector<std::uint32_t> assignments;    // point -> cluster
  double inertia = 0.0;
  std::size_t iterations_run = 0;
  std::uint64_t seed = 0;
  std::vector<double> inertia_history;       // one entry per Lloyd step

  MatrixView centroid_view() const noexcept { return {centroids, k, dim}; }
  std::vector<std::size_t> cluster_sizes() const;
  bool operator==(const ClusterModel&) const = default;
};

// Row permutation sorting rows by id; seeding walks rows in this order so the
// chosen centroids do not depend on ingest order.
std::vector<std::size_t> canonical_order(const std::vector<std::string>& row_ids);

// K-means++ (D^2 weighting). `order` defaults to row order. Throws KTooLarge
// when k is zero, exceeds the row count, or exceeds the number of distinct
// rows.
std::vector<float> kmeanspp_init(MatrixView points, std::size_t k, Rng& rng,
                                 std::span<const std::size_t> order = {},
                                 const KMeansOptions& options = {});

struct LloydStepResult {
  std::vector<std::uint32_t> assignments;
  std::vector<float> new_centroids;
  double inertia = 0.0;  // with respect to the input centroids
  std::size_t repaired_clusters = 0;
};

// One assignment + update pass. Ties go to the lowest cluster index. An empty
// cluster takes the point farthest from its centroid out of the currently
// largest cluster (ties: lowest cluster index, then lowest point index).
// More centroids than points is KTooLarge.
// `hint` (one cluster index per point, e.g. the previous assignment) only
// changes the scan order; the result is the same with or without it.
LloydStepResult lloyd_step(MatrixView points, MatrixView centroids,
                           const KMeansOptions& options = {},
                           std::span<const std::uint32_t> hint = {});

// Lloyd iterations from a K-means++ start until the relative inertia
// improvement is <= tol or max_iter steps ran. With n_init > 1, restart r
// seeds from derive_seed(seed, "init:<r>") and the lowest inertia is kept
// (ties: earliest run). The returned centroids are the
// ones the final assignment was computed against.
ClusterModel kmeans(MatrixView points, std::size_t k, std::uint64_t seed,
                    const KMeansOptions& options = {}, std::span<const std::size_t> order = {});

struct ClusterTree {
  std::vector<std::size_t> level_sizes;
  std::vector<ClusterModel> levels;
  std::uint64_t seed = 0;
  double tol = 1e-4;
  std::size_t max_iter = 100;
  std::size_t n_init = 10;
  std::size_t local_trials = 2;
  std::size_t chunk_size = 4096;
  bool normalized = true;

  std::size_t n_points() const { return levels.empty() ? 0 : levels.front().assignments.size(); }
  // Cluster at `level` reached by each original point.
  std::vector<std::uint32_t> composed_assignment(std::size_t level) const;
  bool operator==(const ClusterTree&) const = default;
};

// Level 0 clusters the points; level l > 0 clusters the centroids of level
// l - 1. Level l uses derive_seed(seed, "level:<l>").
ClusterTree build_hierarchy(MatrixView points, std::span<const std::size_t> level_sizes,
                            std::uint64_t seed, const KMeansOptions& options = {},
                            std::span<const std::size_t> order = {}, bool normalized = true);

// SURGTRE1 layout (little-endian):
//   "SURGTRE1" | u32 levels | u64 size per level | u64 seed | f64 tol |
//   u8 normalized | u64 max_iter | u64 chunk_size |
//   per level: u64 iterations_run | f64 inertia | u64 seed |
//              centroids in SURGEMB1 payload layout (u64 rows, u64 dim, f32...) |
//              u64 count | u32 assignment...
//   SHA-256 of all preceding bytes
std::vector<std::uint8_t> encode_tree(const ClusterTree& tree);
ClusterTree decode_tree(std::span<const std::uint8_t> bytes);
void write_tree(const ClusterTree& tree, const std::filesystem::path& path);
ClusterTree read_tree(const std::filesystem::path& path);

// SHA-256 of the encoded tree, hex.
std::string tree_fingerprint(const ClusterTree& tree);

}  // namespace surgcurate
