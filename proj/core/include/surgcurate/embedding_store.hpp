#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "surgcurate/hashing.hpp"

namespace surgcurate {

class CorpusIndex;

inline constexpr std::size_t kDefaultEmbeddingDim = 768;

// Read-only row-major view; the clusterer works on these so that centroid
// matrices and stores share one code path.
struct MatrixView {
  std::span<const float> data;
  std::size_t rows = 0;
  std::size_t dim = 0;

  std::span<const float> row(std::size_t i) const { return data.subspan(i * dim, dim); }
};

class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  EmbeddingMatrix(std::size_t dim, std::vector<float> data, std::vector<std::string> row_ids);

  std::size_t rows() const noexcept { return row_ids_.size(); }
  std::size_t dim() const noexcept { return dim_; }
  std::span<const float> data() const noexcept { return data_; }
  std::span<float> mutable_data() noexcept { return data_; }
  const std::vector<std::string>& row_ids() const noexcept { return row_ids_; }

  std::span<const float> row(std::size_t i) const { return view().row(i); }
  MatrixView view() const noexcept { return {data_, rows(), dim_}; }

  bool operator==(const EmbeddingMatrix&) const = default;

 private:
  std::size_t dim_ = 0;
  std::vector<float> data_;
  std::vector<std::string> row_ids_;
};

// SURGEMB1 layout, all integers little-endian:
//   "SURGEMB1" | u64 n_rows | u64 dim | n_rows*dim f32 |
//   n_rows x (u32 byte length, UTF-8 row id) | SHA-256 of all preceding bytes
inline constexpr char kStoreMagic[8] = {'S', 'U', 'R', 'G', 'E', 'M', 'B', '1'};

struct StoreFile {
  std::filesystem::path path;
  std::uint64_t size_bytes = 0;
  Digest checksum{};
};

std::vector<std::uint8_t> encode_store(const EmbeddingMatrix& matrix);
EmbeddingMatrix decode_store(std::span<const std::uint8_t> bytes);

StoreFile write_store(const EmbeddingMatrix& matrix, const std::filesystem::path& path);
EmbeddingMatrix read_store(const std::filesystem::path& path);

// Throws NonFiniteValue (IndexedError, row index) or a parse error on
// duplicate row ids.
void validate_matrix(const EmbeddingMatrix& matrix);

// Row ids that do not resolve to a clip in the corpus.
std::vector<std::string> unresolved_rows(const EmbeddingMatrix& matrix, const CorpusIndex& corpus);

// Unit-norm rows (f64 norm, f32 result). Throws ZeroRow (IndexedError).
EmbeddingMatrix l2_normalize(const EmbeddingMatrix& matrix);

// Builds a matrix from a directory of raw little-endian f32 blobs (*.f32,
// concatenated in filename order) and a sidecar file of row ids, one per
// line, in the same order.
EmbeddingMatrix ingest_raw(const std::filesystem::path& blob_dir,
                           const std::filesystem::path& ids_file, std::size_t dim);

// Payload helpers shared with the cluster-tree format.
void append_matrix_payload(std::vector<std::uint8_t>& out, MatrixView m);

}  // namespace surgcurate
