#include "surgcurate/embedding_store.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <unordered_set>

#include "bytes.hpp"
#include "surgcurate/corpus.hpp"
#include "surgcurate/error.hpp"

namespace surgcurate {

using detail::ByteReader;

EmbeddingMatrix::EmbeddingMatrix(std::size_t dim, std::vector<float> data,
                                 std::vector<std::string> row_ids)
    : dim_(dim), data_(std::move(data)), row_ids_(std::move(row_ids)) {
  if (dim_ == 0) throw Error(ErrorCode::kSizeMismatch, "embedding dim must be >= 1");
  if (data_.size() != row_ids_.size() * dim_) {
    throw Error(ErrorCode::kSizeMismatch,
                "data length " + std::to_string(data_.size()) + " != rows " +
                    std::to_string(row_ids_.size()) + " x dim " + std::to_string(dim_));
  }
}

void append_matrix_payload(std::vector<std::uint8_t>& out, MatrixView m) {
  detail::put_u64(out, m.rows);
  detail::put_u64(out, m.dim);
  const auto* p = reinterpret_cast<const std::uint8_t*>(m.data.data());
  out.insert(out.end(), p, p + m.data.size_bytes());
}

void validate_matrix(const EmbeddingMatrix& matrix) {
  const auto data = matrix.data();
  for (std::size_t r = 0; r < matrix.rows(); ++r) {
    const auto row = data.subspan(r * matrix.dim(), matrix.dim());
    if (!std::all_of(row.begin(), row.end(), [](float v) { return std::isfinite(v); })) {
      throw IndexedError(ErrorCode::kNonFiniteValue, r,
                         "non-finite value at row " + std::to_string(r));
    }
  }
  std::unordered_set<std::string_view> seen;
  for (const auto& id : matrix.row_ids()) {
    if (!seen.insert(id).second) throw Error(ErrorCode::kParse, "duplicate row id '" + id + "'");
  }
}

std::vector<std::uint8_t> encode_store(const EmbeddingMatrix& matrix) {
  std::vector<std::uint8_t> out;
  out.reserve(8 + 16 + matrix.data().size_bytes() + matrix.rows() * 16 + 32);
  const auto* magic = reinterpret_cast<const std::uint8_t*>(kStoreMagic);
  out.insert(out.end(), magic, magic + sizeof kStoreMagic);
  append_matrix_payload(out, matrix.view());
  for (const auto& id : matrix.row_ids()) detail::put_string(out, id);
  const Digest digest = sha256(out);
  detail::put_bytes(out, digest);
  return out;
}

EmbeddingMatrix decode_store(std::span<const std::uint8_t> bytes) {
  ByteReader in(bytes);
  auto magic = in.take(sizeof kStoreMagic, "magic");
  if (std::memcmp(magic.data(), kStoreMagic, sizeof kStoreMagic) != 0) {
    throw Error(ErrorCode::kBadMagic, "not a SURGEMB1 store");
  }
  const std::uint64_t n_rows = in.u64("row count");
  const std::uint64_t dim = in.u64("dim");
  if (dim == 0) throw Error(ErrorCode::kSizeMismatch, "dim is zero");
  // Guard against overflow before trusting the header.
  if (n_rows > in.remaining() / 4 / dim) {
    throw Error(ErrorCode::kSizeMismatch, "header sizes exceed file length");
  }
  std::vector<float> data(n_rows * dim);
  auto payload = in.take(data.size() * sizeof(float), "payload");
  std::memcpy(data.data(), payload.data(), payload.size());

  std::vector<std::string> ids;
  ids.reserve(n_rows);
  for (std::uint64_t i = 0; i < n_rows; ++i) ids.push_back(in.string("row id table"));

  const std::size_t body_len = in.position();
  auto stored = in.take(32, "checksum");
  if (in.remaining() != 0) throw Error(ErrorCode::kSizeMismatch, "trailing bytes after checksum");
  const Digest actual = sha256(bytes.first(body_len));
  if (!std::equal(actual.begin(), actual.end(), stored.begin())) {
    throw Error(ErrorCode::kChecksumMismatch, "store checksum mismatch");
  }

  EmbeddingMatrix m(dim, std::move(data), std::move(ids));
  validate_matrix(m);
  return m;
}

StoreFile write_store(const EmbeddingMatrix& matrix, const std::filesystem::path& path) {
  validate_matrix(matrix);
  const auto bytes = encode_store(matrix);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  out.close();
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
  StoreFile file{path, bytes.size(), {}};
  std::copy(bytes.end() - 32, bytes.end(), file.checksum.begin());
  return file;
}

EmbeddingMatrix read_store(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kInputMissing, "cannot open store " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_store(bytes);
}

std::vector<std::string> unresolved_rows(const EmbeddingMatrix& matrix, const CorpusIndex& corpus) {
  std::vector<std::string> missing;
  for (const auto& id : matrix.row_ids()) {
    if (corpus.clip_id_count(id) == 0) missing.push_back(id);
  }
  return missing;
}

EmbeddingMatrix l2_normalize(const EmbeddingMatrix& matrix) {
  std::vector<float> out(matrix.data().begin(), matrix.data().end());
  const std::size_t dim = matrix.dim();
  for (std::size_t r = 0; r < matrix.rows(); ++r) {
    float* row = out.data() + r * dim;
    double sq = 0.0;
    for (std::size_t d = 0; d < dim; ++d) sq += static_cast<double>(row[d]) * row[d];
    if (sq == 0.0) throw IndexedError(ErrorCode::kZeroRow, r, "zero row " + std::to_string(r));
    const double inv = 1.0 / std::sqrt(sq);
    for (std::size_t d = 0; d < dim; ++d) row[d] = static_cast<float>(row[d] * inv);
  }
  return EmbeddingMatrix(dim, std::move(out), matrix.row_ids());
}

EmbeddingMatrix ingest_raw(const std::filesystem::path& blob_dir,
                           const std::filesystem::path& ids_file, std::size_t dim) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(blob_dir)) {
    throw Error(ErrorCode::kInputMissing, "blob directory not found: " + blob_dir.string());
  }
  std::ifstream ids_in(ids_file);
  if (!ids_in) throw Error(ErrorCode::kInputMissing, "cannot open id list " + ids_file.string());
  if (dim == 0) throw Error(ErrorCode::kSizeMismatch, "dim must be >= 1");

  std::vector<std::string> ids;
  for (std::string line; std::getline(ids_in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) ids.push_back(line);
  }

  std::vector<fs::path> blobs;
  for (const auto& entry : fs::directory_iterator(blob_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".f32") blobs.push_back(entry.path());
  }
  std::sort(blobs.begin(), blobs.end());

  std::vector<float> data;
  for (const auto& blob : blobs) {
    const auto size = fs::file_size(blob);
    if (size % sizeof(float) != 0) {
      throw Error(ErrorCode::kSizeMismatch, blob.string() + ": size is not a multiple of 4");
    }
    std::ifstream in(blob, std::ios::binary);
    const std::size_t offset = data.size();
    data.resize(offset + size / sizeof(float));
    in.read(reinterpret_cast<char*>(data.data() + offset), static_cast<std::streamsize>(size));
    if (!in) throw Error(ErrorCode::kIo, "short read: " + blob.string());
  }
  if (data.size() != ids.size() * dim) {
    throw Error(ErrorCode::kSizeMismatch,
                std::to_string(data.size()) + " floats for " + std::to_string(ids.size()) +
                    " ids at dim " + std::to_string(dim));
  }
  EmbeddingMatrix m(dim, std::move(data), std::move(ids));
  validate_matrix(m);
  return m;
}

}  // namespace surgcurate
