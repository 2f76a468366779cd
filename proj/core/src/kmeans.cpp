#include "surgcurate/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>

#include "bytes.hpp"
#include "surgcurate/distance.hpp"
#include "surgcurate/error.hpp"

namespace surgcurate {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr char kTreeMagic[8] = {'S', 'U', 'R', 'G', 'T', 'R', 'E', '1'};

void run_chunks(const KMeansOptions& options, std::size_t n,
                const std::function<void(std::size_t, std::size_t, std::size_t)>& fn) {
  const std::size_t chunk = std::max<std::size_t>(1, options.chunk_size);
  if (options.pool != nullptr) {
    options.pool->for_each_chunk(n, chunk, fn);
  } else {
    WorkerPool(1).for_each_chunk(n, chunk, fn);
  }
}

std::vector<std::size_t> resolve_order(std::span<const std::size_t> order, std::size_t n) {
  if (order.empty()) {
    std::vector<std::size_t> identity(n);
    std::iota(identity.begin(), identity.end(), std::size_t{0});
    return identity;
  }
  if (order.size() != n) {
    throw Error(ErrorCode::kDimensionMismatch, "seeding order length differs from row count");
  }
  return {order.begin(), order.end()};
}

void check_k(std::size_t k, std::size_t n) {
  if (k == 0 || k > n) {
    throw Error(ErrorCode::kKTooLarge,
                "k = " + std::to_string(k) + " is not in [1, " + std::to_string(n) + "]");
  }
}

#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
#define SURGCURATE_KERNEL_CLONES __attribute__((target_clones("avx512f", "avx2", "default")))
#else
#define SURGCURATE_KERNEL_CLONES
#endif

// out[t][i] = min(weight[i], |row_i - candidates[t]|^2) for rows [begin, end).
// Each row is read once for all candidates.
SURGCURATE_KERNEL_CLONES
void relax_rows(const float* rows, std::size_t dim, std::size_t begin, std::size_t end,
                const float* const* candidates, std::size_t count, const double* weight,
                double* const* out) {
  for (std::size_t i = begin; i < end; ++i) {
    const float* p = rows + i * dim;
    for (std::size_t t = 0; t < count; ++t) {
      const double d = squared_distance_bounded(p, candidates[t], dim, weight[i]);
      out[t][i] = d < weight[i] ? d : weight[i];
    }
  }
}

// Nearest centroid for rows [begin, end), ties to the lowest index. Returns
// the summed distance in row order.
SURGCURATE_KERNEL_CLONES
double assign_rows(const float* rows, std::size_t dim, std::size_t begin, std::size_t end,
                   const float* centroids, std::size_t k, const std::uint32_t* hint,
                   std::uint32_t* assignments, double* nearest) {
  double sum = 0.0;
  for (std::size_t i = begin; i < end; ++i) {
    const float* p = rows + i * dim;
    double best = kInf;
    std::uint32_t best_j = 0;
    std::size_t skip = k;
    if (hint != nullptr && hint[i] < k) {
      skip = hint[i];
      best_j = hint[i];
      best = squared_distance(p, centroids + skip * dim, dim);
    }
    for (std::size_t j = 0; j < k; ++j) {
      if (j == skip) continue;
      // A lower index also wins an exact tie, so its bound admits equality.
      const bool lower = j < best_j;
      const double bound = lower ? std::nextafter(best, kInf) : best;
      const double d = squared_distance_bounded(p, centroids + j * dim, dim, bound);
      if (d < best || (lower && d == best)) {
        best = d;
        best_j = static_cast<std::uint32_t>(j);
      }
    }
    assignments[i] = best_j;
    nearest[i] = best;
    sum += best;
  }
  return sum;
}

}  // namespace

std::vector<std::size_t> ClusterModel::cluster_sizes() const {
  std::vector<std::size_t> sizes(k, 0);
  for (auto a : assignments) ++sizes[a];
  return sizes;
}

std::vector<std::size_t> canonical_order(const std::vector<std::string>& row_ids) {
  std::vector<std::size_t> order(row_ids.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return row_ids[a] < row_ids[b]; });
  return order;
}

std::vector<float> kmeanspp_init(MatrixView points, std::size_t k, Rng& rng,
                                 std::span<const std::size_t> order_in,
                                 const KMeansOptions& options) {
  const std::size_t n = points.rows;
  const std::size_t dim = points.dim;
  check_k(k, n);
  const auto order = resolve_order(order_in, n);

  std::vector<float> centroids(k * dim);
  std::vector<double> weight(n, kInf);
  auto place = [&](std::size_t c, std::size_t row) {
    auto src = points.row(row);
    std::copy(src.begin(), src.end(), centroids.begin() + static_cast<std::ptrdiff_t>(c * dim));
  };

  // Draws `count` rows with probability proportional to weight, walking rows
  // in seeding order.
  auto draw = [&](std::size_t count) {
    double total = 0.0;
    for (auto i : order) total += weight[i];
    if (!(total > 0.0)) {
      throw Error(ErrorCode::kKTooLarge,
                  "k = " + std::to_string(k) + " exceeds the number of distinct points");
    }
    std::vector<std::size_t> rows;
    for (std::size_t t = 0; t < count; ++t) {
      const double target = rng.uniform_unit() * total;
      double cumulative = 0.0;
      std::size_t pick = n;
      for (auto i : order) {
        if (weight[i] <= 0.0) continue;
        pick = i;
        cumulative += weight[i];
        if (cumulative > target) break;
      }
      rows.push_back(pick);
    }
    return rows;
  };

  const std::size_t trials = std::max<std::size_t>(1, options.local_trials);
  std::vector<std::vector<double>> relaxed(trials, std::vector<double>(n));
  // Weights after adding each candidate; returns the index of the one with the
  // lowest potential (summed in seeding order), ties to the earliest.
  auto best_candidate = [&](const std::vector<std::size_t>& rows) {
    std::vector<const float*> cands;
    std::vector<double*> outs;
    for (std::size_t t = 0; t < rows.size(); ++t) {
      cands.push_back(points.data.data() + rows[t] * dim);
      outs.push_back(relaxed[t].data());
    }
    run_chunks(options, n, [&](std::size_t, std::size_t begin, std::size_t end) {
      relax_rows(points.data.data(), dim, begin, end, cands.data(), cands.size(), weight.data(), outs.data());
    });
    std::size_t best = 0;
    double best_potential = kInf;
    for (std::size_t t = 0; t < rows.size(); ++t) {
      double potential = 0.0;
      for (auto i : order) potential += relaxed[t][i];
      if (potential < best_potential) {
        best_potential = potential;
        best = t;
      }
    }
    return best;
  };

  const std::vector<std::size_t> first = {order[rng.uniform_index(n)]};
  place(0, first[0]);
  weight.swap(relaxed[best_candidate(first)]);
  for (std::size_t c = 1; c < k; ++c) {
    const auto rows = draw(trials);
    const std::size_t t = best_candidate(rows);
    place(c, rows[t]);
    weight.swap(relaxed[t]);
  }
  return centroids;
}

LloydStepResult lloyd_step(MatrixView points, MatrixView centroids, const KMeansOptions& options,
                           std::span<const std::uint32_t> hint) {
  const std::size_t n = points.rows;
  const std::size_t dim = points.dim;
  const std::size_t k = centroids.rows;
  if (centroids.dim != dim) {
    throw Error(ErrorCode::kDimensionMismatch, "centroid dim " + std::to_string(centroids.dim) +
                                                   " != point dim " + std::to_string(dim));
  }
  if (k == 0) throw Error(ErrorCode::kKTooLarge, "no centroids");
  if (k > n) {
    throw Error(ErrorCode::kKTooLarge, std::to_string(k) + " centroids for " + std::to_string(n) + " points");
  }
  if (!hint.empty() && hint.size() != n) {
    throw Error(ErrorCode::kDimensionMismatch, "hint has " + std::to_string(hint.size()) + " entries for " +
                                                   std::to_string(n) + " points");
  }

  LloydStepResult out;
  out.assignments.resize(n);
  std::vector<double> nearest(n);
  const std::size_t chunk = std::max<std::size_t>(1, options.chunk_size);
  std::vector<double> partial(WorkerPool::chunk_count(n, chunk), 0.0);

  run_chunks(options, n, [&](std::size_t c, std::size_t begin, std::size_t end) {
    partial[c] = assign_rows(points.data.data(), dim, begin, end, centroids.data.data(), k,
                             hint.empty() ? nullptr : hint.data(), out.assignments.data(), nearest.data());
  });
  for (double s : partial) out.inertia += s;

  std::vector<double> sums(k * dim, 0.0);
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t a = out.assignments[i];
    ++counts[a];
    const float* p = points.data.data() + i * dim;
    double* s = sums.data() + a * dim;
    for (std::size_t d = 0; d < dim; ++d) s[d] += p[d];
  }

  for (std::size_t empty = 0; empty < k; ++empty) {
    if (counts[empty] != 0) continue;
    const auto largest = static_cast<std::size_t>(
        std::max_element(counts.begin(), counts.end()) - counts.begin());
    std::size_t victim = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (out.assignments[i] == largest && (victim == n || nearest[i] > nearest[victim])) victim = i;
    }
    const float* p = points.data.data() + victim * dim;
    double* from = sums.data() + largest * dim;
    double* to = sums.data() + empty * dim;
    for (std::size_t d = 0; d < dim; ++d) {
      from[d] -= p[d];
      to[d] = p[d];
    }
    --counts[largest];
    counts[empty] = 1;
    out.assignments[victim] = static_cast<std::uint32_t>(empty);
    nearest[victim] = 0.0;
    ++out.repaired_clusters;
  }

  out.new_centroids.resize(k * dim);
  for (std::size_t j = 0; j < k; ++j) {
    const double inv = 1.0 / static_cast<double>(counts[j]);
    for (std::size_t d = 0; d < dim; ++d) {
      out.new_centroids[j * dim + d] = static_cast<float>(sums[j * dim + d] * inv);
    }
  }
  return out;
}

namespace {

ClusterModel kmeans_single(MatrixView points, std::size_t k, std::uint64_t seed, Rng& rng,
                           const KMeansOptions& options, std::span<const std::size_t> order) {
  ClusterModel model;
  model.k = k;
  model.dim = points.dim;
  model.seed = seed;

  std::vector<float> current = kmeanspp_init(points, k, rng, order, options);
  const std::size_t max_iter = std::max<std::size_t>(1, options.max_iter);
  double previous = kInf;

  std::vector<std::uint32_t> previous_assignments;
  for (std::size_t it = 1; it <= max_iter; ++it) {
    LloydStepResult step = lloyd_step(points, {current, k, points.dim}, options, previous_assignments);
    model.inertia_history.push_back(step.inertia);
    model.iterations_run = it;

    const bool stable = step.repaired_clusters == 0;
    const bool converged =
        stable && (step.inertia == 0.0 ||
                   (previous != kInf && previous - step.inertia <= options.tol * previous));
    if (converged || (stable && it == max_iter)) {
      model.centroids = std::move(current);
      model.assignments = std::move(step.assignments);
      model.inertia = step.inertia;
      return model;
    }
    if (it == max_iter) {
      // Budget exhausted right after a repair: keep the repaired partition
      // and report its cost against the updated centroids.
      model.centroids = std::move(step.new_centroids);
      model.assignments = std::move(step.assignments);
      double cost = 0.0;
      for (std::size_t i = 0; i < points.rows; ++i) {
        cost += squared_distance(points.data.data() + i * points.dim,
                                 model.centroids.data() + model.assignments[i] * points.dim,
                                 points.dim);
      }
      model.inertia = cost;
      return model;
    }
    previous = step.inertia;
    current = std::move(step.new_centroids);
    previous_assignments = std::move(step.assignments);
  }
  return model;  // unreachable
}

}  // namespace

ClusterModel kmeans(MatrixView points, std::size_t k, std::uint64_t seed,
                    const KMeansOptions& options, std::span<const std::size_t> order) {
  check_k(k, points.rows);
  Rng rng(seed);
  ClusterModel best = kmeans_single(points, k, seed, rng, options, order);
  for (std::size_t run = 1; run < options.n_init; ++run) {
    Rng restart(derive_seed(seed, "init:" + std::to_string(run)));
    ClusterModel model = kmeans_single(points, k, seed, restart, options, order);
    if (model.inertia < best.inertia) best = std::move(model);
  }
  return best;
}

std::vector<std::uint32_t> ClusterTree::composed_assignment(std::size_t level) const {
  if (level >= levels.size()) throw Error(ErrorCode::kInvalidLevels, "level out of range");
  std::vector<std::uint32_t> out = levels.front().assignments;
  for (std::size_t l = 1; l <= level; ++l) {
    for (auto& a : out) a = levels[l].assignments[a];
  }
  return out;
}

ClusterTree build_hierarchy(MatrixView points, std::span<const std::size_t> level_sizes,
                            std::uint64_t seed, const KMeansOptions& options,
                            std::span<const std::size_t> order, bool normalized) {
  if (level_sizes.empty()) throw Error(ErrorCode::kInvalidLevels, "no levels requested");
  for (std::size_t l = 0; l < level_sizes.size(); ++l) {
    if (level_sizes[l] == 0) throw Error(ErrorCode::kInvalidLevels, "level size must be >= 1");
    if (l > 0 && level_sizes[l] >= level_sizes[l - 1]) {
      throw Error(ErrorCode::kInvalidLevels, "level sizes must be strictly decreasing");
    }
  }

  ClusterTree tree;
  tree.level_sizes.assign(level_sizes.begin(), level_sizes.end());
  tree.seed = seed;
  tree.tol = options.tol;
  tree.max_iter = std::max<std::size_t>(1, options.max_iter);
  tree.n_init = std::max<std::size_t>(1, options.n_init);
  tree.local_trials = std::max<std::size_t>(1, options.local_trials);
  tree.chunk_size = std::max<std::size_t>(1, options.chunk_size);
  tree.normalized = normalized;

  for (std::size_t l = 0; l < level_sizes.size(); ++l) {
    const std::uint64_t level_seed = derive_seed(seed, "level:" + std::to_string(l));
    if (l == 0) {
      tree.levels.push_back(kmeans(points, level_sizes[0], level_seed, options, order));
    } else {
      const MatrixView below = tree.levels[l - 1].centroid_view();
      tree.levels.push_back(kmeans(below, level_sizes[l], level_seed, options));
    }
  }
  return tree;
}

std::vector<std::uint8_t> encode_tree(const ClusterTree& tree) {
  using namespace detail;
  std::vector<std::uint8_t> out;
  const auto* magic = reinterpret_cast<const std::uint8_t*>(kTreeMagic);
  out.insert(out.end(), magic, magic + sizeof kTreeMagic);
  put_u32(out, static_cast<std::uint32_t>(tree.levels.size()));
  for (auto s : tree.level_sizes) put_u64(out, s);
  put_u64(out, tree.seed);
  put_f64(out, tree.tol);
  out.push_back(tree.normalized ? 1 : 0);
  put_u64(out, tree.max_iter);
  put_u64(out, tree.n_init);
  put_u64(out, tree.local_trials);
  put_u64(out, tree.chunk_size);
  for (const auto& level : tree.levels) {
    put_u64(out, level.iterations_run);
    put_f64(out, level.inertia);
    put_u64(out, level.seed);
    append_matrix_payload(out, level.centroid_view());
    put_u64(out, level.assignments.size());
    for (auto a : level.assignments) put_u32(out, a);
  }
  const Digest digest = sha256(out);
  put_bytes(out, digest);
  return out;
}

ClusterTree decode_tree(std::span<const std::uint8_t> bytes) {
  detail::ByteReader in(bytes);
  auto magic = in.take(sizeof kTreeMagic, "magic");
  if (std::memcmp(magic.data(), kTreeMagic, sizeof kTreeMagic) != 0) {
    throw Error(ErrorCode::kBadMagic, "not a SURGTRE1 cluster tree");
  }
  ClusterTree tree;
  const std::uint32_t n_levels = in.u32("level count");
  if (n_levels > in.remaining() / 8) throw Error(ErrorCode::kSizeMismatch, "bad level count");
  for (std::uint32_t l = 0; l < n_levels; ++l) tree.level_sizes.push_back(in.u64("level size"));
  tree.seed = in.u64("seed");
  tree.tol = in.f64("tol");
  tree.normalized = in.take(1, "normalized flag")[0] != 0;
  tree.max_iter = in.u64("max_iter");
  tree.n_init = in.u64("n_init");
  tree.local_trials = in.u64("local_trials");
  tree.chunk_size = in.u64("chunk_size");
  for (std::uint32_t l = 0; l < n_levels; ++l) {
    ClusterModel m;
    m.iterations_run = in.u64("iterations");
    m.inertia = in.f64("inertia");
    m.seed = in.u64("level seed");
    m.k = in.u64("centroid rows");
    m.dim = in.u64("centroid dim");
    if (m.k != tree.level_sizes[l] || m.dim == 0 || m.k > in.remaining() / 4 / m.dim) {
      throw Error(ErrorCode::kSizeMismatch, "centroid matrix header inconsistent");
    }
    m.centroids.resize(m.k * m.dim);
    auto payload = in.take(m.centroids.size() * sizeof(float), "centroids");
    std::memcpy(m.centroids.data(), payload.data(), payload.size());
    const std::uint64_t count = in.u64("assignment count");
    if (count > in.remaining() / 4) throw Error(ErrorCode::kSizeMismatch, "assignment count");
    m.assignments.resize(count);
    for (auto& a : m.assignments) {
      a = in.u32("assignment");
      if (a >= m.k) throw Error(ErrorCode::kParse, "assignment out of range");
    }
    if (l > 0 && count != tree.level_sizes[l - 1]) {
      throw Error(ErrorCode::kSizeMismatch, "level assignment count does not match level below");
    }
    tree.levels.push_back(std::move(m));
  }
  const std::size_t body = in.position();
  auto stored = in.take(32, "checksum");
  if (in.remaining() != 0) throw Error(ErrorCode::kSizeMismatch, "trailing bytes after checksum");
  const Digest actual = sha256(bytes.first(body));
  if (!std::equal(actual.begin(), actual.end(), stored.begin())) {
    throw Error(ErrorCode::kChecksumMismatch, "cluster tree checksum mismatch");
  }
  return tree;
}

void write_tree(const ClusterTree& tree, const std::filesystem::path& path) {
  const auto bytes = encode_tree(tree);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

ClusterTree read_tree(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kInputMissing, "cannot open cluster tree " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_tree(bytes);
}

std::string tree_fingerprint(const ClusterTree& tree) {
  const auto bytes = encode_tree(tree);
  return to_hex(std::span(bytes).last(32));
}

}  // namespace surgcurate
