#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "surgcurate/apportion.hpp"
#include "surgcurate/embedding_store.hpp"
#include "surgcurate/kmeans.hpp"
#include "surgcurate/parallel.hpp"
#include "surgcurate/rational.hpp"

namespace surgcurate {

// How a node's quota is divided among its children. Proportional division
// reproduces the raw cluster-size distribution and therefore does not balance.
enum class AllocationMode { kEqual, kProportional };

std::string_view to_string(AllocationMode mode) noexcept;
AllocationMode parse_allocation_mode(std::string_view text);

struct BudgetPlan {
  Rational fraction{1, 10};
  AllocationMode mode = AllocationMode::kEqual;
  std::uint64_t n_points = 0;
  std::uint64_t total_budget = 0;
  // Indexed [level][cluster], level 0 being the leaves.
  std::vector<std::vector<std::uint64_t>> quotas;
  std::vector<std::vector<std::uint64_t>> reachable;

  bool operator==(const BudgetPlan&) const = default;
};

// Splits `quota` over children capped at `caps`: equal shares, capped children
// keep their cap, the surplus is re-spread over the rest, and leftover units
// after flooring go to the lowest-index uncapped children. Requires
// quota <= sum(caps).
std::vector<std::uint64_t> water_fill(std::uint64_t quota, std::span<const std::uint64_t> caps);

// total_budget = round(fraction * n), then top-down division from a virtual
// root over the top level down to the leaves. Throws FractionOutOfRange
// unless 0 < fraction <= 1.
BudgetPlan allocate_budget(const ClusterTree& tree, const Rational& fraction,
                           AllocationMode mode = AllocationMode::kEqual);

struct Selection {
  std::string clip_id;
  std::size_t row = 0;
  double distance = 0.0;  // squared Euclidean to the leaf centroid
};

// The `quota` members nearest to `centroid`, ordered by (distance, clip_id).
std::vector<Selection> select_nearest(MatrixView points, std::span<const float> centroid,
                                      std::span<const std::size_t> member_rows,
                                      std::span<const std::string> row_ids, std::size_t quota);

struct CuratedEntry {
  std::string clip_id;
  std::uint32_t leaf = 0;
  std::uint32_t rank = 0;
  double distance = 0.0;
  bool operator==(const CuratedEntry&) const = default;
};

struct CuratedSet {
  std::vector<CuratedEntry> entries;  // sorted by clip_id
  BudgetPlan plan;
  std::string tree_fingerprint;

  std::vector<std::string> clip_ids() const;
  bool operator==(const CuratedSet&) const = default;
};

// `points` must be the rows the tree was built over (normalised the same way).
CuratedSet curate(const ClusterTree& tree, const EmbeddingMatrix& points, const Rational& fraction,
                  AllocationMode mode = AllocationMode::kEqual, const WorkerPool* pool = nullptr);

// JSON-lines: one header line ({"kind":"header", plan parameters, leaf quotas,
// tree fingerprint}) followed by one {"clip_id","leaf","rank","distance"} line
// per selected clip in clip_id order.
void write_curated(std::ostream& out, const CuratedSet& set);
void write_curated(const std::filesystem::path& path, const CuratedSet& set);
CuratedSet read_curated(const std::filesystem::path& path);

}  // namespace surgcurate
