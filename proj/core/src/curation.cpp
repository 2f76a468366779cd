#include "surgcurate/curation.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "surgcurate/distance.hpp"
#include "surgcurate/error.hpp"

namespace surgcurate {

using nlohmann::json;

std::string_view to_string(AllocationMode mode) noexcept {
  return mode == AllocationMode::kEqual ? "equal" : "proportional";
}

AllocationMode parse_allocation_mode(std::string_view text) {
  if (text == "equal") return AllocationMode::kEqual;
  if (text == "proportional") return AllocationMode::kProportional;
  throw Error(ErrorCode::kParse, "unknown allocation mode '" + std::string(text) + "'");
}

std::vector<std::uint64_t> water_fill(std::uint64_t quota, std::span<const std::uint64_t> caps) {
  const std::size_t m = caps.size();
  std::vector<std::uint64_t> out(m, 0);
  if (m == 0 || quota == 0) return out;

  std::vector<std::size_t> by_cap(m);
  std::iota(by_cap.begin(), by_cap.end(), std::size_t{0});
  std::stable_sort(by_cap.begin(), by_cap.end(),
                   [&](std::size_t a, std::size_t b) { return caps[a] < caps[b]; });

  std::uint64_t remaining = quota;
  std::size_t open = m;
  std::vector<bool> capped(m, false);
  for (auto i : by_cap) {
    // Capped iff cap <= remaining / open, the current equal share.
    if (caps[i] * open > remaining) break;
    out[i] = caps[i];
    capped[i] = true;
    remaining -= caps[i];
    --open;
  }
  if (open == 0) return out;

  const std::uint64_t share = remaining / open;
  std::uint64_t leftover = remaining % open;
  for (std::size_t i = 0; i < m; ++i) {
    if (capped[i]) continue;
    out[i] = share;
    if (leftover > 0) {
      ++out[i];
      --leftover;
    }
  }
  return out;
}

BudgetPlan allocate_budget(const ClusterTree& tree, const Rational& fraction, AllocationMode mode) {
  if (fraction <= 0 || fraction > 1) {
    throw Error(ErrorCode::kFractionOutOfRange, "fraction must be in (0, 1]");
  }
  if (tree.levels.empty()) throw Error(ErrorCode::kInvalidLevels, "empty cluster tree");

  BudgetPlan plan;
  plan.fraction = fraction;
  plan.mode = mode;
  plan.n_points = tree.n_points();
  plan.total_budget = static_cast<std::uint64_t>(
      round_half_away(fraction * Rational(static_cast<std::int64_t>(plan.n_points))));

  const std::size_t levels = tree.levels.size();
  plan.reachable.resize(levels);
  plan.quotas.resize(levels);
  for (std::size_t l = 0; l < levels; ++l) {
    plan.reachable[l].assign(tree.levels[l].k, 0);
    plan.quotas[l].assign(tree.levels[l].k, 0);
  }
  for (auto a : tree.levels[0].assignments) ++plan.reachable[0][a];
  for (std::size_t l = 1; l < levels; ++l) {
    const auto& parent_of = tree.levels[l].assignments;
    for (std::size_t c = 0; c < parent_of.size(); ++c) {
      plan.reachable[l][parent_of[c]] += plan.reachable[l - 1][c];
    }
  }

  auto divide = [mode](std::uint64_t quota, std::span<const std::uint64_t> caps) {
    return mode == AllocationMode::kEqual ? water_fill(quota, caps) : apportion(quota, caps);
  };

  plan.quotas[levels - 1] = divide(plan.total_budget, plan.reachable[levels - 1]);
  for (std::size_t l = levels - 1; l > 0; --l) {
    // Children of each level-l node, in cluster-index order.
    std::vector<std::vector<std::size_t>> children(tree.levels[l].k);
    const auto& parent_of = tree.levels[l].assignments;
    for (std::size_t c = 0; c < parent_of.size(); ++c) children[parent_of[c]].push_back(c);
    for (std::size_t node = 0; node < children.size(); ++node) {
      std::vector<std::uint64_t> caps;
      caps.reserve(children[node].size());
      for (auto c : children[node]) caps.push_back(plan.reachable[l - 1][c]);
      const auto split = divide(plan.quotas[l][node], caps);
      for (std::size_t i = 0; i < split.size(); ++i) plan.quotas[l - 1][children[node][i]] = split[i];
    }
  }
  return plan;
}

std::vector<Selection> select_nearest(MatrixView points, std::span<const float> centroid,
                                      std::span<const std::size_t> member_rows,
                                      std::span<const std::string> row_ids, std::size_t quota) {
  if (quota > member_rows.size()) {
    throw Error(ErrorCode::kQuotaExceedsMembers, "quota " + std::to_string(quota) + " exceeds " +
                                                     std::to_string(member_rows.size()) +
                                                     " members");
  }
  if (centroid.size() != points.dim) {
    throw Error(ErrorCode::kDimensionMismatch, "centroid dim differs from point dim");
  }
  std::vector<Selection> all;
  all.reserve(member_rows.size());
  for (auto row : member_rows) {
    all.push_back({row_ids[row], row,
                   squared_distance(points.data.data() + row * points.dim, centroid.data(),
                                    points.dim)});
  }
  auto closer = [](const Selection& a, const Selection& b) {
    return a.distance != b.distance ? a.distance < b.distance : a.clip_id < b.clip_id;
  };
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(quota), all.end(), closer);
  all.resize(quota);
  return all;
}

std::vector<std::string> CuratedSet::clip_ids() const {
  std::vector<std::string> ids;
  ids.reserve(entries.size());
  for (const auto& e : entries) ids.push_back(e.clip_id);
  return ids;
}

CuratedSet curate(const ClusterTree& tree, const EmbeddingMatrix& points, const Rational& fraction,
                  AllocationMode mode, const WorkerPool* pool) {
  if (tree.levels.empty() || tree.n_points() != points.rows()) {
    throw Error(ErrorCode::kDimensionMismatch, "cluster tree was not built over these points");
  }
  const ClusterModel& leaves = tree.levels.front();
  if (leaves.dim != points.dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "cluster tree dim differs from store dim");
  }

  CuratedSet set;
  set.plan = allocate_budget(tree, fraction, mode);
  set.tree_fingerprint = tree_fingerprint(tree);

  std::vector<std::vector<std::size_t>> members(leaves.k);
  for (std::size_t row = 0; row < leaves.assignments.size(); ++row) {
    members[leaves.assignments[row]].push_back(row);
  }

  std::vector<std::vector<Selection>> picked(leaves.k);
  auto run = [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t leaf = begin; leaf < end; ++leaf) {
      const auto centroid = leaves.centroid_view().row(leaf);
      picked[leaf] = select_nearest(points.view(), centroid, members[leaf], points.row_ids(),
                                    set.plan.quotas[0][leaf]);
    }
  };
  const WorkerPool serial(1);
  (pool != nullptr ? *pool : serial).for_each_chunk(leaves.k, 16, run);

  for (std::size_t leaf = 0; leaf < leaves.k; ++leaf) {
    for (std::size_t rank = 0; rank < picked[leaf].size(); ++rank) {
      auto& s = picked[leaf][rank];
      set.entries.push_back({std::move(s.clip_id), static_cast<std::uint32_t>(leaf),
                             static_cast<std::uint32_t>(rank), s.distance});
    }
  }
  std::sort(set.entries.begin(), set.entries.end(),
            [](const CuratedEntry& a, const CuratedEntry& b) { return a.clip_id < b.clip_id; });
  return set;
}

namespace {

std::string rational_text(const Rational& r) {
  return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

}  // namespace

void write_curated(std::ostream& out, const CuratedSet& set) {
  json header{{"kind", "header"},
              {"fraction", rational_text(set.plan.fraction)},
              {"allocation", to_string(set.plan.mode)},
              {"n_points", set.plan.n_points},
              {"total_budget", set.plan.total_budget},
              {"selected", set.entries.size()},
              {"tree_fingerprint", set.tree_fingerprint},
              {"quotas", set.plan.quotas},
              {"reachable", set.plan.reachable}};
  out << header.dump() << '\n';
  for (const auto& e : set.entries) {
    json line{{"clip_id", e.clip_id}, {"leaf", e.leaf}, {"rank", e.rank}, {"distance", e.distance}};
    out << line.dump() << '\n';
  }
}

void write_curated(const std::filesystem::path& path, const CuratedSet& set) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  write_curated(out, set);
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

CuratedSet read_curated(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kInputMissing, "cannot open curated set " + path.string());
  CuratedSet set;
  std::string line;
  std::size_t line_no = 0;
  try {
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      const json obj = json::parse(line);
      if (line_no == 1) {
        if (obj.value("kind", "") != "header") throw Error(ErrorCode::kParse, "missing header line");
        set.plan.fraction = parse_rational(obj.at("fraction").get<std::string>());
        set.plan.mode = parse_allocation_mode(obj.at("allocation").get<std::string>());
        set.plan.n_points = obj.at("n_points").get<std::uint64_t>();
        set.plan.total_budget = obj.at("total_budget").get<std::uint64_t>();
        set.plan.quotas = obj.at("quotas").get<std::vector<std::vector<std::uint64_t>>>();
        set.plan.reachable = obj.at("reachable").get<std::vector<std::vector<std::uint64_t>>>();
        set.tree_fingerprint = obj.at("tree_fingerprint").get<std::string>();
        continue;
      }
      set.entries.push_back({obj.at("clip_id").get<std::string>(), obj.at("leaf").get<std::uint32_t>(),
                             obj.at("rank").get<std::uint32_t>(), obj.at("distance").get<double>()});
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
  }
  if (line_no == 0) throw Error(ErrorCode::kParse, "empty curated set file " + path.string());
  return set;
}

}  // namespace surgcurate
