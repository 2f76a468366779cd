// Acceptance suite: one PASS/FAIL line per criterion.

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "surgcurate/batch_mixer.hpp"
#include "surgcurate/corpus.hpp"
#include "surgcurate/curation.hpp"
#include "surgcurate/embedding_store.hpp"
#include "surgcurate/error.hpp"
#include "surgcurate/kmeans.hpp"
#include "surgcurate/metrics.hpp"
#include "surgcurate/parallel.hpp"
#include "surgcurate/random.hpp"
#include "surgcurate/splits.hpp"
#include "surgcurate_app/app.hpp"
#include "surgcurate_app/fixtures.hpp"
#include "test_support.hpp"

using namespace surgcurate;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void fail(const std::string& why) {
    if (pass) detail = why;
    pass = false;
  }
  void check(bool ok, const std::string& why) {
    if (!ok) fail(why);
  }
};

std::vector<std::vector<std::string>> read_rows(const std::string& name) {
  std::ifstream in(testutil::fixture_path(name));
  std::string line;
  std::getline(in, line);
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    rows.push_back(f);
  }
  return rows;
}

double abs_diff(const Rational& a, const Rational& b) { return std::fabs(to_double(a - b)); }

// ---- criterion 1 ----

Outcome effective_ratio() {
  Outcome o;
  MixPolicy p;
  p.seed = 20240601;
  o.check(expected_clinical_fraction(p) == Rational(405, 1000), "expected fraction is not exactly 0.405");
  BatchStream stream({"u0", "u1", "u2", "u3", "u4", "u5", "u6", "u7"}, {"c0", "c1", "c2"}, p);
  std::uint64_t clinical = 0, total = 0;
  for (int i = 0; i < 100000; ++i) {
    const auto b = stream.next();
    clinical += b.spec.n_clinical;
    total += b.spec.n_clinical + b.spec.n_unlabeled;
  }
  const double empirical = static_cast<double>(clinical) / static_cast<double>(total);
  o.check(empirical >= 0.400 && empirical <= 0.410, "empirical fraction out of range");
  char buf[96];
  std::snprintf(buf, sizeof buf, "exact 81/200, empirical %.5f over 1e5 batches", empirical);
  if (o.pass) o.detail = buf;
  return o;
}

// ---- criterion 2 ----

Outcome prompt_deltas_regression() {
  Outcome o;
  const auto rows = read_rows("prompt_deltas.csv");
  o.check(rows.size() == 48, "expected 48 fixture rows");
  std::vector<ScoreRecord> scores;
  std::map<std::pair<std::string, std::string>, Rational> published;
  for (const auto& f : rows) {
    scores.push_back({f[0], f[1], "P1", parse_rational(f[2]), {}, {}});
    scores.push_back({f[0], f[1], "P2", parse_rational(f[3]), {}, {}});
    published[{f[0], f[1]}] = parse_rational(f[4]);
  }
  double worst = 0;
  for (const auto& d : prompt_deltas(scores)) {
    const double diff = abs_diff(d.delta, published.at({d.dataset_id, d.model_id}));
    worst = std::max(worst, diff);
    o.check(diff <= 0.01, d.dataset_id + "/" + d.model_id + " delta off");
  }
  auto anchor = [&](const char* ds, const char* p1, const char* p2, const char* want) {
    o.check(format_fixed(prompt_delta(parse_rational(p1), parse_rational(p2)), 2, true) == want,
            std::string("anchor ") + ds);
  };
  anchor("aixsuture", "28.26", "36.96", "+8.70");
  anchor("cataract-21", "7.84", "3.92", "-3.92");
  const auto surgact = published.at({"surgicalactions160", "Qwen3-VL-8B"});
  o.check(format_fixed(surgact, 2, true) == "-6.25", "anchor surgicalactions160");
  if (o.pass) o.detail = "48 triples, max |error| " + std::to_string(worst);
  return o;
}

// ---- criterion 3 ----

Outcome domain_table_regression() {
  Outcome o;
  std::map<std::string, DomainReport> reports;
  for (auto& r : read_domain_scores_csv(testutil::fixture_path("domain_scores.csv"))) {
    reports.emplace(r.model_id, r);
  }
  for (const auto& f : read_rows("domain_summary.csv")) {
    const auto& r = reports.at(f[0]);
    o.check(abs_diff(r.overall_macro, parse_rational(f[1])) <= 0.01, f[0] + " overall macro");
    o.check(abs_diff(r.worst_score, parse_rational(f[2])) <= 0.01, f[0] + " worst domain");
  }
  std::size_t deltas = 0;
  for (const auto& f : read_rows("domain_deltas.csv")) {
    const auto d = model_delta(reports.at(f[0]).as_row(), reports.at(f[1]).as_row());
    o.check(abs_diff(d.at(f[2]), parse_rational(f[3])) <= 0.01, f[0] + " - " + f[1] + " " + f[2]);
    ++deltas;
  }
  const auto& ours = reports.at("SR-MAE (Ours)");
  const auto& base = reports.at("V-MAE (Baseline)");
  o.check(format_fixed(ours.overall_macro, 2) == "43.55" && format_fixed(ours.worst_score, 2) == "22.23",
          "SR-MAE anchor");
  o.check(format_fixed(base.overall_macro, 2) == "38.12" && format_fixed(base.worst_score, 2) == "19.09",
          "V-MAE anchor");
  o.check(format_fixed(ours.overall_macro - base.overall_macro, 2, true) == "+5.43", "delta anchor");
  const auto robotic = model_delta(ours.as_row(), reports.at("SR-MAE (w/o bal.)").as_row()).at("Robotic");
  o.check(format_fixed(robotic, 2, true) == "+24.57", "robotic anchor");
  if (o.pass) o.detail = std::to_string(reports.size()) + " rows, " + std::to_string(deltas) + " delta cells";
  return o;
}

// ---- criterion 4 ----

// Plain double-precision Lloyd from explicit seeds until assignments settle.
double lloyd_oracle(const EmbeddingMatrix& m, std::vector<std::vector<double>> c) {
  const std::size_t n = m.rows(), k = c.size(), d = m.dim();
  std::vector<std::size_t> assign(n, k);
  for (int it = 0; it < 1000; ++it) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < k; ++j) {
        double s = 0;
        for (std::size_t t = 0; t < d; ++t) s += (m.row(i)[t] - c[j][t]) * (m.row(i)[t] - c[j][t]);
        if (s < best_d) best_d = s, best = j;
      }
      changed |= assign[i] != best;
      assign[i] = best;
    }
    if (!changed) break;
    for (std::size_t j = 0; j < k; ++j) {
      std::vector<double> sum(d, 0);
      std::size_t count = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (assign[i] != j) continue;
        ++count;
        for (std::size_t t = 0; t < d; ++t) sum[t] += m.row(i)[t];
      }
      if (count > 0) {
        for (std::size_t t = 0; t < d; ++t) c[j][t] = sum[t] / static_cast<double>(count);
      }
    }
  }
  double cost = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t t = 0; t < d; ++t) cost += (m.row(i)[t] - c[assign[i]][t]) * (m.row(i)[t] - c[assign[i]][t]);
  }
  return cost;
}

// Multi-start: every k-subset of the points seeds one Lloyd run.
double best_lloyd(const EmbeddingMatrix& m, std::size_t k) {
  const std::size_t n = m.rows();
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> pick(n, 0);
  std::fill(pick.end() - static_cast<std::ptrdiff_t>(k), pick.end(), 1);
  do {
    std::vector<std::vector<double>> c;
    for (std::size_t i = 0; i < n; ++i) {
      if (pick[i]) c.emplace_back(m.row(i).begin(), m.row(i).end());
    }
    best = std::min(best, lloyd_oracle(m, c));
  } while (std::next_permutation(pick.begin(), pick.end()));
  return best;
}

Outcome kmeans_oracle() {
  Outcome o;
  Rng rng(4242);
  int instances = 0;
  double worst_ratio = 0;
  while (instances < 200) {
    const std::size_t n = 3 + rng.uniform_index(10), dim = 1 + rng.uniform_index(2), k = 1 + rng.uniform_index(3);
    const bool grid = rng.uniform_index(2) == 0;
    std::vector<float> data(n * dim);
    for (auto& x : data) {
      x = grid ? static_cast<float>(rng.uniform_index(6)) : static_cast<float>(rng.uniform_unit() * 10.0);
    }
    std::set<std::vector<float>> distinct;
    for (std::size_t i = 0; i < n; ++i) distinct.emplace(data.begin() + i * dim, data.begin() + (i + 1) * dim);
    if (distinct.size() < k) continue;
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < n; ++i) ids.push_back("x" + std::to_string(i));
    const EmbeddingMatrix m(dim, data, ids);
    const auto seed = rng.next_u64();
    const auto model = kmeans(m.view(), k, seed);
    const double best = best_lloyd(m, k);
    if (best > 0) worst_ratio = std::max(worst_ratio, model.inertia / best);
    o.check(model.inertia <= 1.05 * best + 1e-9,
            "instance " + std::to_string(instances) + ": inertia " + std::to_string(model.inertia) +
                " vs oracle " + std::to_string(best));
    for (std::size_t i = 1; i < model.inertia_history.size(); ++i) {
      o.check(model.inertia_history[i] <= model.inertia_history[i - 1],
              "inertia increased on instance " + std::to_string(instances));
    }
    ++instances;
  }
  if (o.pass) o.detail = "200 instances, worst inertia/oracle " + std::to_string(worst_ratio);
  return o;
}

// ---- criterion 5 ----

// Hand simulation of equal split with water filling: deal units one at a time
// round-robin over children that still have room.
std::vector<std::uint64_t> deal(std::uint64_t units, const std::vector<std::uint64_t>& caps) {
  std::vector<std::uint64_t> out(caps.size(), 0);
  bool progress = true;
  while (units > 0 && progress) {
    progress = false;
    for (std::size_t i = 0; i < caps.size() && units > 0; ++i) {
      if (out[i] < caps[i]) ++out[i], --units, progress = true;
    }
  }
  return out;
}

Outcome curation_balance() {
  Outcome o;
  const auto m = fixtures::make_four_blob_fixture();
  const std::vector<std::size_t> levels = {4};
  const auto tree = build_hierarchy(m.view(), levels, 3, {}, canonical_order(m.row_ids()), false);
  const auto set = curate(tree, m, Rational(1, 4));
  o.check(set.entries.size() == 100, "curated size " + std::to_string(set.entries.size()));
  std::vector<std::uint64_t> sizes(4, 0);
  for (auto a : tree.levels[0].assignments) ++sizes[a];
  o.check(set.plan.quotas[0] == deal(100, sizes), "leaf quotas differ from hand simulation");
  std::map<std::string, std::size_t> raw, picked;
  for (const auto& id : m.row_ids()) ++raw[id.substr(0, 6)];
  for (const auto& e : set.entries) ++picked[e.clip_id.substr(0, 6)];
  std::string shares;
  for (const auto& [blob, count] : raw) {
    const double raw_share = static_cast<double>(count) / static_cast<double>(m.rows());
    const double cur_share = static_cast<double>(picked[blob]) / static_cast<double>(set.entries.size());
    if (count < 280) o.check(cur_share > raw_share, blob + " share did not grow");
    shares += (shares.empty() ? "" : " ") + blob + "=" + std::to_string(picked[blob]);
  }
  if (o.pass) o.detail = "100 selected, " + shares;
  return o;
}

// ---- criterion 6 ----

std::array<std::uint64_t, 3> largest_remainder(std::uint64_t n) {
  std::array<std::uint64_t, 3> out{7 * n / 10, 2 * n / 10, n / 10};
  std::array<std::uint64_t, 3> rem{7 * n % 10, 2 * n % 10, n % 10};
  for (auto left = n - out[0] - out[1] - out[2]; left > 0; --left) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < 3; ++i) {
      if (rem[i] > rem[best]) best = i;
    }
    ++out[best];
    rem[best] = 0;
  }
  return out;
}

Outcome split_law() {
  Outcome o;
  o.check(split_counts(10, kDefaultRatios) == std::array<std::uint64_t, 3>{7, 2, 1}, "10 -> 7/2/1");
  o.check(split_counts(15, kDefaultRatios) == std::array<std::uint64_t, 3>{11, 3, 1}, "15 -> 11/3/1");
  Rng rng(77);
  for (int trial = 0; trial < 1000 && o.pass; ++trial) {
    const auto n = 3 + rng.uniform_index(498);
    CorpusManifest corpus;
    std::vector<std::string> videos;
    for (std::uint64_t i = 0; i < n; ++i) {
      VideoRecord v;
      v.video_id = "s" + std::to_string(trial) + "-" + std::to_string(rng.next_u64() % 1000000007);
      v.dataset_id = "ds";
      v.frame_count = 25;
      v.duration_s = 1;
      if (std::find(videos.begin(), videos.end(), v.video_id) != videos.end()) {
        --i;
        continue;
      }
      videos.push_back(v.video_id);
      corpus.videos.push_back(v);
    }
    const auto seed = rng.next_u64();
    const auto m = resolve_manifest("ds", videos, std::nullopt, std::nullopt, kDefaultRatios, seed, "t0");
    const auto want = largest_remainder(n);
    std::set<std::string> seen;
    for (auto s : kAllSplits) {
      o.check(m.assignment[s].size() == want[static_cast<std::size_t>(s)], "count mismatch at size " + std::to_string(n));
      for (const auto& id : m.assignment[s]) o.check(seen.insert(id).second, "video in two splits");
    }
    o.check(seen.size() == n, "partition does not cover all videos");
    o.check(verify_disjoint(m, CorpusIndex(corpus)).empty(), "verify_disjoint reported violations");
    std::vector<std::string> reordered = videos;
    std::reverse(reordered.begin(), reordered.end());
    const auto again = resolve_manifest("ds", reordered, std::nullopt, std::nullopt, kDefaultRatios, seed, "t1");
    o.check(again.version == m.version, "same seed gave a different version");
  }
  if (o.pass) o.detail = "1000 random sets";
  return o;
}

// ---- criterion 7 ----

Outcome determinism() {
  Outcome o;
  testutil::TempDir dir;
  fixtures::write_pipeline_fixture(fixtures::make_pipeline_fixture(), dir.path());
  const auto store = (dir / "store.semb").string();
  const auto clinical = (dir / "clinical.txt").string();
  std::map<std::string, std::vector<std::uint8_t>> reference;
  int runs = 0;
  for (const char* threads : {"1", "8", "8", "1"}) {
    const auto tag = (dir / ("run" + std::to_string(runs++))).string();
    const std::vector<std::string> cfg = {"--levels", "64,16,4", "--seed", "1234", "--threads", threads};
    auto step = [&](std::vector<std::string> args) {
      args.insert(args.end(), cfg.begin(), cfg.end());
      std::ostringstream out, err;
      const int code = app::run(args, out, err);
      o.check(code == 0, args[0] + " failed: " + err.str());
    };
    step({"cluster", "--store", store, "--out", tag + ".tree"});
    step({"curate", "--store", store, "--tree", tag + ".tree", "--out", tag + ".curated"});
    step({"sample", "--curated", tag + ".curated", "--clinical", clinical, "--out", tag + ".batches"});
    for (const char* ext : {".tree", ".curated", ".batches"}) {
      const auto bytes = testutil::read_bytes(tag + ext);
      auto [it, fresh] = reference.emplace(ext, bytes);
      if (!fresh) o.check(it->second == bytes, std::string(ext) + " differs (threads " + threads + ")");
      o.check(!bytes.empty(), std::string(ext) + " is empty");
    }
  }
  if (o.pass) o.detail = "tree, curated set and batches identical over threads {1, 8} x 2 runs";
  return o;
}

// ---- criterion 8 ----

Outcome store_roundtrip() {
  Outcome o;
  Rng rng(8);
  testutil::TempDir dir;
  for (int i = 0; i < 100; ++i) {
    const auto rows = 1 + rng.uniform_index(200), dim = 1 + rng.uniform_index(64);
    std::vector<float> data(rows * dim);
    for (auto& x : data) {
      // arbitrary finite bit patterns, including denormals and signed zero
      std::uint32_t bits;
      do {
        bits = static_cast<std::uint32_t>(rng.next_u64());
      } while ((bits & 0x7f800000U) == 0x7f800000U);
      std::memcpy(&x, &bits, sizeof x);
    }
    std::vector<std::string> ids;
    for (std::uint64_t r = 0; r < rows; ++r) ids.push_back("m" + std::to_string(i) + "-r" + std::to_string(r));
    const EmbeddingMatrix m(dim, data, ids);
    write_store(m, dir / "m.semb");
    const auto back = read_store(dir / "m.semb");
    o.check(back.row_ids() == m.row_ids() && back.dim() == dim &&
                std::memcmp(back.data().data(), m.data().data(), m.data().size_bytes()) == 0,
            "matrix " + std::to_string(i) + " not bit-exact");
  }

  std::vector<float> data = {1, 2, 3, 4, 5, 6};
  const EmbeddingMatrix small(2, data, {"a", "b", "c"});
  const auto good = encode_store(small);
  auto expect_code = [&](std::vector<std::uint8_t> bytes, ErrorCode want, const char* label) {
    try {
      decode_store(bytes);
      o.fail(std::string(label) + " accepted");
    } catch (const Error& e) {
      o.check(e.code() == want, std::string(label) + " gave " + std::string(error_name(e.code())));
    }
  };
  expect_code({good.begin(), good.end() - 7}, ErrorCode::kSizeMismatch, "truncation");
  auto magic = good;
  magic[3] ^= 0x20;
  expect_code(magic, ErrorCode::kBadMagic, "bad magic");
  auto flip = good;
  flip[30] ^= 0x80;
  expect_code(flip, ErrorCode::kChecksumMismatch, "checksum flip");
  data[3] = std::numeric_limits<float>::quiet_NaN();
  expect_code(encode_store(EmbeddingMatrix(2, data, {"a", "b", "c"})), ErrorCode::kNonFiniteValue, "NaN");
  if (o.pass) o.detail = "100 matrices bit-exact; truncation, magic, checksum, NaN rejected";
  return o;
}

// ---- criterion 9 ----

Outcome scale_smoke() {
  Outcome o;
  constexpr std::size_t kRows = 100000, kDim = 768;
  fixtures::BlobSpec spec;
  spec.sizes.assign(256, kRows / 256);
  for (std::size_t i = 0; i < kRows % 256; ++i) ++spec.sizes[i];
  spec.dim = kDim;
  spec.spacing = 4.0;
  spec.sigma = 0.25;
  spec.seed = 9;
  const auto m = fixtures::make_blobs(spec);

  WorkerPool pool(std::max(1u, std::thread::hardware_concurrency()));
  KMeansOptions options;
  options.pool = &pool;
  const std::vector<std::size_t> levels = {256, 64, 16};
  const auto start = std::chrono::steady_clock::now();
  const auto tree = build_hierarchy(m.view(), levels, 555, options, canonical_order(m.row_ids()), false);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  o.check(tree.levels.size() == 3, "level count");
  std::size_t below = kRows;
  for (std::size_t l = 0; l < tree.levels.size() && o.pass; ++l) {
    const auto& lv = tree.levels[l];
    const std::string at = "level " + std::to_string(l) + ": ";
    o.check(lv.k == levels[l] && lv.dim == kDim, at + "shape");
    o.check(lv.centroids.size() == lv.k * kDim, at + "centroid count");
    o.check(lv.assignments.size() == below, at + "assignment count");
    for (float c : lv.centroids) {
      if (!std::isfinite(c)) {
        o.fail(at + "non-finite centroid");
        break;
      }
    }
    std::vector<std::size_t> sizes(lv.k, 0);
    for (auto a : lv.assignments) {
      if (a >= lv.k) {
        o.fail(at + "assignment out of range");
        break;
      }
      ++sizes[a];
    }
    o.check(std::count(sizes.begin(), sizes.end(), 0) == 0, at + "empty cluster");
    for (std::size_t i = 1; i < lv.inertia_history.size(); ++i) {
      o.check(lv.inertia_history[i] <= lv.inertia_history[i - 1], at + "inertia increased");
    }
    // Inertia and nearest-centroid assignment, recomputed independently.
    const MatrixView points = l == 0 ? m.view() : tree.levels[l - 1].centroid_view();
    double cost = 0;
    for (std::size_t i = 0; i < points.rows; ++i) {
      const auto p = points.row(i);
      const auto c = lv.centroid_view().row(lv.assignments[i]);
      for (std::size_t t = 0; t < kDim; ++t) cost += (double(p[t]) - c[t]) * (double(p[t]) - c[t]);
    }
    o.check(std::fabs(cost - lv.inertia) <= 1e-6 * std::max(1.0, cost), at + "inertia mismatch");
    const std::size_t stride = std::max<std::size_t>(1, points.rows / 2000);
    for (std::size_t i = 0; i < points.rows; i += stride) {
      const auto p = points.row(i);
      double own = 0, best = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < lv.k; ++j) {
        const auto c = lv.centroid_view().row(j);
        double s = 0;
        for (std::size_t t = 0; t < kDim; ++t) s += (double(p[t]) - c[t]) * (double(p[t]) - c[t]);
        best = std::min(best, s);
        if (j == lv.assignments[i]) own = s;
      }
      if (own > best * (1 + 1e-9) + 1e-9) {
        o.fail(at + "point not at nearest centroid");
        break;
      }
    }
    below = lv.k;
  }
  const auto composed = tree.composed_assignment(2);
  o.check(composed.size() == kRows, "composed assignment size");
  o.check(seconds < 600.0, "took " + std::to_string(seconds) + " s");
  if (o.pass) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "100000 x 768 -> [256, 64, 16] in %.1f s on %zu thread(s)", seconds,
                  pool.threads());
    o.detail = buf;
  }
  return o;
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria = {
      {1, "effective clinical ratio", 10, effective_ratio},
      {2, "prompt delta regression", 1, prompt_deltas_regression},
      {3, "domain macro/min regression", 1, domain_table_regression},
      {4, "k-means oracle equivalence", 120, kmeans_oracle},
      {5, "curation exactness and balance", 10, curation_balance},
      {6, "split law", 30, split_law},
      {7, "pipeline determinism", 120, determinism},
      {8, "store roundtrip", 30, store_roundtrip},
      {9, "scale smoke test", 600, scale_smoke},
  };
  // Optional arguments select criteria by id; none runs them all.
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  int failures = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.contains(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.fail(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (secs > c.budget_s) o.fail("runtime " + std::to_string(secs) + " s over budget");
    failures += o.pass ? 0 : 1;
    std::printf("%s %d %s: %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
