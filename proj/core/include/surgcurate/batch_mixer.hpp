#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "surgcurate/random.hpp"
#include "surgcurate/rational.hpp"

namespace surgcurate {

// How the per-batch mode is chosen: independently per batch, or on a fixed
// Bresenham-style schedule that hits the pure-clinical rate exactly.
enum class ModeSchedule { kIid, kInterleave };

struct MixPolicy {
  Rational p_pure_clinical{15, 100};
  Rational mixed_unlabeled_frac{70, 100};
  std::uint32_t batch_size = 64;
  std::uint64_t seed = 0;
  ModeSchedule schedule = ModeSchedule::kIid;

  // Throws InvalidPolicy.
  void validate() const;
};

enum class BatchMode { kPureClinical, kMixed };

std::string_view to_string(BatchMode mode) noexcept;
std::string_view to_string(ModeSchedule schedule) noexcept;
ModeSchedule parse_schedule(std::string_view text);

struct BatchSpec {
  BatchMode mode = BatchMode::kMixed;
  std::uint32_t n_unlabeled = 0;
  std::uint32_t n_clinical = 0;
  bool operator==(const BatchSpec&) const = default;
};

// p_pure + (1 - p_pure) * (1 - mixed_unlabeled_frac), exactly.
Rational expected_clinical_fraction(const MixPolicy& policy);

// Composition of a Mixed batch: largest-remainder split of batch_size, ties
// favouring the unlabeled side.
BatchSpec mixed_composition(const MixPolicy& policy);

// Draws the batch mode from `rng` (one draw per call).
BatchSpec plan_batch(const MixPolicy& policy, Rng& rng);

// Deterministic schedule: batch i is pure iff floor((i+1)p) > floor(i p).
BatchSpec plan_batch_interleaved(const MixPolicy& policy, std::uint64_t batch_index);

// Epoch-wise shuffled pass over one pool. Each epoch reshuffles with
// derive_seed(seed, "pool:<name>:epoch:<e>").
class PoolCursor {
 public:
  PoolCursor(std::string name, std::vector<std::string> pool, std::uint64_t seed);

  const std::string& next();
  std::uint64_t epoch() const noexcept { return epoch_; }
  std::size_t position() const noexcept { return position_; }
  std::size_t size() const noexcept { return pool_.size(); }

 private:
  void reshuffle();

  std::string name_;
  std::vector<std::string> pool_;
  std::vector<std::size_t> permutation_;
  std::uint64_t seed_;
  std::uint64_t epoch_ = 0;
  std::size_t position_ = 0;
};

struct Batch {
  std::uint64_t index = 0;
  BatchSpec spec;
  std::vector<std::string> clip_ids;  // unlabeled clips first, then clinical
  bool operator==(const Batch&) const = default;
};

// Single-producer stream of mixed batches. Throws EmptyPool if either pool is
// empty.
class BatchStream {
 public:
  BatchStream(std::vector<std::string> unlabeled, std::vector<std::string> clinical,
              MixPolicy policy);

  Batch next();
  const MixPolicy& policy() const noexcept { return policy_; }

 private:
  MixPolicy policy_;
  PoolCursor unlabeled_;
  PoolCursor clinical_;
  Rng mode_rng_;
  std::uint64_t index_ = 0;
};

std::vector<Batch> sample_stream(std::vector<std::string> unlabeled,
                                 std::vector<std::string> clinical, const MixPolicy& policy,
                                 std::uint64_t n_batches);

// Batch manifest (JSON-lines): header {"kind":"header","policy":{...},
// "n_batches":N}, then {"index","mode","n_unlabeled","n_clinical","clip_ids"}
// per batch.
void write_batch_header(std::ostream& out, const MixPolicy& policy, std::uint64_t n_batches);
void write_batch_line(std::ostream& out, const Batch& batch);

}  // namespace surgcurate
