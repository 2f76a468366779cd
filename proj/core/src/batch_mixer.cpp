#include "surgcurate/batch_mixer.hpp"

#include <numeric>
#include <ostream>

#include <nlohmann/json.hpp>

#include "surgcurate/error.hpp"

namespace surgcurate {

using nlohmann::json;

std::string_view to_string(BatchMode mode) noexcept {
  return mode == BatchMode::kPureClinical ? "PureClinical" : "Mixed";
}

std::string_view to_string(ModeSchedule schedule) noexcept {
  return schedule == ModeSchedule::kIid ? "iid" : "interleave";
}

ModeSchedule parse_schedule(std::string_view text) {
  if (text == "iid") return ModeSchedule::kIid;
  if (text == "interleave") return ModeSchedule::kInterleave;
  throw Error(ErrorCode::kParse, "unknown schedule '" + std::string(text) + "'");
}

void MixPolicy::validate() const {
  if (p_pure_clinical < 0 || p_pure_clinical > 1) {
    throw Error(ErrorCode::kInvalidPolicy, "p_pure_clinical must be in [0, 1]");
  }
  if (mixed_unlabeled_frac < 0 || mixed_unlabeled_frac > 1) {
    throw Error(ErrorCode::kInvalidPolicy, "mixed_unlabeled_frac must be in [0, 1]");
  }
  if (batch_size == 0) throw Error(ErrorCode::kInvalidPolicy, "batch_size must be >= 1");
}

Rational expected_clinical_fraction(const MixPolicy& policy) {
  policy.validate();
  const Rational one(1);
  return policy.p_pure_clinical + (one - policy.p_pure_clinical) * (one - policy.mixed_unlabeled_frac);
}

BatchSpec mixed_composition(const MixPolicy& policy) {
  const Rational unlabeled = policy.mixed_unlabeled_frac * Rational(policy.batch_size);
  const Rational clinical = Rational(policy.batch_size) - unlabeled;
  // Largest remainder over two parts; equal remainders favour unlabeled.
  auto floor_of = [](const Rational& r) { return r.numerator() / r.denominator(); };
  std::int64_t u = floor_of(unlabeled);
  std::int64_t c = floor_of(clinical);
  if (u + c < policy.batch_size) {
    const Rational ru = unlabeled - Rational(u);
    const Rational rc = clinical - Rational(c);
    if (ru >= rc) {
      ++u;
    } else {
      ++c;
    }
  }
  return {BatchMode::kMixed, static_cast<std::uint32_t>(u), static_cast<std::uint32_t>(c)};
}

BatchSpec plan_batch(const MixPolicy& policy, Rng& rng) {
  policy.validate();
  const auto den = static_cast<std::uint64_t>(policy.p_pure_clinical.denominator());
  const auto num = static_cast<std::uint64_t>(policy.p_pure_clinical.numerator());
  if (rng.uniform_index(den) < num) return {BatchMode::kPureClinical, 0, policy.batch_size};
  return mixed_composition(policy);
}

BatchSpec plan_batch_interleaved(const MixPolicy& policy, std::uint64_t batch_index) {
  policy.validate();
  const auto num = static_cast<unsigned __int128>(policy.p_pure_clinical.numerator());
  const auto den = static_cast<unsigned __int128>(policy.p_pure_clinical.denominator());
  const auto before = batch_index * num / den;
  const auto after = (static_cast<unsigned __int128>(batch_index) + 1) * num / den;
  if (after > before) return {BatchMode::kPureClinical, 0, policy.batch_size};
  return mixed_composition(policy);
}

PoolCursor::PoolCursor(std::string name, std::vector<std::string> pool, std::uint64_t seed)
    : name_(std::move(name)), pool_(std::move(pool)), seed_(seed) {
  if (pool_.empty()) throw Error(ErrorCode::kEmptyPool, "pool '" + name_ + "' is empty");
  permutation_.resize(pool_.size());
  reshuffle();
}

void PoolCursor::reshuffle() {
  std::iota(permutation_.begin(), permutation_.end(), std::size_t{0});
  Rng rng(derive_seed(seed_, "pool:" + name_ + ":epoch:" + std::to_string(epoch_)));
  rng.shuffle(std::span(permutation_));
  position_ = 0;
}

const std::string& PoolCursor::next() {
  if (position_ == permutation_.size()) {
    ++epoch_;
    reshuffle();
  }
  return pool_[permutation_[position_++]];
}

BatchStream::BatchStream(std::vector<std::string> unlabeled, std::vector<std::string> clinical,
                         MixPolicy policy)
    : policy_((policy.validate(), policy)),
      unlabeled_("unlabeled", std::move(unlabeled), policy.seed),
      clinical_("clinical", std::move(clinical), policy.seed),
      mode_rng_(derive_seed(policy.seed, "mode")) {}

Batch BatchStream::next() {
  Batch batch;
  batch.index = index_;
  batch.spec = policy_.schedule == ModeSchedule::kIid ? plan_batch(policy_, mode_rng_)
                                                      : plan_batch_interleaved(policy_, index_);
  ++index_;
  batch.clip_ids.reserve(policy_.batch_size);
  for (std::uint32_t i = 0; i < batch.spec.n_unlabeled; ++i) batch.clip_ids.push_back(unlabeled_.next());
  for (std::uint32_t i = 0; i < batch.spec.n_clinical; ++i) batch.clip_ids.push_back(clinical_.next());
  return batch;
}

std::vector<Batch> sample_stream(std::vector<std::string> unlabeled,
                                 std::vector<std::string> clinical, const MixPolicy& policy,
                                 std::uint64_t n_batches) {
  BatchStream stream(std::move(unlabeled), std::move(clinical), policy);
  std::vector<Batch> out;
  out.reserve(n_batches);
  for (std::uint64_t i = 0; i < n_batches; ++i) out.push_back(stream.next());
  return out;
}

namespace {

std::string rational_text(const Rational& r) {
  return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

}  // namespace

void write_batch_header(std::ostream& out, const MixPolicy& policy, std::uint64_t n_batches) {
  json header{{"kind", "header"},
              {"policy",
               {{"p_pure_clinical", rational_text(policy.p_pure_clinical)},
                {"mixed_unlabeled_frac", rational_text(policy.mixed_unlabeled_frac)},
                {"batch_size", policy.batch_size},
                {"seed", policy.seed},
                {"schedule", to_string(policy.schedule)},
                {"composition", "per-batch"},
                {"expected_clinical_fraction", rational_text(expected_clinical_fraction(policy))}}},
              {"n_batches", n_batches}};
  out << header.dump() << '\n';
}

void write_batch_line(std::ostream& out, const Batch& batch) {
  json line{{"index", batch.index},
            {"mode", to_string(batch.spec.mode)},
            {"n_unlabeled", batch.spec.n_unlabeled},
            {"n_clinical", batch.spec.n_clinical},
            {"clip_ids", batch.clip_ids}};
  out << line.dump() << '\n';
}

}  // namespace surgcurate
