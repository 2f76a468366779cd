#include <gtest/gtest.h>

#include <algorithm>
#include <atomic>
#include <numeric>
#include <set>

#include "surgcurate/apportion.hpp"
#include "surgcurate/error.hpp"
#include "surgcurate/hashing.hpp"
#include "surgcurate/parallel.hpp"
#include "surgcurate/random.hpp"
#include "surgcurate/rational.hpp"
#include "test_support.hpp"

using namespace surgcurate;

TEST(Rational, ParsesDecimalsSignsAndFractions) {
  EXPECT_EQ(parse_rational("12"), Rational(12));
  EXPECT_EQ(parse_rational("-3.92"), Rational(-392, 100));
  EXPECT_EQ(parse_rational("+8.70"), Rational(87, 10));
  EXPECT_EQ(parse_rational("0.405"), Rational(81, 200));
  EXPECT_EQ(parse_rational("7/20"), Rational(7, 20));
  EXPECT_EQ(parse_rational(".5"), Rational(1, 2));
  EXPECT_THROW(parse_rational(""), Error);
  EXPECT_THROW(parse_rational("abc"), Error);
  EXPECT_THROW(parse_rational("1/0"), Error);
}

TEST(Rational, IntegerComparisonsTerminate) {
  const Rational r(1, 10);
  EXPECT_FALSE(r == 0);
  EXPECT_TRUE(r != 0);
  EXPECT_TRUE(r < 1);
  EXPECT_TRUE(0 < r);
  EXPECT_TRUE(Rational(2) == std::int64_t{2});
}

TEST(Rational, RoundsHalfAwayFromZero) {
  EXPECT_EQ(round_half_away(Rational(5, 2)), 3);
  EXPECT_EQ(round_half_away(Rational(-5, 2)), -3);
  EXPECT_EQ(round_half_away(Rational(7, 3)), 2);
  EXPECT_EQ(format_fixed(Rational(33225, 1000), 2), "33.23");
  EXPECT_EQ(format_fixed(Rational(300, 7), 2), "42.86");
  EXPECT_EQ(format_fixed(Rational(0), 2, true), "+0.00");
  EXPECT_EQ(format_fixed(Rational(-392, 100), 2, true), "-3.92");
  EXPECT_EQ(format_fixed(Rational(-1, 1000), 2, true), "+0.00");
  EXPECT_EQ(format_fixed(Rational(5, 100), 2), "0.05");
}

TEST(Hashing, KnownVectors) {
  EXPECT_EQ(to_hex(sha256(std::string_view(""))),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(to_hex(sha256(std::string_view("abc"))),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Hashing, FileDigestMatchesBufferDigest) {
  testutil::TempDir dir;
  std::string text(100000, 'x');
  for (std::size_t i = 0; i < text.size(); ++i) text[i] = static_cast<char>('a' + i % 26);
  testutil::write_text(dir / "f.bin", text);
  EXPECT_EQ(sha256_file(dir / "f.bin"), sha256(std::string_view(text)));
}

TEST(Random, DeriveSeedMatchesReferenceDigest) {
  // First eight little-endian bytes of SHA-256("surgcurate:<stage>:<root>"),
  // computed with Python's hashlib.
  EXPECT_EQ(derive_seed(42, "cluster"), 12824412240340115806ULL);
  EXPECT_EQ(derive_seed(0, "sample"), 3185439346224509416ULL);
  EXPECT_NE(derive_seed(42, "cluster"), derive_seed(42, "curate"));
}

TEST(Random, UniformIndexPassesChiSquare) {
  Rng rng(123);
  constexpr std::size_t kBins = 10, kDraws = 100000;
  std::array<double, kBins> counts{};
  for (std::size_t i = 0; i < kDraws; ++i) counts[rng.uniform_index(kBins)] += 1;
  double chi2 = 0;
  for (double c : counts) chi2 += (c - kDraws / 10.0) * (c - kDraws / 10.0) / (kDraws / 10.0);
  EXPECT_LT(chi2, 21.67);  // df = 9, alpha = 0.01
}

TEST(Random, ShuffleIsAPermutationAndSeeded) {
  std::vector<int> a(100), b(100);
  std::iota(a.begin(), a.end(), 0);
  b = a;
  Rng r1(5), r2(5);
  r1.shuffle(std::span(a));
  r2.shuffle(std::span(b));
  EXPECT_EQ(a, b);
  std::set<int> seen(a.begin(), a.end());
  EXPECT_EQ(seen.size(), 100u);
}

TEST(Random, UniformUnitInRange) {
  Rng rng(9);
  double sum = 0;
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform_unit();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / 100000, 0.5, 0.01);
}

TEST(WorkerPool, CoversEveryIndexOnce) {
  for (std::size_t threads : {1u, 3u, 8u}) {
    WorkerPool pool(threads);
    std::vector<std::atomic<int>> hits(1000);
    pool.for_each_chunk(1000, 37, [&](std::size_t, std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) hits[i]++;
    });
    for (auto& h : hits) ASSERT_EQ(h.load(), 1);
  }
}

TEST(WorkerPool, RethrowsWorkerExceptions) {
  WorkerPool pool(4);
  EXPECT_THROW(pool.for_each_chunk(100, 10,
                                   [](std::size_t c, std::size_t, std::size_t) {
                                     if (c == 3) throw Error(ErrorCode::kIo, "boom");
                                   }),
               Error);
}

// Hamilton apportionment by exhaustive definition: floors, then the
// remaining units to the largest fractional parts (lower index first).
std::vector<std::uint64_t> apportion_oracle(std::uint64_t quota, const std::vector<std::uint64_t>& w) {
  const std::uint64_t total = std::accumulate(w.begin(), w.end(), std::uint64_t{0});
  std::vector<std::uint64_t> out(w.size(), 0);
  if (total == 0) return out;
  std::vector<Rational> rem(w.size());
  std::uint64_t given = 0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const Rational exact(static_cast<std::int64_t>(quota * w[i]), static_cast<std::int64_t>(total));
    out[i] = static_cast<std::uint64_t>(boost::rational_cast<std::int64_t>(exact));
    rem[i] = exact - Rational(static_cast<std::int64_t>(out[i]));
    given += out[i];
  }
  for (; given < quota; ++given) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < w.size(); ++i) {
      if (rem[i] > rem[best]) best = i;
    }
    ++out[best];
    rem[best] = Rational(-1);
  }
  return out;
}

TEST(Apportion, MatchesDefinition) {
  EXPECT_EQ(apportion(10, std::vector<std::uint64_t>{7, 2, 1}), (std::vector<std::uint64_t>{7, 2, 1}));
  EXPECT_EQ(apportion(15, std::vector<std::uint64_t>{7, 2, 1}), (std::vector<std::uint64_t>{11, 3, 1}));
  EXPECT_EQ(apportion(64, std::vector<std::uint64_t>{7, 3}), (std::vector<std::uint64_t>{45, 19}));
  Rng rng(77);
  for (int trial = 0; trial < 2000; ++trial) {
    const auto k = 1 + rng.uniform_index(6);
    std::vector<std::uint64_t> w(k);
    for (auto& x : w) x = rng.uniform_index(20);
    const auto quota = rng.uniform_index(200);
    ASSERT_EQ(apportion(quota, w), apportion_oracle(quota, w));
  }
}
