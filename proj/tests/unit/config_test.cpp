#include <gtest/gtest.h>

#include "surgcurate/config.hpp"
#include "surgcurate/error.hpp"
#include "test_support.hpp"

using namespace surgcurate;

namespace {

std::string config_error(const ConfigInputs& in) {
  try {
    resolve_config(in);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfigError);
    return e.what();
  }
  ADD_FAILURE() << "resolve_config succeeded";
  return {};
}

}  // namespace

TEST(Config, DefaultsAreDocumented) {
  const auto c = resolve_config({});
  EXPECT_EQ(c.get_rational("curate.fraction"), Rational(1, 10));
  EXPECT_EQ(c.get_rational("sample.p_pure"), Rational(15, 100));
  EXPECT_EQ(c.get_rational("sample.mix"), Rational(7, 10));
  EXPECT_EQ(c.text("split.ratios"), "7:2:1");
  EXPECT_DOUBLE_EQ(c.get_real("cluster.tol"), 1e-4);
  EXPECT_EQ(c.get_levels("cluster.levels"), (std::vector<std::size_t>{25000, 5000, 1000}));
  EXPECT_EQ(c.get_uint("sample.batch"), 64u);
  EXPECT_TRUE(c.get_bool("cluster.normalize"));
  EXPECT_EQ(c.values().size(), config_registry().size());
  for (const auto& [key, source] : c.sources()) EXPECT_EQ(source, ConfigSource::kDefault) << key;
}

TEST(Config, PrecedenceFlagsEnvFileDefaults) {
  testutil::TempDir dir;
  testutil::write_text(dir / "c.ini", "[curate]\nfraction = 0.2\n[sample]\nbatch = 32\nmix = 0.5\n");
  ConfigInputs in;
  in.file = dir / "c.ini";
  in.env = {{"SURGCURATE_SAMPLE_BATCH", "16"}, {"SURGCURATE_SAMPLE_MIX", "0.6"}};
  in.flags = {{"sample.mix", "0.9"}};
  const auto c = resolve_config(in);
  EXPECT_EQ(c.get_rational("curate.fraction"), Rational(1, 5));
  EXPECT_EQ(c.sources().at("curate.fraction"), ConfigSource::kFile);
  EXPECT_EQ(c.get_uint("sample.batch"), 16u);
  EXPECT_EQ(c.sources().at("sample.batch"), ConfigSource::kEnv);
  EXPECT_EQ(c.get_rational("sample.mix"), Rational(9, 10));
  EXPECT_EQ(c.sources().at("sample.mix"), ConfigSource::kFlag);
  EXPECT_EQ(c.get_uint("run.seed"), 0u);
}

TEST(Config, UnknownKeysAreNamed) {
  testutil::TempDir dir;
  testutil::write_text(dir / "c.ini", "[curate]\nfracton = 0.2\n");
  ConfigInputs file;
  file.file = dir / "c.ini";
  EXPECT_NE(config_error(file).find("curate.fracton"), std::string::npos);

  ConfigInputs env;
  env.env = {{"SURGCURATE_SAMPLE_BOGUS", "1"}};
  EXPECT_NE(config_error(env).find("SURGCURATE_SAMPLE_BOGUS"), std::string::npos);

  ConfigInputs flags;
  flags.flags = {{"nope.key", "1"}};
  EXPECT_NE(config_error(flags).find("nope.key"), std::string::npos);
}

TEST(Config, TypeMismatchIsConfigError) {
  ConfigInputs in;
  in.flags = {{"sample.batch", "many"}};
  EXPECT_NE(config_error(in).find("sample.batch"), std::string::npos);
  in.flags = {{"curate.fraction", "1/0"}};
  config_error(in);
  in.flags = {{"cluster.levels", "10,x"}};
  config_error(in);
}

TEST(Config, MissingFileIsInputMissing) {
  ConfigInputs in;
  in.file = "/nonexistent/config.ini";
  try {
    resolve_config(in);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInputMissing);
  }
}

TEST(Config, RenderedIniResolvesToSameValues) {
  ConfigInputs in;
  in.flags = {{"run.seed", "77"}, {"cluster.levels", "64,16"}};
  const auto c = resolve_config(in);
  testutil::TempDir dir;
  testutil::write_text(dir / "r.ini", render_config_ini(c));
  ConfigInputs again;
  again.file = dir / "r.ini";
  EXPECT_EQ(resolve_config(again).values(), c.values());
}

TEST(Config, FlagAndEnvNamesMirrorKeys) {
  const auto& k = config_key("cluster.max_iter");
  EXPECT_EQ(k.flag(), "--max-iter");
  EXPECT_EQ(k.env_var(), "SURGCURATE_CLUSTER_MAX_ITER");
  EXPECT_THROW(config_key("cluster.nothing"), Error);
}
