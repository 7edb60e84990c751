#include <gtest/gtest.h>

#include <sstream>

#include "vcc/config.hpp"
#include "vcc/error.hpp"

using namespace vcc;

namespace {

std::vector<ConfigEntry> parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

std::size_t error_line(const std::string& text) {
  try {
    parse(text);
  } catch (const ConfigError& e) {
    return e.line();
  }
  return 999;
}

}  // namespace

TEST(Config, ParsesEntries) {
  const auto e = parse("# header\n\n  dim = 64  \nmode=vcc # trailing\nseq_len = 1, 2 3\n");
  ASSERT_EQ(e.size(), 3u);
  EXPECT_EQ(e[0].key, "dim");
  EXPECT_EQ(e[0].value, "64");
  EXPECT_EQ(e[0].line, 3u);
  EXPECT_EQ(e[1].value, "vcc");
  EXPECT_EQ(e[1].line, 4u);
  EXPECT_EQ(config_counts(e[2]), (std::vector<std::size_t>{1, 2, 3}));
}

TEST(Config, EmptyValueIsKept) {
  const auto e = parse("out =\n");
  ASSERT_EQ(e.size(), 1u);
  EXPECT_EQ(e[0].value, "");
}

TEST(Config, SyntaxErrors) {
  EXPECT_EQ(error_line("a = 1\nbroken\n"), 2u);
  EXPECT_EQ(error_line("= 3\n"), 1u);
  EXPECT_EQ(error_line("a = 1\n\na = 2\n"), 3u);
}

TEST(Config, TypedValues) {
  const ConfigEntry n{"n", "42", 7};
  EXPECT_EQ(config_count(n), 42u);
  EXPECT_EQ(config_u64({"seed", "18446744073709551615", 1}), 18446744073709551615ull);
  EXPECT_TRUE(config_bool({"b", "on", 1}));
  EXPECT_FALSE(config_bool({"b", "0", 1}));
  for (const std::string bad : {"-1", "+3", "4x", "", "1.5"}) {
    try {
      config_count({"n", bad, 7});
      FAIL() << bad;
    } catch (const ConfigError& e) {
      EXPECT_EQ(e.line(), 7u);
    }
  }
  EXPECT_THROW(config_bool({"b", "yes", 2}), ConfigError);
  EXPECT_THROW(config_counts({"l", "1,,x", 2}), ConfigError);
}

TEST(Config, MissingFile) {
  EXPECT_THROW(load_config("/nonexistent/vcc.conf"), IoError);
}
