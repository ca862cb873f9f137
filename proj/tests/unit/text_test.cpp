#include <gtest/gtest.h>

#include <random>

#include "finnews/text.hpp"

using namespace finnews;

TEST(CleanText, CollapsesWhitespaceRuns) { EXPECT_EQ(clean_text("a\n\n b"), "a b"); }

TEST(CleanText, TrimsAndDropsControls) {
  EXPECT_EQ(clean_text("  \t x\x01y \r\n"), "xy");
  EXPECT_EQ(clean_text("a\xC2\xA0" "b"), "a b");  // no-break space
  EXPECT_EQ(clean_text("a\xE2\x80\x83\xE3\x80\x80" "b"), "a b");
  EXPECT_EQ(clean_text(""), "");
  EXPECT_EQ(clean_text(" \n\t "), "");
}

TEST(CleanText, KeepsMultibyteText) {
  EXPECT_EQ(clean_text("Tesla\xE2\x80\x99s  output"), "Tesla\xE2\x80\x99s output");
  EXPECT_EQ(clean_text("caf\xC3\xA9 \xE2\x82\xAC"), "caf\xC3\xA9 \xE2\x82\xAC");
}

TEST(CleanText, DropsInvalidUtf8) {
  EXPECT_EQ(clean_text("a\xFF" "b"), "ab");
  EXPECT_EQ(clean_text("a\xC3"), "a");
}

TEST(CleanText, AlreadyCleanIsUnchanged) {
  const std::string s = "The U.S. dollar hit its highest level since late December.";
  EXPECT_EQ(clean_text(s), s);
}

TEST(CleanText, IdempotentOnRandomBytes) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> byte(0, 255);
  std::uniform_int_distribution<int> len(0, 64);
  for (int i = 0; i < 5000; ++i) {
    std::string s;
    const int n = len(rng);
    for (int k = 0; k < n; ++k) s.push_back(static_cast<char>(byte(rng)));
    const auto once = clean_text(s);
    ASSERT_EQ(clean_text(once), once);
    ASSERT_EQ(trim(once), once);
    ASSERT_EQ(once.find("  "), std::string::npos);
  }
}

TEST(Dates, ParseAndFormat) {
  const auto d = parse_date("2017-08-02");
  ASSERT_TRUE(d);
  EXPECT_EQ(format_date(*d), "2017-08-02");
  EXPECT_EQ(parse_date("2017-08-02T13:45:00Z"), d);
  EXPECT_EQ(parse_date("2017-08-02 13:45"), d);
  EXPECT_FALSE(parse_date("2017-02-30"));
  EXPECT_FALSE(parse_date("02/08/2017"));
  EXPECT_FALSE(parse_date(""));
}

TEST(Hashing, Sha256KnownVector) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(Numbers, FormatRoundtrips) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double v = u(rng);
    EXPECT_EQ(parse_double(format_double(v)), v);
  }
  EXPECT_EQ(format_double(5.0), "5");
  EXPECT_EQ(parse_double("+1.5"), 1.5);
  EXPECT_FALSE(parse_double("1.5x"));
  EXPECT_FALSE(parse_double(""));
}

TEST(Utf8, CodePointLength) {
  EXPECT_EQ(utf8_length("abc"), 3u);
  EXPECT_EQ(utf8_length("\xE2\x80\x99"), 1u);
  EXPECT_EQ(utf8_length("\xF0\x9F\x93\x88x"), 2u);
}
