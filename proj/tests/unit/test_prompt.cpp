#include <gtest/gtest.h>

#include "g2m/error.hpp"
#include "g2m/prompt.hpp"

using namespace g2m;

TEST(Prompt, ExactTemplateText) {
  const std::string expected =
      "You are a precise grid serialization engine.\n"
      "Task: Transcribe the 3 x 3 pixel grid from the image into a numerical matrix.\n"
      "Color Mapping: {White: 0, Red: 1, Blue: 2}\n"
      "\n"
      "Instructions:\n"
      "1. Scan the grid row by row, from top to bottom.\n"
      "2. For each row, map every cell using the color mapping.\n"
      "3. Ensure the output has exactly 3 rows and 3 columns.\n"
      "\n"
      "Output Format:\n"
      "Return ONLY a Python list of lists (e.g., [[0, 1], [2, 0]]). Do not use markdown, code blocks, or "
      "explanations.";
  EXPECT_EQ(build_prompt(3, 3, ColorMapping::from_palette(Palette::canonical(), 3)), expected);
}

TEST(Prompt, MappingRoundTripsThroughPrompt) {
  for (int c = 1; c <= 10; ++c) {
    const auto mapping = ColorMapping::from_palette(Palette::canonical(), c);
    EXPECT_EQ(mapping_from_prompt(build_prompt(5, 5, mapping)), mapping);
    EXPECT_EQ(ColorMapping::parse(mapping.serialize()), mapping);
  }
}

TEST(Prompt, NonSquareDimensions) {
  const auto p = build_prompt(2, 7, ColorMapping::from_palette(Palette::canonical(), 2));
  EXPECT_NE(p.find("2 x 7 pixel grid"), std::string::npos);
  EXPECT_NE(p.find("exactly 2 rows and 7 columns"), std::string::npos);
}

TEST(ColorMappingTest, SortsByValueAndValidates) {
  const ColorMapping m({{"Red", 1}, {"White", 0}});
  EXPECT_EQ(m.serialize(), "{White: 0, Red: 1}");
  EXPECT_THROW(ColorMapping({{"Red", 0}, {"White", 0}}), InvalidMapping);
  EXPECT_THROW(ColorMapping({{"Red", 0}, {"Red", 1}}), InvalidMapping);
  EXPECT_THROW(ColorMapping({{"Red", 0}, {"White", 2}}), InvalidMapping);
  EXPECT_THROW(build_prompt(3, 3, ColorMapping()), InvalidMapping);
}

TEST(TokenBudget, SpotValues) {
  EXPECT_EQ(max_tokens(12, 12), 866);
  EXPECT_EQ(max_tokens(1, 1), 74);
  EXPECT_EQ(max_tokens(3, 3), 146);
  EXPECT_EQ(max_tokens(32, 32), 2048);
  EXPECT_EQ(max_tokens(64, 64), 2048);
}

TEST(TokenBudget, MonotoneAndCapped) {
  int prev = 0;
  for (int n = 1; n <= 64; ++n) {
    const int b = max_tokens(n, n);
    EXPECT_GE(b, prev);
    EXPECT_LE(b, kMaxTokenCap);
    prev = b;
  }
  EXPECT_THROW(max_tokens(0, 3), InvalidSpec);
}

TEST(FormatMatrix, PromptStyle) {
  EXPECT_EQ(format_matrix(Matrix::from_rows({{0, 1}, {2, 0}})), "[[0, 1], [2, 0]]");
}
