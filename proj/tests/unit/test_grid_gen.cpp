#include <gtest/gtest.h>

#include <set>

#include "g2m/error.hpp"
#include "g2m/grid_gen.hpp"
#include "g2m/png_io.hpp"
#include "g2m/splitmix.hpp"
#include "test_support.hpp"

using namespace g2m;
using g2m::testing::TempDir;

TEST(SplitMix, MatchesReferenceStream) {
  const auto golden = g2m::testing::load_golden("splitmix.json");
  SplitMix64 rng(0);
  for (const auto& v : golden["raw_seed0_first4"]) EXPECT_EQ(rng.next(), v.get<std::uint64_t>());
}

TEST(SampleMatrix, MatchesGoldenCases) {
  const auto golden = g2m::testing::load_golden("splitmix.json");
  for (const auto& c : golden["cases"]) {
    const Matrix m = sample_matrix(c["seed"].get<std::uint64_t>(), c["n"], c["c"]);
    EXPECT_EQ(m.to_rows(), c["matrix"].get<std::vector<std::vector<int>>>()) << "seed " << c["seed"];
  }
}

TEST(SampleMatrix, ValuesInRangeAndDeterministic) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Matrix a = sample_matrix(seed, 7, 4);
    EXPECT_EQ(a, sample_matrix(seed, 7, 4));
    for (int v : a.cells) {
      EXPECT_GE(v, 0);
      EXPECT_LT(v, 4);
    }
  }
}

TEST(SampleMatrix, SingleColourIsConstant) {
  const Matrix m = sample_matrix(99, 5, 1);
  for (int v : m.cells) EXPECT_EQ(v, 0);
}

TEST(SampleMatrix, RejectsBadArguments) {
  EXPECT_THROW(sample_matrix(0, 0, 3), InvalidSpec);
  EXPECT_THROW(sample_matrix(0, 3, 0), InvalidSpec);
  EXPECT_THROW(sample_matrix(0, 3, 11), InvalidSpec);
}

TEST(CellBounds, TilesTheImageExactly) {
  for (int size : {448, 512, 100}) {
    for (int n = 1; n <= 64; ++n) {
      int expected_begin = 0;
      for (int i = 0; i < n; ++i) {
        const auto b = cell_bounds(i, n, size);
        EXPECT_EQ(b.begin, expected_begin);
        EXPECT_GT(b.end, b.begin);
        expected_begin = b.end;
      }
      EXPECT_EQ(expected_begin, size);
    }
  }
}

TEST(CellBounds, FloorSplit) {
  // 512 / 3: 0..170, 170..341, 341..512
  EXPECT_EQ(cell_bounds(0, 3, 512).end, 170);
  EXPECT_EQ(cell_bounds(1, 3, 512).end, 341);
  EXPECT_EQ(cell_bounds(2, 3, 512).end, 512);
  EXPECT_THROW(cell_bounds(3, 3, 512), OutOfRange);
  EXPECT_THROW(cell_bounds(-1, 3, 512), OutOfRange);
}

TEST(Render, FillsEachCellWithItsColour) {
  const Matrix m = Matrix::from_rows({{0, 1, 2}, {3, 4, 5}, {6, 7, 8}});
  const RgbImage img = render(m, Palette::canonical(), 90);
  ASSERT_EQ(img.width, 90);
  for (int y = 0; y < 90; ++y)
    for (int x = 0; x < 90; ++x) EXPECT_EQ(img.pixel(x, y), Palette::canonical()[m.at(y / 30, x / 30)].rgb);
}

TEST(Render, RejectsOutOfPaletteIndex) {
  const Matrix m = Matrix::from_rows({{0, 10}, {1, 2}});
  EXPECT_THROW(render(m, Palette::canonical(), 64), InvalidIndex);
}

TEST(RoundTrip, DecodeInvertsRender) {
  for (int n : {2, 3, 5, 9, 17, 33, 64}) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const Matrix m = sample_matrix(seed, n, 10);
      EXPECT_EQ(decode_image(render(m, Palette::canonical(), 512), Palette::canonical(), n), m) << n;
    }
  }
}

TEST(RoundTrip, SurvivesPngEncoding) {
  const Matrix m = sample_matrix(5, 12, 6);
  const RgbImage img = render(m, Palette::canonical(), 512);
  const RgbImage back = decode_png(encode_png(img));
  EXPECT_EQ(back, img);
  EXPECT_EQ(decode_image(back, Palette::canonical(), 12), m);
}

TEST(Decode, UnknownColourReportsCell) {
  RgbImage img = render(sample_matrix(1, 4, 3), Palette::canonical(), 64);
  // Centre of cell (2, 1) is pixel (24, 40).
  img.set_pixel(24, 40, {1, 2, 3});
  try {
    decode_image(img, Palette::canonical(), 4);
    FAIL() << "expected DecodeError";
  } catch (const DecodeError& e) {
    EXPECT_EQ(e.row, 2);
    EXPECT_EQ(e.col, 1);
  }
}

TEST(Palette, CanonicalOrderAndSpacing) {
  const auto& p = Palette::canonical();
  ASSERT_EQ(p.size(), 10);
  EXPECT_EQ(p[0].name, "White");
  EXPECT_EQ(p[1].name, "Red");
  EXPECT_EQ(p[2].name, "Blue");
  EXPECT_EQ(p[9].name, "Black");
}

TEST(Palette, RejectsInvalidEntries) {
  EXPECT_THROW(Palette(std::vector<PaletteEntry>{}), InvalidSpec);
  EXPECT_THROW(Palette({{"A", {0, 0, 0}, 0}, {"A", {255, 0, 0}, 1}}), InvalidSpec);
  EXPECT_THROW(Palette({{"A", {0, 0, 0}, 0}, {"B", {10, 10, 10}, 1}}), InvalidSpec);
  EXPECT_THROW(Palette({{"A", {0, 0, 0}, 1}}), InvalidSpec);
}

TEST(GridSpec, Validation) {
  GridSpec spec;
  EXPECT_NO_THROW(spec.validate());
  spec.n = 1;
  EXPECT_THROW(spec.validate(), InvalidSpec);
  spec.n = 65;
  EXPECT_THROW(spec.validate(), InvalidSpec);
  spec.n = 64;
  spec.c = 11;
  EXPECT_THROW(spec.validate(), InvalidSpec);
}

TEST(Splits, SeedsAreDisjointAcrossSplits) {
  std::set<std::uint64_t> seen;
  for (auto split : {Split::Train, Split::Val, Split::Test})
    for (int i = 0; i < 200; ++i) EXPECT_TRUE(seen.insert(derive_seed(7, split, i)).second);
  EXPECT_EQ(parse_split("val"), Split::Val);
  EXPECT_FALSE(parse_split("dev").has_value());
}

TEST(Dataset, BuildWriteReadVerify) {
  TempDir dir;
  GridSpec spec;
  spec.n = 6;
  spec.c = 4;
  const auto built = build_split(spec, Split::Test, 12, 3, dir.path());
  ASSERT_EQ(built.records.size(), 12u);
  EXPECT_EQ(built.records[0].id, sample_id(spec, Split::Test, 0));
  const auto read = read_manifest(dir / "test.jsonl");
  ASSERT_EQ(read.records.size(), 12u);
  for (std::size_t i = 0; i < read.records.size(); ++i) {
    EXPECT_EQ(read.records[i].matrix, built.records[i].matrix);
    EXPECT_EQ(read.records[i].seed, built.records[i].seed);
  }
  EXPECT_TRUE(verify_manifest(read, dir.path()).empty());
  EXPECT_THROW(build_split(spec, Split::Test, 12, 3, dir.path()), IoError);
  EXPECT_NO_THROW(build_split(spec, Split::Test, 12, 3, dir.path(), true));
}

TEST(Dataset, SameSeedSameBytes) {
  TempDir a, b;
  GridSpec spec;
  spec.n = 4;
  build_split(spec, Split::Val, 3, 11, a.path());
  build_split(spec, Split::Val, 3, 11, b.path());
  EXPECT_EQ(read_file_bytes(a / "val.jsonl"), read_file_bytes(b / "val.jsonl"));
  const auto m = read_manifest(a / "val.jsonl");
  for (const auto& r : m.records) EXPECT_EQ(read_file_bytes(a.path() / r.image), read_file_bytes(b.path() / r.image));
}

TEST(Dataset, VerifyDetectsTampering) {
  TempDir dir;
  GridSpec spec;
  spec.n = 3;
  auto m = build_split(spec, Split::Train, 4, 1, dir.path());
  m.records[2].matrix.at(0, 0) = (m.records[2].matrix.at(0, 0) + 1) % 3;
  const auto bad = verify_manifest(m, dir.path());
  ASSERT_EQ(bad.size(), 1u);
  EXPECT_EQ(bad[0], m.records[2].id);
}
