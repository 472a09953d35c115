#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <limits>

#include "g2m/error.hpp"
#include "g2m/features.hpp"
#include "g2m/g2mf.hpp"
#include "g2m/grid_gen.hpp"
#include "g2m/png_io.hpp"
#include "g2m/splitmix.hpp"
#include "test_support.hpp"

using namespace g2m;
using g2m::testing::TempDir;

namespace {

Tensor random_tensor(std::uint64_t seed, std::vector<std::uint32_t> dims) {
  SplitMix64 rng(seed);
  Tensor t{std::move(dims), {}};
  t.values.resize(t.element_count());
  for (float& v : t.values) v = static_cast<float>(rng.normal());
  return t;
}

std::size_t format_error_offset(const std::vector<std::uint8_t>& bytes) {
  try {
    decode_g2mf(bytes);
  } catch (const FormatError& e) {
    return e.offset;
  }
  ADD_FAILURE() << "expected FormatError";
  return 0;
}

}  // namespace

TEST(Png, TextChunksRoundTrip) {
  RgbImage img(5, 3);
  img.set_pixel(4, 2, {9, 8, 7});
  std::map<std::string, std::string> text;
  const auto bytes = encode_png(img, {{"baseline", "0.333"}, {"colormap", "blue-white-red"}});
  const RgbImage back = decode_png(bytes, &text);
  EXPECT_EQ(back, img);
  EXPECT_EQ(text.at("baseline"), "0.333");
  EXPECT_EQ(text.at("colormap"), "blue-white-red");
  EXPECT_EQ(encode_png(img), encode_png(img));
}

TEST(Png, GarbageIsAnIoError) {
  EXPECT_THROW(decode_png({1, 2, 3, 4, 5}), IoError);
}

TEST(G2mf, RoundTripIsByteExact) {
  TempDir dir;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Tensor t = random_tensor(seed, {static_cast<std::uint32_t>(1 + seed), 3, 2});
    save_g2mf(dir / "t.g2mf", t);
    const Tensor back = load_g2mf(dir / "t.g2mf");
    EXPECT_EQ(back, t);
    EXPECT_EQ(encode_g2mf(back), read_file_bytes(dir / "t.g2mf"));
  }
}

TEST(G2mf, HeaderLayout) {
  const auto bytes = encode_g2mf(Tensor{{2}, {1.0f, -2.0f}});
  ASSERT_EQ(bytes.size(), 4u + 4 + 4 + 4 + 4 + 8);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "G2MF");
  EXPECT_EQ(bytes[4], 1);   // version
  EXPECT_EQ(bytes[8], 0);   // dtype f32
  EXPECT_EQ(bytes[12], 1);  // rank
  EXPECT_EQ(bytes[16], 2);  // dims[0]
  // 1.0f little-endian: 00 00 80 3f
  EXPECT_EQ(bytes[20], 0x00);
  EXPECT_EQ(bytes[23], 0x3f);
}

TEST(G2mf, BadMagic) {
  auto bytes = encode_g2mf(Tensor{{1}, {0.0f}});
  std::copy_n("XXXX", 4, bytes.begin());
  EXPECT_EQ(format_error_offset(bytes), 0u);
}

TEST(G2mf, ErrorsCarryOffsets) {
  const auto good = encode_g2mf(Tensor{{2, 2}, {1, 2, 3, 4}});
  auto bad_version = good;
  bad_version[4] = 2;
  EXPECT_EQ(format_error_offset(bad_version), 4u);
  auto bad_dtype = good;
  bad_dtype[8] = 1;
  EXPECT_EQ(format_error_offset(bad_dtype), 8u);
  auto bad_rank = good;
  bad_rank[12] = 0;
  EXPECT_EQ(format_error_offset(bad_rank), 12u);
  auto zero_dim = good;
  zero_dim[20] = 0;
  EXPECT_EQ(format_error_offset(zero_dim), 20u);
  auto truncated = good;
  truncated.resize(truncated.size() - 3);
  EXPECT_EQ(format_error_offset(truncated), truncated.size());
  auto trailing = good;
  trailing.push_back(0);
  EXPECT_EQ(format_error_offset(trailing), good.size());
  auto short_header = std::vector<std::uint8_t>(good.begin(), good.begin() + 14);
  EXPECT_EQ(format_error_offset(short_header), 12u);
}

TEST(G2mf, DimensionOverflowIsRejected) {
  std::vector<std::uint8_t> bytes = {'G', '2', 'M', 'F', 1, 0, 0, 0, 0, 0, 0, 0, 3, 0, 0, 0};
  for (int i = 0; i < 3; ++i) bytes.insert(bytes.end(), {0xff, 0xff, 0xff, 0xff});
  const auto offset = format_error_offset(bytes);
  EXPECT_GE(offset, 20u);
  EXPECT_LE(offset, 24u);
}

TEST(G2mf, NonFiniteValueIsRejected) {
  auto bytes = encode_g2mf(Tensor{{2}, {1.0f, 2.0f}});
  const float nan = std::numeric_limits<float>::quiet_NaN();
  std::memcpy(bytes.data() + 24, &nan, 4);
  EXPECT_EQ(format_error_offset(bytes), 24u);
}

TEST(ReshapeGrid, SequenceLengths) {
  const Tensor merger = random_tensor(1, {1024, 4});
  const FeatureMap a = reshape_grid(merger, 0);
  EXPECT_EQ(a.h, 32);
  EXPECT_EQ(a.w, 32);
  EXPECT_EQ(a.d, 4);
  const FeatureMap b = reshape_grid(random_tensor(2, {1025, 3}), 1);
  EXPECT_EQ(b.h, 32);
  EXPECT_THROW(reshape_grid(random_tensor(3, {1023, 2}), 0), ShapeError);
  EXPECT_THROW(reshape_grid(random_tensor(3, {1025, 2}), 0), ShapeError);
}

TEST(ReshapeGrid, RowMajorChannelsFirst) {
  // 1 class token + 2x2 grid, d=2: token t has values (10t, 10t+1).
  Tensor seq{{5, 2}, {}};
  for (int t = 0; t < 5; ++t) {
    seq.values.push_back(10.0f * t);
    seq.values.push_back(10.0f * t + 1);
  }
  const FeatureMap fm = reshape_grid(seq, 1);
  EXPECT_EQ(fm.at(0, 0, 0), 10.0f);
  EXPECT_EQ(fm.at(1, 0, 0), 11.0f);
  EXPECT_EQ(fm.at(0, 0, 1), 20.0f);
  EXPECT_EQ(fm.at(0, 1, 0), 30.0f);
  EXPECT_EQ(fm.at(1, 1, 1), 41.0f);
}

TEST(Features, SaveLoadBothLayouts) {
  TempDir dir;
  FeatureMap fm(3, 4, 4);
  for (std::size_t i = 0; i < fm.values.size(); ++i) fm.values[i] = static_cast<float>(i) * 0.5f;
  save_features(dir / "f.g2mf", fm);
  EXPECT_EQ(load_features(dir / "f.g2mf"), fm);
  save_g2mf(dir / "s.g2mf", random_tensor(4, {17, 5}));
  const FeatureMap s = load_features(dir / "s.g2mf", 1);
  EXPECT_EQ(s.d, 5);
  EXPECT_EQ(s.h, 4);
}

TEST(Interpolate, MatchesReferenceResampler) {
  const auto golden = g2m::testing::load_golden("interp.json");
  for (const auto& c : golden["cases"]) {
    const auto input = c["input"].get<std::vector<std::vector<std::vector<double>>>>();
    FeatureMap fm(static_cast<int>(input.size()), static_cast<int>(input[0].size()),
                  static_cast<int>(input[0][0].size()));
    for (int ch = 0; ch < fm.d; ++ch)
      for (int y = 0; y < fm.h; ++y)
        for (int x = 0; x < fm.w; ++x) fm.at(ch, y, x) = static_cast<float>(input[ch][y][x]);
    const int n = c["n"];
    const FeatureMap out = interpolate(fm, n);
    const auto expected = c["output"].get<std::vector<std::vector<std::vector<double>>>>();
    for (int ch = 0; ch < fm.d; ++ch)
      for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) EXPECT_NEAR(out.at(ch, y, x), expected[ch][y][x], 1e-5);
  }
}

TEST(Interpolate, SameSizeIsBitwiseIdentity) {
  FeatureMap fm(2, 7, 7);
  SplitMix64 rng(3);
  for (float& v : fm.values) v = static_cast<float>(rng.normal());
  EXPECT_EQ(interpolate(fm, 7), fm);
}

TEST(Interpolate, ConstantsAndConvexity) {
  FeatureMap c(1, 5, 5);
  std::fill(c.values.begin(), c.values.end(), 2.5f);
  for (int n : {1, 3, 8, 13}) {
    for (float v : interpolate(c, n).values) EXPECT_FLOAT_EQ(v, 2.5f);
  }
  FeatureMap r(2, 6, 6);
  SplitMix64 rng(9);
  for (float& v : r.values) v = static_cast<float>(rng.uniform());
  const auto [lo, hi] = std::minmax_element(r.values.begin(), r.values.end());
  for (int n : {2, 5, 11, 48}) {
    for (float v : interpolate(r, n).values) {
      EXPECT_GE(v, *lo - 1e-6f);
      EXPECT_LE(v, *hi + 1e-6f);
    }
  }
}

TEST(Synthetic, AlignedGridIsOneHot) {
  const Matrix m = [] {
    Matrix x(32, 32);
    for (int i = 0; i < 32 * 32; ++i) x.cells[i] = i % 3;
    return x;
  }();
  const FeatureMap fm = synthetic_features(m, 0.0, 12, 1);
  ASSERT_EQ(fm.h, 32);
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x)
      for (int ch = 0; ch < 12; ++ch) EXPECT_EQ(fm.at(ch, y, x), ch == m.at(y, x) ? 1.0f : 0.0f);
}

TEST(Synthetic, FineGridAveragesFourCells) {
  const Matrix m = [] {
    Matrix x(64, 64);
    for (int r = 0; r < 64; ++r)
      for (int c = 0; c < 64; ++c) x.at(r, c) = (r % 2) * 2 + (c % 2);  // colours 0..3 per 2x2 block
    return x;
  }();
  const FeatureMap fm = synthetic_features(m, 0.0, 10, 1);
  for (int ch = 0; ch < 4; ++ch) EXPECT_FLOAT_EQ(fm.at(ch, 5, 7), 0.25f);
  EXPECT_FLOAT_EQ(fm.at(4, 5, 7), 0.0f);
}

TEST(Synthetic, MixturesMatchPixelCounting) {
  const Matrix m = sample_matrix(4, 48, 5);
  const FeatureMap fm = synthetic_features(m, 0.0, 10, 1);
  // Paint the virtual image pixel by pixel and average each 16x16 patch.
  std::vector<int> owner_row(512), owner_col(512);
  for (int k = 0; k < 48; ++k) {
    const auto b = cell_bounds(k, 48, 512);
    for (int p = b.begin; p < b.end; ++p) owner_row[p] = owner_col[p] = k;
  }
  for (int py = 0; py < 32; py += 5) {
    for (int px = 0; px < 32; px += 3) {
      double mass[10] = {};
      for (int y = py * 16; y < py * 16 + 16; ++y)
        for (int x = px * 16; x < px * 16 + 16; ++x) mass[m.at(owner_row[y], owner_col[x])] += 1.0 / 256.0;
      for (int ch = 0; ch < 10; ++ch) EXPECT_NEAR(fm.at(ch, py, px), mass[ch], 1e-6);
    }
  }
}

TEST(Synthetic, NoiseIsSeeded) {
  const Matrix m = sample_matrix(1, 8, 3);
  EXPECT_EQ(synthetic_features(m, 0.1, 16, 5), synthetic_features(m, 0.1, 16, 5));
  EXPECT_NE(synthetic_features(m, 0.1, 16, 5), synthetic_features(m, 0.1, 16, 6));
  EXPECT_THROW(synthetic_features(m, 0.1, 9, 5), ShapeError);
}
