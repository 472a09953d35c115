#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "g2m/g2mf.hpp"
#include "g2m/matrix.hpp"

namespace g2m {

// Channels-first d×h×w feature map.
struct FeatureMap {
  int d = 0;
  int h = 0;
  int w = 0;
  std::vector<float> values;

  FeatureMap() = default;
  FeatureMap(int d_, int h_, int w_)
      : d(d_), h(h_), w(w_), values(static_cast<std::size_t>(d_) * h_ * w_, 0.0f) {}

  float& at(int ch, int y, int x) { return values[(static_cast<std::size_t>(ch) * h + y) * w + x]; }
  float at(int ch, int y, int x) const { return values[(static_cast<std::size_t>(ch) * h + y) * w + x]; }
  friend bool operator==(const FeatureMap&, const FeatureMap&) = default;
};

// L×D token sequence to a square map, after dropping `drop_leading` tokens (e.g. a class token).
FeatureMap reshape_grid(const Tensor& sequence, int drop_leading = 0);

// Rank-3 tensors are taken as d×h×w; rank-2 tensors go through reshape_grid.
FeatureMap to_feature_map(const Tensor& tensor, int drop_leading = 0);
Tensor to_tensor(const FeatureMap& fm);

FeatureMap load_features(const std::filesystem::path& path, int drop_leading = 0);
void save_features(const std::filesystem::path& path, const FeatureMap& fm);

// Bilinear resize to n×n with half-pixel centres and edge clamping.
FeatureMap interpolate(const FeatureMap& fm, int n);

// Stand-in encoder: each patch of the virtual image holds the mean one-hot colour
// of the pixels it covers (channels 0..9) plus N(0, sigma²) noise on every channel.
inline constexpr int kSyntheticImageSize = 512;
inline constexpr int kSyntheticPatch = 16;
FeatureMap synthetic_features(const Matrix& matrix, double sigma, int d, std::uint64_t seed);

}  // namespace g2m
