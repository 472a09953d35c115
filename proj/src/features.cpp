#include "g2m/features.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "g2m/error.hpp"
#include "g2m/grid_gen.hpp"
#include "g2m/splitmix.hpp"

namespace g2m {

FeatureMap reshape_grid(const Tensor& sequence, int drop_leading) {
  if (sequence.dims.size() != 2) throw ShapeError("token sequence must be rank 2 (L x D)");
  const auto length = static_cast<std::int64_t>(sequence.dims[0]);
  const int d = static_cast<int>(sequence.dims[1]);
  if (drop_leading < 0 || drop_leading >= length) throw ShapeError("drop_leading out of range");
  const std::int64_t remainder = length - drop_leading;
  const auto side = static_cast<std::int64_t>(std::llround(std::sqrt(static_cast<double>(remainder))));
  if (side * side != remainder) {
    throw ShapeError("sequence length " + std::to_string(remainder) + " after dropping " +
                     std::to_string(drop_leading) + " tokens is not a perfect square");
  }
  FeatureMap fm(d, static_cast<int>(side), static_cast<int>(side));
  for (std::int64_t t = 0; t < remainder; ++t) {
    const float* token = sequence.values.data() + (t + drop_leading) * d;
    const int y = static_cast<int>(t / side);
    const int x = static_cast<int>(t % side);
    for (int ch = 0; ch < d; ++ch) fm.at(ch, y, x) = token[ch];
  }
  return fm;
}

FeatureMap to_feature_map(const Tensor& tensor, int drop_leading) {
  if (tensor.dims.size() == 2) return reshape_grid(tensor, drop_leading);
  if (tensor.dims.size() != 3) throw ShapeError("feature tensor must be rank 2 or 3");
  if (drop_leading != 0) throw ShapeError("drop_leading applies only to token sequences");
  FeatureMap fm;
  fm.d = static_cast<int>(tensor.dims[0]);
  fm.h = static_cast<int>(tensor.dims[1]);
  fm.w = static_cast<int>(tensor.dims[2]);
  fm.values = tensor.values;
  return fm;
}

Tensor to_tensor(const FeatureMap& fm) {
  return Tensor{{static_cast<std::uint32_t>(fm.d), static_cast<std::uint32_t>(fm.h), static_cast<std::uint32_t>(fm.w)},
                fm.values};
}

FeatureMap load_features(const std::filesystem::path& path, int drop_leading) {
  return to_feature_map(load_g2mf(path), drop_leading);
}

void save_features(const std::filesystem::path& path, const FeatureMap& fm) { save_g2mf(path, to_tensor(fm)); }

namespace {

struct Tap {
  int lo;
  int hi;
  double frac;
};

std::vector<Tap> taps(int in, int out) {
  std::vector<Tap> result(out);
  const double scale = static_cast<double>(in) / out;
  for (int i = 0; i < out; ++i) {
    const double src = std::max(0.0, (i + 0.5) * scale - 0.5);
    const int lo = std::min(static_cast<int>(src), in - 1);
    const int hi = std::min(lo + 1, in - 1);
    result[i] = {lo, hi, src - lo};
  }
  return result;
}

}  // namespace

FeatureMap interpolate(const FeatureMap& fm, int n) {
  if (n < 1) throw ShapeError("interpolation size must be >= 1");
  if (fm.h == n && fm.w == n) return fm;
  const auto ys = taps(fm.h, n);
  const auto xs = taps(fm.w, n);
  FeatureMap out(fm.d, n, n);
  for (int ch = 0; ch < fm.d; ++ch) {
    for (int i = 0; i < n; ++i) {
      const Tap& ty = ys[i];
      for (int j = 0; j < n; ++j) {
        const Tap& tx = xs[j];
        const double top = (1.0 - tx.frac) * fm.at(ch, ty.lo, tx.lo) + tx.frac * fm.at(ch, ty.lo, tx.hi);
        const double bottom = (1.0 - tx.frac) * fm.at(ch, ty.hi, tx.lo) + tx.frac * fm.at(ch, ty.hi, tx.hi);
        out.at(ch, i, j) = static_cast<float>((1.0 - ty.frac) * top + ty.frac * bottom);
      }
    }
  }
  return out;
}

FeatureMap synthetic_features(const Matrix& matrix, double sigma, int d, std::uint64_t seed) {
  const int n = matrix.rows;
  if (n != matrix.cols || n < 1 || n > 64) throw ShapeError("synthetic features need a square matrix with n <= 64");
  if (d < kMaxColors) throw ShapeError("synthetic features need d >= 10");
  for (int v : matrix.cells) {
    if (v < 0 || v >= kMaxColors) throw InvalidColor("matrix value outside 0..9");
  }
  const int side = kSyntheticImageSize / kSyntheticPatch;

  // overlap[p][k]: pixels of patch row/col p that fall in cell row/col k.
  std::vector<std::vector<int>> overlap(side, std::vector<int>(n, 0));
  for (int k = 0; k < n; ++k) {
    const auto cell = cell_bounds(k, n, kSyntheticImageSize);
    for (int p = 0; p < side; ++p) {
      const int lo = std::max(cell.begin, p * kSyntheticPatch);
      const int hi = std::min(cell.end, (p + 1) * kSyntheticPatch);
      if (hi > lo) overlap[p][k] = hi - lo;
    }
  }

  FeatureMap fm(d, side, side);
  const double area = static_cast<double>(kSyntheticPatch) * kSyntheticPatch;
  for (int py = 0; py < side; ++py) {
    for (int px = 0; px < side; ++px) {
      double mass[kMaxColors] = {};
      for (int r = 0; r < n; ++r) {
        if (!overlap[py][r]) continue;
        for (int c = 0; c < n; ++c) {
          if (overlap[px][c]) mass[matrix.at(r, c)] += overlap[py][r] * overlap[px][c];
        }
      }
      for (int ch = 0; ch < kMaxColors; ++ch) fm.at(ch, py, px) = static_cast<float>(mass[ch] / area);
    }
  }
  if (sigma > 0.0) {
    SplitMix64 rng(seed);
    for (float& v : fm.values) v = static_cast<float>(v + sigma * rng.normal());
  }
  return fm;
}

}  // namespace g2m
