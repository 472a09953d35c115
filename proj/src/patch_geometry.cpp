#include "g2m/patch_geometry.hpp"

#include <algorithm>
#include <string>

#include "g2m/error.hpp"

namespace g2m {

void PatchConfig::validate() const {
  if (image_size <= 0 || patch_len <= 0) throw InvalidSpec("patch config needs positive sizes");
  if (image_size % patch_len != 0) {
    throw InvalidSpec("patch length " + std::to_string(patch_len) + " does not divide " + std::to_string(image_size));
  }
}

std::string_view to_string(AxisClass c) {
  switch (c) {
    case AxisClass::Interior: return "Int";
    case AxisClass::Edge: return "Edg";
    case AxisClass::Cross: return "Cro";
  }
  return "Int";
}

std::string_view to_string(InteractionType t) {
  switch (t) {
    case InteractionType::IntInt: return "Int-Int";
    case InteractionType::IntEdg: return "Int-Edg";
    case InteractionType::IntCro: return "Int-Cro";
    case InteractionType::EdgEdg: return "Edg-Edg";
    case InteractionType::EdgCro: return "Edg-Cro";
    case InteractionType::CroCro: return "Cro-Cro";
  }
  return "Int-Int";
}

std::optional<InteractionType> parse_interaction(std::string_view name) {
  for (auto t : kInteractionTypes) {
    if (to_string(t) == name) return t;
  }
  return std::nullopt;
}

InteractionType combine(AxisClass a, AxisClass b) {
  const auto lo = std::min(static_cast<int>(a), static_cast<int>(b));
  const auto hi = std::max(static_cast<int>(a), static_cast<int>(b));
  // (lo, hi) over {0,1,2}, enumerated in enum order.
  static constexpr InteractionType table[3][3] = {
      {InteractionType::IntInt, InteractionType::IntEdg, InteractionType::IntCro},
      {InteractionType::IntEdg, InteractionType::EdgEdg, InteractionType::EdgCro},
      {InteractionType::IntCro, InteractionType::EdgCro, InteractionType::CroCro},
  };
  return table[lo][hi];
}

AxisClass axis_class(PixelInterval interval, int patch_len) {
  const int a = interval.begin;
  const int b = interval.end;
  // Smallest boundary strictly greater than a.
  const int next_boundary = (a / patch_len + 1) * patch_len;
  if (next_boundary < b) return AxisClass::Cross;
  if (a % patch_len == 0 || b % patch_len == 0) return AxisClass::Edge;
  return AxisClass::Interior;
}

InteractionType cell_interaction(int row, int col, int n, const PatchConfig& config) {
  const auto y = axis_class(cell_bounds(row, n, config.image_size), config.patch_len);
  const auto x = axis_class(cell_bounds(col, n, config.image_size), config.patch_len);
  return combine(y, x);
}

namespace {

int max_overlap(PixelInterval iv, int patch_len) {
  int best = 0;
  for (int p = iv.begin / patch_len; p * patch_len < iv.end; ++p) {
    const int lo = std::max(iv.begin, p * patch_len);
    const int hi = std::min(iv.end, (p + 1) * patch_len);
    best = std::max(best, hi - lo);
  }
  return best;
}

}  // namespace

double area_dominance(int row, int col, int n, const PatchConfig& config) {
  const auto ys = cell_bounds(row, n, config.image_size);
  const auto xs = cell_bounds(col, n, config.image_size);
  // Patches form a product lattice, so the best rectangle overlap factorises per axis.
  const double best = static_cast<double>(max_overlap(ys, config.patch_len)) * max_overlap(xs, config.patch_len);
  return best / (static_cast<double>(ys.length()) * xs.length());
}

TypeHistogram type_distribution(int n, const PatchConfig& config) {
  config.validate();
  if (n < 1) throw InvalidSpec("type_distribution needs n >= 1");
  std::vector<AxisClass> axis(n);
  for (int i = 0; i < n; ++i) axis[i] = axis_class(cell_bounds(i, n, config.image_size), config.patch_len);
  TypeHistogram hist{};
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) ++hist[static_cast<int>(combine(axis[r], axis[c]))];
  }
  return hist;
}

std::map<InteractionType, double> accuracy_by_type(const AccuracyGrid& grid, const PatchConfig& config) {
  config.validate();
  std::array<double, 6> sum{};
  std::array<std::int64_t, 6> cells{};
  for (int r = 0; r < grid.n; ++r) {
    for (int c = 0; c < grid.n; ++c) {
      const auto acc = grid.accuracy(r, c);
      if (!acc) continue;
      const int t = static_cast<int>(cell_interaction(r, c, grid.n, config));
      sum[t] += *acc;
      ++cells[t];
    }
  }
  std::map<InteractionType, double> out;
  for (auto t : kInteractionTypes) {
    const int i = static_cast<int>(t);
    if (cells[i] > 0) out[t] = sum[i] / static_cast<double>(cells[i]);
  }
  return out;
}

}  // namespace g2m
