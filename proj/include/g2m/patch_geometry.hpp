#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string_view>
#include <vector>

#include "g2m/grid_gen.hpp"
#include "g2m/metrics.hpp"

namespace g2m {

struct PatchConfig {
  int image_size = 512;
  int patch_len = 16;

  void validate() const;  // patch_len must divide image_size
  int patches_per_side() const { return image_size / patch_len; }
};

enum class AxisClass { Interior = 0, Edge = 1, Cross = 2 };

// Unordered pair of per-axis classes. Exactly six values.
enum class InteractionType { IntInt, IntEdg, IntCro, EdgEdg, EdgCro, CroCro };

inline constexpr std::array<InteractionType, 6> kInteractionTypes = {
    InteractionType::IntInt, InteractionType::IntEdg, InteractionType::IntCro,
    InteractionType::EdgEdg, InteractionType::EdgCro, InteractionType::CroCro};

std::string_view to_string(AxisClass c);
std::string_view to_string(InteractionType t);  // "Int-Int", "Edg-Cro", ...
std::optional<InteractionType> parse_interaction(std::string_view name);

InteractionType combine(AxisClass a, AxisClass b);

// Cross if a patch boundary lies strictly inside [begin, end); Edge if an endpoint sits on one; else Interior.
AxisClass axis_class(PixelInterval interval, int patch_len);

InteractionType cell_interaction(int row, int col, int n, const PatchConfig& config);

// Largest single-patch overlap divided by the cell's area.
double area_dominance(int row, int col, int n, const PatchConfig& config);

using TypeHistogram = std::array<std::int64_t, 6>;  // indexed by InteractionType
TypeHistogram type_distribution(int n, const PatchConfig& config);

// Mean of per-cell accuracy per type. Types with no evaluated cell are absent.
std::map<InteractionType, double> accuracy_by_type(const AccuracyGrid& grid, const PatchConfig& config);

}  // namespace g2m
