#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "g2m/grid_gen.hpp"
#include "g2m/harness.hpp"
#include "g2m/matrix.hpp"
#include "g2m/metrics.hpp"
#include "g2m/patch_geometry.hpp"

namespace g2m {

struct ColorStop {
  double value;
  Rgb rgb;
};

// Piecewise-linear map from [0, 1] to RGB.
class Colormap {
 public:
  Colormap(std::string name, std::vector<ColorStop> stops);  // values strictly increasing from 0 to 1

  // blue (0,0,255) -> white -> red (255,0,0)
  static const Colormap& blue_white_red();

  Rgb map(double t) const;  // t clamped to [0, 1]
  const std::string& name() const { return name_; }
  const std::vector<ColorStop>& stops() const { return stops_; }

 private:
  std::string name_;
  std::vector<ColorStop> stops_;
};

inline constexpr Rgb kNoDataGrey{128, 128, 128};

// Accuracy is scaled linearly from [baseline, 1] onto the colormap, clipped below the baseline.
// Cells never evaluated are grey. Throws EmptyReport when nothing was evaluated.
RgbImage render_heatmap(const AccuracyGrid& grid, const Colormap& colormap, double baseline, int cell_px = 0);

// Encoded PNG with the baseline and colormap recorded as text chunks.
std::vector<std::uint8_t> heatmap_png(const AccuracyGrid& grid, const Colormap& colormap, double baseline,
                                      int cell_px = 0);

// num/den as a percentage with one decimal, rounded half away from zero. "0.0" when den is 0.
std::string percent(std::int64_t num, std::int64_t den);

struct SummaryRow {
  std::string model;
  int n = 0;
  int c = 0;
  std::int64_t count = 0;
  std::string exact;
  std::string cell;
  std::string text() const { return exact + " / " + cell; }
};

// One row per run, ordered by (model, n). Throws InvalidSpec when colour counts differ.
std::vector<SummaryRow> summary_table(const std::vector<RunAggregate>& runs);

std::string summary_csv(const std::vector<SummaryRow>& rows);
// color_index,color_name,tp,fp,fn,iou  (iou empty when undefined)
std::string iou_csv(const Aggregate& agg, const Palette& palette = Palette::canonical());
// type,cells,mean_accuracy  (types with no evaluated cell are omitted)
std::string interaction_csv(const Aggregate& agg, const PatchConfig& config);

// Reads <run_dir>/aggregate.json and writes heatmap.png, summary.csv, iou.csv, interaction.csv.
void write_report(const std::filesystem::path& run_dir, const std::filesystem::path& out_dir,
                  const PatchConfig& config = {}, const Palette& palette = Palette::canonical());

}  // namespace g2m
