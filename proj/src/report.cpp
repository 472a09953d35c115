#include "g2m/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "g2m/error.hpp"
#include "g2m/png_io.hpp"

namespace g2m {

Colormap::Colormap(std::string name, std::vector<ColorStop> stops) : name_(std::move(name)), stops_(std::move(stops)) {
  if (stops_.size() < 2 || stops_.front().value != 0.0 || stops_.back().value != 1.0) {
    throw InvalidSpec("colormap stops must run from 0 to 1");
  }
  for (std::size_t i = 1; i < stops_.size(); ++i) {
    if (!(stops_[i].value > stops_[i - 1].value)) throw InvalidSpec("colormap stops must be strictly increasing");
  }
}

const Colormap& Colormap::blue_white_red() {
  static const Colormap map("blue-white-red", {{0.0, {0, 0, 255}}, {0.5, {255, 255, 255}}, {1.0, {255, 0, 0}}});
  return map;
}

Rgb Colormap::map(double t) const {
  t = std::isnan(t) ? 0.0 : std::clamp(t, 0.0, 1.0);
  std::size_t k = 1;
  while (k + 1 < stops_.size() && t > stops_[k].value) ++k;
  const ColorStop& a = stops_[k - 1];
  const ColorStop& b = stops_[k];
  const double f = (t - a.value) / (b.value - a.value);
  auto lerp = [f](std::uint8_t x, std::uint8_t y) {
    return static_cast<std::uint8_t>(std::lround(x + f * (static_cast<double>(y) - x)));
  };
  return {lerp(a.rgb.r, b.rgb.r), lerp(a.rgb.g, b.rgb.g), lerp(a.rgb.b, b.rgb.b)};
}

RgbImage render_heatmap(const AccuracyGrid& grid, const Colormap& colormap, double baseline, int cell_px) {
  if (grid.n < 1 || grid.empty()) throw EmptyReport("heatmap has no evaluated cells");
  if (cell_px <= 0) cell_px = std::max(8, 512 / grid.n);
  RgbImage img(grid.n * cell_px, grid.n * cell_px);
  const double span = 1.0 - baseline;
  for (int r = 0; r < grid.n; ++r) {
    for (int c = 0; c < grid.n; ++c) {
      Rgb colour = kNoDataGrey;
      if (const auto acc = grid.accuracy(r, c)) {
        colour = colormap.map(span > 0 ? (*acc - baseline) / span : (*acc >= 1.0 ? 1.0 : 0.0));
      }
      for (int y = r * cell_px; y < (r + 1) * cell_px; ++y)
        for (int x = c * cell_px; x < (c + 1) * cell_px; ++x) img.set_pixel(x, y, colour);
    }
  }
  return img;
}

std::vector<std::uint8_t> heatmap_png(const AccuracyGrid& grid, const Colormap& colormap, double baseline,
                                      int cell_px) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", baseline);
  return encode_png(render_heatmap(grid, colormap, baseline, cell_px),
                    {{"baseline", buf}, {"colormap", colormap.name()}, {"n", std::to_string(grid.n)}});
}

std::string percent(std::int64_t num, std::int64_t den) {
  if (den <= 0) return "0.0";
  // tenths of a percent, half away from zero: floor((2000*num + den) / (2*den)) for num >= 0
  const bool negative = num < 0;
  const std::int64_t a = negative ? -num : num;
  const std::int64_t tenths = (2000 * a + den) / (2 * den);
  return (negative && tenths ? "-" : "") + std::to_string(tenths / 10) + "." + std::to_string(tenths % 10);
}

std::vector<SummaryRow> summary_table(const std::vector<RunAggregate>& runs) {
  std::vector<SummaryRow> rows;
  for (const auto& run : runs) {
    const Aggregate& m = run.metrics;
    if (!rows.empty() && rows.front().c != m.c) throw InvalidSpec("runs in one table must share the colour count");
    rows.push_back({run.model, m.n, m.c, m.count, percent(m.exact_matches, m.count),
                    percent(m.correct_cells, m.total_cells)});
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const SummaryRow& a, const SummaryRow& b) { return std::tie(a.model, a.n) < std::tie(b.model, b.n); });
  return rows;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

std::string fixed6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
}

}  // namespace

std::string summary_csv(const std::vector<SummaryRow>& rows) {
  std::ostringstream out;
  out << "model,n,c,count,exact_match_pct,cell_accuracy_pct,exact_cell\n";
  for (const auto& r : rows) {
    out << csv_field(r.model) << ',' << r.n << ',' << r.c << ',' << r.count << ',' << r.exact << ',' << r.cell << ','
        << r.text() << '\n';
  }
  return out.str();
}

std::string iou_csv(const Aggregate& agg, const Palette& palette) {
  std::ostringstream out;
  out << "color_index,color_name,tp,fp,fn,iou\n";
  const auto& cc = agg.confusion;
  for (int k = 0; k < cc.colors(); ++k) {
    const std::string name = k < palette.size() ? palette[k].name : "";
    const auto iou = cc.iou(k);
    out << k << ',' << csv_field(name) << ',' << cc.tp[k] << ',' << cc.fp[k] << ',' << cc.fn[k] << ','
        << (iou ? fixed6(*iou) : "") << '\n';
  }
  return out.str();
}

std::string interaction_csv(const Aggregate& agg, const PatchConfig& config) {
  const AccuracyGrid& grid = agg.heatmap;
  std::array<std::int64_t, 6> cells{};
  for (int r = 0; r < grid.n; ++r)
    for (int c = 0; c < grid.n; ++c)
      if (grid.accuracy(r, c)) ++cells[static_cast<int>(cell_interaction(r, c, grid.n, config))];
  std::ostringstream out;
  out << "type,cells,mean_accuracy\n";
  for (const auto& [type, mean] : accuracy_by_type(grid, config)) {
    out << to_string(type) << ',' << cells[static_cast<int>(type)] << ',' << fixed6(mean) << '\n';
  }
  return out.str();
}

void write_report(const std::filesystem::path& run_dir, const std::filesystem::path& out_dir,
                  const PatchConfig& config, const Palette& palette) {
  config.validate();
  const RunAggregate run = read_aggregate(run_dir);
  std::filesystem::create_directories(out_dir);
  write_text(out_dir / "summary.csv", summary_csv(summary_table({run})));
  write_text(out_dir / "iou.csv", iou_csv(run.metrics, palette));
  write_text(out_dir / "interaction.csv", interaction_csv(run.metrics, config));
  write_file_bytes(out_dir / "heatmap.png",
                   heatmap_png(run.metrics.heatmap, Colormap::blue_white_red(), random_baseline(run.metrics.c)));
}

}  // namespace g2m
