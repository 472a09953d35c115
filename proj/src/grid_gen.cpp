#include "g2m/grid_gen.hpp"

#include <algorithm>
#include <cstdlib>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "g2m/error.hpp"
#include "g2m/png_io.hpp"
#include "g2m/splitmix.hpp"

namespace g2m {

using json = nlohmann::json;
namespace fs = std::filesystem;

Matrix Matrix::from_rows(const std::vector<std::vector<int>>& nested) {
  Matrix m;
  m.rows = static_cast<int>(nested.size());
  m.cols = nested.empty() ? 0 : static_cast<int>(nested.front().size());
  m.cells.reserve(static_cast<std::size_t>(m.rows) * m.cols);
  for (const auto& row : nested) {
    if (static_cast<int>(row.size()) != m.cols) throw ShapeError("ragged nested matrix");
    m.cells.insert(m.cells.end(), row.begin(), row.end());
  }
  return m;
}

std::vector<std::vector<int>> Matrix::to_rows() const {
  std::vector<std::vector<int>> out(rows);
  for (int r = 0; r < rows; ++r) out[r].assign(cells.begin() + r * cols, cells.begin() + (r + 1) * cols);
  return out;
}

// ---------------- palette ----------------

Palette::Palette(std::vector<PaletteEntry> entries) : entries_(std::move(entries)) {
  if (entries_.empty()) throw InvalidSpec("palette must not be empty");
  std::set<std::string> names;
  for (int i = 0; i < size(); ++i) {
    const auto& e = entries_[i];
    if (e.index != i) throw InvalidSpec("palette indices must be 0..K-1 in order");
    if (e.name.empty() || !names.insert(e.name).second) throw InvalidSpec("palette names must be unique: " + e.name);
    for (int j = 0; j < i; ++j) {
      const Rgb a = e.rgb;
      const Rgb b = entries_[j].rgb;
      const int linf = std::max({std::abs(a.r - b.r), std::abs(a.g - b.g), std::abs(a.b - b.b)});
      if (linf < 64) throw InvalidSpec("palette colours too close: " + e.name + " / " + entries_[j].name);
    }
  }
}

const Palette& Palette::canonical() {
  static const Palette palette({
      {"White", {255, 255, 255}, 0},
      {"Red", {255, 0, 0}, 1},
      {"Blue", {0, 0, 255}, 2},
      {"Green", {0, 128, 0}, 3},
      {"Yellow", {255, 255, 0}, 4},
      {"Orange", {255, 165, 0}, 5},
      {"Purple", {128, 0, 128}, 6},
      {"Cyan", {0, 255, 255}, 7},
      {"Magenta", {255, 0, 255}, 8},
      {"Black", {0, 0, 0}, 9},
  });
  return palette;
}

std::optional<int> Palette::index_of(Rgb rgb) const {
  for (const auto& e : entries_) {
    if (e.rgb == rgb) return e.index;
  }
  return std::nullopt;
}

void GridSpec::validate() const {
  if (n < 2 || n > 64) throw InvalidSpec("grid side must be in 2..64, got " + std::to_string(n));
  if (c < 1 || c > kMaxColors) throw InvalidSpec("colour count must be in 1..10, got " + std::to_string(c));
  if (c > palette.size()) throw InvalidSpec("colour count exceeds palette size");
  if (image_size <= 0) throw InvalidSpec("image size must be positive");
  if (n > image_size) throw InvalidSpec("grid side exceeds image size");
}

// ---------------- sampling / rendering ----------------

Matrix sample_matrix(std::uint64_t seed, int n, int c) {
  if (n <= 0) throw InvalidSpec("grid side must be >= 1");
  if (c <= 0 || c > kMaxColors) throw InvalidSpec("colour count must be in 1..10");
  SplitMix64 rng(seed);
  Matrix m(n, n);
  for (auto& cell : m.cells) cell = static_cast<int>(rng.below(static_cast<std::uint32_t>(c)));
  return m;
}

PixelInterval cell_bounds(int index, int n, int image_size) {
  if (n <= 0 || image_size <= 0) throw InvalidSpec("cell_bounds needs n >= 1 and a positive image size");
  if (index < 0 || index >= n) {
    throw OutOfRange("cell index " + std::to_string(index) + " out of range for n=" + std::to_string(n));
  }
  const auto lo = static_cast<std::int64_t>(index) * image_size / n;
  const auto hi = static_cast<std::int64_t>(index + 1) * image_size / n;
  return {static_cast<int>(lo), static_cast<int>(hi)};
}

RgbImage render(const Matrix& matrix, const Palette& palette, int image_size) {
  if (matrix.rows != matrix.cols || matrix.rows <= 0) throw ShapeError("render expects a non-empty square matrix");
  if (matrix.rows > image_size) throw InvalidSpec("grid side exceeds image size");
  const int n = matrix.rows;
  RgbImage image(image_size, image_size);
  for (int r = 0; r < n; ++r) {
    const PixelInterval ys = cell_bounds(r, n, image_size);
    for (int c = 0; c < n; ++c) {
      const int idx = matrix.at(r, c);
      if (idx < 0 || idx >= palette.size()) {
        throw InvalidIndex("cell (" + std::to_string(r) + "," + std::to_string(c) + ") has index " +
                           std::to_string(idx) + " outside the palette");
      }
      const Rgb rgb = palette[idx].rgb;
      const PixelInterval xs = cell_bounds(c, n, image_size);
      for (int y = ys.begin; y < ys.end; ++y) {
        for (int x = xs.begin; x < xs.end; ++x) image.set_pixel(x, y, rgb);
      }
    }
  }
  return image;
}

Matrix decode_image(const RgbImage& image, const Palette& palette, int n) {
  if (image.width != image.height) throw ShapeError("decode_image expects a square image");
  if (n < 1 || n > image.width) throw InvalidSpec("grid side must be in 1..image size");
  Matrix m(n, n);
  for (int r = 0; r < n; ++r) {
    const PixelInterval ys = cell_bounds(r, n, image.height);
    const int y = (ys.begin + ys.end) / 2;
    for (int c = 0; c < n; ++c) {
      const PixelInterval xs = cell_bounds(c, n, image.width);
      const Rgb px = image.pixel((xs.begin + xs.end) / 2, y);
      const auto idx = palette.index_of(px);
      if (!idx) {
        throw DecodeError("pixel at the centre of cell (" + std::to_string(r) + "," + std::to_string(c) +
                              ") matches no palette colour",
                          r, c);
      }
      m.at(r, c) = *idx;
    }
  }
  return m;
}

GridInstance make_instance(const GridSpec& spec, std::uint64_t seed) {
  spec.validate();
  GridInstance inst{spec, seed, sample_matrix(seed, spec.n, spec.c), {}};
  inst.image = render(inst.matrix, spec.palette, spec.image_size);
  return inst;
}

// ---------------- datasets ----------------

std::string_view split_name(Split split) {
  switch (split) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "test";
}

std::optional<Split> parse_split(std::string_view name) {
  if (name == "train") return Split::Train;
  if (name == "val" || name == "validation") return Split::Val;
  if (name == "test") return Split::Test;
  return std::nullopt;
}

std::uint64_t derive_seed(std::uint64_t base_seed, Split split, std::uint64_t ordinal) {
  const std::uint64_t stream = SplitMix64::mix(base_seed ^ (0xD1B54A32D192ED03ULL * (static_cast<int>(split) + 1)));
  return SplitMix64::mix(stream + 0x9E3779B97F4A7C15ULL * (ordinal + 1));
}

std::string sample_id(const GridSpec& spec, Split split, int ordinal) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "n%02d-c%02d-%s-%06d", spec.n, spec.c, std::string(split_name(split)).c_str(),
                ordinal);
  return buf;
}

std::string manifest_record_json(const ManifestRecord& record, Split split) {
  json j = json::object();
  j["id"] = record.id;
  j["seed"] = record.seed;
  j["n"] = record.n;
  j["c"] = record.c;
  j["matrix"] = record.matrix.to_rows();
  j["image"] = record.image;
  j["image_size"] = record.image_size;
  j["split"] = std::string(split_name(split));
  j["generator"] = std::string(kGeneratorVersion);
  return j.dump();
}

void write_manifest(const DatasetManifest& manifest, const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write manifest " + path.string());
  for (const auto& rec : manifest.records) out << manifest_record_json(rec, manifest.split) << '\n';
  if (!out) throw IoError("failed writing manifest " + path.string());
}

DatasetManifest read_manifest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read manifest " + path.string());
  DatasetManifest manifest;
  std::set<std::string> ids;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
    ManifestRecord rec;
    rec.id = j.at("id").get<std::string>();
    rec.seed = j.value("seed", std::uint64_t{0});
    rec.n = j.at("n").get<int>();
    rec.c = j.at("c").get<int>();
    rec.image_size = j.value("image_size", kDefaultImageSize);
    rec.matrix = Matrix::from_rows(j.at("matrix").get<std::vector<std::vector<int>>>());
    rec.image = j.value("image", std::string{});
    if (rec.matrix.rows != rec.n || rec.matrix.cols != rec.n) {
      throw ShapeError(path.string() + ":" + std::to_string(lineno) + ": matrix shape does not match n");
    }
    if (!ids.insert(rec.id).second) throw IoError("duplicate sample id " + rec.id);
    if (j.contains("split")) {
      if (auto s = parse_split(j["split"].get<std::string>())) manifest.split = *s;
    }
    if (j.contains("generator")) manifest.generator_version = j["generator"].get<std::string>();
    manifest.records.push_back(std::move(rec));
  }
  return manifest;
}

DatasetManifest build_split(const GridSpec& spec, Split split, int count, std::uint64_t base_seed,
                            const fs::path& out_dir, bool force) {
  spec.validate();
  if (count < 0) throw InvalidSpec("sample count must be non-negative");
  const std::string name{split_name(split)};
  const fs::path manifest_path = out_dir / (name + ".jsonl");
  const fs::path image_dir = out_dir / name;

  std::error_code ec;
  fs::create_directories(image_dir, ec);
  if (ec) throw IoError("cannot create " + image_dir.string() + ": " + ec.message());
  if (!force && fs::exists(manifest_path)) {
    throw IoError(manifest_path.string() + " already exists (pass force to overwrite)");
  }

  DatasetManifest manifest;
  manifest.split = split;
  manifest.records.reserve(count);
  for (int i = 0; i < count; ++i) {
    ManifestRecord rec;
    rec.id = sample_id(spec, split, i);
    rec.seed = derive_seed(base_seed, split, static_cast<std::uint64_t>(i));
    rec.n = spec.n;
    rec.c = spec.c;
    rec.image_size = spec.image_size;
    rec.matrix = sample_matrix(rec.seed, spec.n, spec.c);
    rec.image = name + "/" + rec.id + ".png";
    const fs::path png_path = out_dir / rec.image;
    if (!force && fs::exists(png_path)) throw IoError(png_path.string() + " already exists (pass force to overwrite)");
    write_png(png_path, render(rec.matrix, spec.palette, spec.image_size));
    manifest.records.push_back(std::move(rec));
  }
  write_manifest(manifest, manifest_path);
  return manifest;
}

std::array<DatasetManifest, 3> build_dataset(const GridSpec& spec, const SplitCounts& counts, std::uint64_t base_seed,
                                             const fs::path& out_dir, bool force) {
  return {build_split(spec, Split::Train, counts.train, base_seed, out_dir, force),
          build_split(spec, Split::Val, counts.val, base_seed, out_dir, force),
          build_split(spec, Split::Test, counts.test, base_seed, out_dir, force)};
}

std::vector<std::string> verify_manifest(const DatasetManifest& manifest, const fs::path& manifest_dir,
                                         const Palette& palette) {
  std::vector<std::string> bad;
  for (const auto& rec : manifest.records) {
    try {
      if (decode_image(read_png(manifest_dir / rec.image), palette, rec.n) != rec.matrix) bad.push_back(rec.id);
    } catch (const Error&) {
      bad.push_back(rec.id);
    }
  }
  return bad;
}

}  // namespace g2m
