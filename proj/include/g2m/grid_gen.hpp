#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "g2m/matrix.hpp"

namespace g2m {

inline constexpr std::string_view kGeneratorVersion = "g2m-gen/1";
inline constexpr int kDefaultImageSize = 512;
inline constexpr int kMaxColors = 10;

struct PaletteEntry {
  std::string name;
  Rgb rgb;
  int index = 0;
};

// Ordered colour dictionary. Entry order defines the integer mapping.
class Palette {
 public:
  Palette() = default;
  explicit Palette(std::vector<PaletteEntry> entries);  // validates

  // White, Red, Blue, Green, Yellow, Orange, Purple, Cyan, Magenta, Black.
  static const Palette& canonical();

  int size() const { return static_cast<int>(entries_.size()); }
  const PaletteEntry& operator[](int index) const { return entries_.at(index); }
  const std::vector<PaletteEntry>& entries() const { return entries_; }
  std::optional<int> index_of(Rgb rgb) const;

 private:
  std::vector<PaletteEntry> entries_;
};

struct GridSpec {
  int n = 3;
  int c = 3;
  int image_size = kDefaultImageSize;
  Palette palette = Palette::canonical();

  void validate() const;  // throws InvalidSpec
};

struct GridInstance {
  GridSpec spec;
  std::uint64_t seed = 0;
  Matrix matrix;
  RgbImage image;
};

// n x n matrix of iid uniform draws over [0, c), row-major from SplitMix64(seed).
Matrix sample_matrix(std::uint64_t seed, int n, int c);

struct PixelInterval {
  int begin = 0;  // inclusive
  int end = 0;    // exclusive
  int length() const { return end - begin; }
  friend bool operator==(const PixelInterval&, const PixelInterval&) = default;
};

// [floor(i*size/n), floor((i+1)*size/n)). Tiles [0, size) exactly.
PixelInterval cell_bounds(int index, int n, int image_size);

RgbImage render(const Matrix& matrix, const Palette& palette, int image_size);
Matrix decode_image(const RgbImage& image, const Palette& palette, int n);

GridInstance make_instance(const GridSpec& spec, std::uint64_t seed);

enum class Split { Train, Val, Test };
std::string_view split_name(Split split);
std::optional<Split> parse_split(std::string_view name);

struct ManifestRecord {
  std::string id;
  std::uint64_t seed = 0;
  int n = 0;
  int c = 0;
  int image_size = kDefaultImageSize;
  Matrix matrix;
  std::string image;  // relative to the manifest's directory
};

struct DatasetManifest {
  Split split = Split::Test;
  std::string generator_version{kGeneratorVersion};
  std::vector<ManifestRecord> records;
};

struct SplitCounts {
  int train = 8000;
  int val = 2000;
  int test = 10000;
};

// Seeds are a pure function of (base_seed, split, ordinal); each split draws from its own sub-stream.
std::uint64_t derive_seed(std::uint64_t base_seed, Split split, std::uint64_t ordinal);
std::string sample_id(const GridSpec& spec, Split split, int ordinal);

// Writes <out>/<split>.jsonl and <out>/<split>/<id>.png. Refuses to overwrite unless `force`.
DatasetManifest build_split(const GridSpec& spec, Split split, int count, std::uint64_t base_seed,
                            const std::filesystem::path& out_dir, bool force = false);
std::array<DatasetManifest, 3> build_dataset(const GridSpec& spec, const SplitCounts& counts,
                                             std::uint64_t base_seed, const std::filesystem::path& out_dir,
                                             bool force = false);

std::string manifest_record_json(const ManifestRecord& record, Split split);
DatasetManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

// Decodes every referenced image and compares it with the stored matrix. Returns mismatching ids.
std::vector<std::string> verify_manifest(const DatasetManifest& manifest, const std::filesystem::path& manifest_dir,
                                         const Palette& palette = Palette::canonical());

}  // namespace g2m
