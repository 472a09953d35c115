#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "g2m/matrix.hpp"

namespace g2m {

using PngText = std::map<std::string, std::string>;

// 8-bit RGB, non-interlaced, fixed compression settings and no timestamp chunk,
// so identical rasters always encode to identical bytes.
std::vector<std::uint8_t> encode_png(const RgbImage& image, const PngText& text = {});
RgbImage decode_png(const std::vector<std::uint8_t>& bytes, PngText* text = nullptr);

void write_png(const std::filesystem::path& path, const RgbImage& image, const PngText& text = {});
RgbImage read_png(const std::filesystem::path& path, PngText* text = nullptr);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);

}  // namespace g2m
