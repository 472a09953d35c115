#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace g2m {

// G2MF: little-endian "G2MF" | u32 version=1 | u32 dtype (0 = f32) | u32 rank | u32 dims[rank] | payload.
inline constexpr std::uint32_t kG2mfVersion = 1;
inline constexpr std::uint32_t kG2mfFloat32 = 0;
inline constexpr std::uint32_t kG2mfMaxRank = 8;

struct Tensor {
  std::vector<std::uint32_t> dims;
  std::vector<float> values;

  std::size_t element_count() const;
  friend bool operator==(const Tensor&, const Tensor&) = default;
};

std::vector<std::uint8_t> encode_g2mf(const Tensor& tensor);
// Throws FormatError with the failing byte offset.
Tensor decode_g2mf(const std::vector<std::uint8_t>& bytes);

void save_g2mf(const std::filesystem::path& path, const Tensor& tensor);
Tensor load_g2mf(const std::filesystem::path& path);

}  // namespace g2m
