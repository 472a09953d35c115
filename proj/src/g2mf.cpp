#include "g2m/g2mf.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <limits>
#include <string>

#include "g2m/error.hpp"
#include "g2m/png_io.hpp"

namespace g2m {

namespace {

constexpr char kMagic[4] = {'G', '2', 'M', 'F'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  std::uint32_t u32(const char* what) {
    if (offset_ + 4 > bytes_.size()) throw FormatError(std::string("truncated header reading ") + what, offset_);
    const auto v = get_u32(bytes_.data() + offset_);
    offset_ += 4;
    return v;
  }
  std::size_t offset() const { return offset_; }
  void skip(std::size_t n) { offset_ += n; }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t offset_ = 0;
};

}  // namespace

std::size_t Tensor::element_count() const {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

std::vector<std::uint8_t> encode_g2mf(const Tensor& tensor) {
  if (tensor.dims.empty() || tensor.dims.size() > kG2mfMaxRank) throw ShapeError("G2MF rank must be 1..8");
  if (tensor.element_count() != tensor.values.size()) throw ShapeError("tensor dims do not match value count");
  std::vector<std::uint8_t> out;
  out.reserve(16 + 4 * tensor.dims.size() + 4 * tensor.values.size());
  out.insert(out.end(), kMagic, kMagic + 4);
  put_u32(out, kG2mfVersion);
  put_u32(out, kG2mfFloat32);
  put_u32(out, static_cast<std::uint32_t>(tensor.dims.size()));
  for (auto d : tensor.dims) put_u32(out, d);
  for (float v : tensor.values) put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

Tensor decode_g2mf(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) throw FormatError("bad G2MF magic", 0);
  Reader in(bytes);
  in.skip(4);
  if (const auto version = in.u32("version"); version != kG2mfVersion) {
    throw FormatError("unsupported G2MF version " + std::to_string(version), 4);
  }
  if (const auto dtype = in.u32("dtype"); dtype != kG2mfFloat32) {
    throw FormatError("unsupported G2MF dtype " + std::to_string(dtype), 8);
  }
  const auto rank = in.u32("rank");
  if (rank == 0 || rank > kG2mfMaxRank) throw FormatError("G2MF rank must be 1..8, got " + std::to_string(rank), 12);

  Tensor t;
  std::uint64_t count = 1;
  for (std::uint32_t i = 0; i < rank; ++i) {
    const std::size_t at = in.offset();
    const auto d = in.u32("dims");
    if (d == 0) throw FormatError("zero-sized dimension", at);
    if (count > std::numeric_limits<std::uint64_t>::max() / d || count * d > (std::uint64_t{1} << 40)) {
      throw FormatError("dimension product overflows", at);
    }
    count *= d;
    t.dims.push_back(d);
  }
  const std::size_t payload = in.offset();
  const std::uint64_t expected = payload + 4 * count;
  if (bytes.size() < expected) {
    throw FormatError("truncated payload: expected " + std::to_string(4 * count) + " bytes", bytes.size());
  }
  if (bytes.size() > expected) throw FormatError("trailing bytes after payload", expected);

  t.values.resize(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    const float v = std::bit_cast<float>(get_u32(bytes.data() + payload + 4 * i));
    if (!std::isfinite(v)) throw FormatError("non-finite value", payload + 4 * i);
    t.values[i] = v;
  }
  return t;
}

void save_g2mf(const std::filesystem::path& path, const Tensor& tensor) {
  write_file_bytes(path, encode_g2mf(tensor));
}

Tensor load_g2mf(const std::filesystem::path& path) { return decode_g2mf(read_file_bytes(path)); }

}  // namespace g2m
