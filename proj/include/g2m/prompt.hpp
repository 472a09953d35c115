#pragma once

#include <string>
#include <utility>
#include <vector>

#include "g2m/grid_gen.hpp"

namespace g2m {

inline constexpr int kMaxTokenCap = 2048;

// Colour-name -> integer dictionary shown to the model. Always kept sorted by value.
class ColorMapping {
 public:
  using Pair = std::pair<std::string, int>;

  ColorMapping() = default;
  // Accepts pairs in any order; the values must be exactly 0..c-1 and names unique.
  explicit ColorMapping(std::vector<Pair> pairs);

  // The first c palette entries.
  static ColorMapping from_palette(const Palette& palette, int c);

  const std::vector<Pair>& pairs() const { return pairs_; }
  int size() const { return static_cast<int>(pairs_.size()); }
  bool empty() const { return pairs_.empty(); }

  // "{White: 0, Red: 1, Blue: 2}"
  std::string serialize() const;
  static ColorMapping parse(const std::string& text);

  friend bool operator==(const ColorMapping&, const ColorMapping&) = default;

 private:
  std::vector<Pair> pairs_;
};

// The canonical zero-shot instruction with dimensions and mapping substituted.
std::string build_prompt(int h, int w, const ColorMapping& mapping);

// Recovers the mapping embedded in a prompt produced by build_prompt.
ColorMapping mapping_from_prompt(const std::string& prompt);

// min(h*w*4 + h*20 + 50, 2048)
int max_tokens(int h, int w);

// Serialises a matrix the way the prompt asks for it: "[[0, 1], [2, 0]]".
std::string format_matrix(const Matrix& m);

}  // namespace g2m
