#include "g2m/prompt.hpp"

#include <algorithm>
#include <regex>
#include <stdexcept>
#include <set>

#include "g2m/error.hpp"
#include "g2m/prompt_template.hpp"

namespace g2m {

ColorMapping::ColorMapping(std::vector<Pair> pairs) : pairs_(std::move(pairs)) {
  std::sort(pairs_.begin(), pairs_.end(), [](const Pair& a, const Pair& b) { return a.second < b.second; });
  std::set<std::string> names;
  for (int i = 0; i < size(); ++i) {
    if (pairs_[i].second != i) throw InvalidMapping("mapping values must be exactly 0..c-1");
    if (pairs_[i].first.empty() || !names.insert(pairs_[i].first).second) {
      throw InvalidMapping("mapping names must be unique and non-empty");
    }
  }
}

ColorMapping ColorMapping::from_palette(const Palette& palette, int c) {
  if (c < 1 || c > palette.size()) throw InvalidMapping("colour count out of palette range");
  std::vector<Pair> pairs;
  for (int i = 0; i < c; ++i) pairs.emplace_back(palette[i].name, palette[i].index);
  return ColorMapping(std::move(pairs));
}

std::string ColorMapping::serialize() const {
  std::string out = "{";
  for (std::size_t i = 0; i < pairs_.size(); ++i) {
    if (i) out += ", ";
    out += pairs_[i].first + ": " + std::to_string(pairs_[i].second);
  }
  return out + "}";
}

ColorMapping ColorMapping::parse(const std::string& text) {
  static const std::regex pair_re(R"(([A-Za-z][A-Za-z0-9 _-]*?)\s*:\s*(\d+))");
  std::vector<Pair> pairs;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), pair_re); it != std::sregex_iterator(); ++it) {
    int value = 0;
    try {
      value = std::stoi((*it)[2].str());
    } catch (const std::out_of_range&) {
      throw InvalidMapping("mapping value out of range");
    }
    pairs.emplace_back((*it)[1].str(), value);
  }
  return ColorMapping(std::move(pairs));
}

namespace {

void replace_all(std::string& s, std::string_view from, const std::string& to) {
  for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
}

}  // namespace

std::string build_prompt(int h, int w, const ColorMapping& mapping) {
  if (mapping.empty()) throw InvalidMapping("prompt needs a non-empty colour mapping");
  if (h < 1 || w < 1) throw InvalidSpec("prompt dimensions must be >= 1");
  std::string out{assets::kPromptTemplate};
  replace_all(out, "{{H}}", std::to_string(h));
  replace_all(out, "{{W}}", std::to_string(w));
  replace_all(out, "{{MAPPING}}", mapping.serialize());
  return out;
}

ColorMapping mapping_from_prompt(const std::string& prompt) {
  static constexpr std::string_view key = "Color Mapping: ";
  const auto start = prompt.find(key);
  if (start == std::string::npos) throw InvalidMapping("prompt has no colour mapping line");
  const auto open = start + key.size();
  const auto close = prompt.find('}', open);
  if (close == std::string::npos || prompt[open] != '{') throw InvalidMapping("malformed colour mapping line");
  return ColorMapping::parse(prompt.substr(open, close - open + 1));
}

int max_tokens(int h, int w) {
  if (h < 1 || w < 1) throw InvalidSpec("max_tokens needs h, w >= 1");
  const long long budget = static_cast<long long>(h) * w * 4 + static_cast<long long>(h) * 20 + 50;
  return static_cast<int>(std::min<long long>(budget, kMaxTokenCap));
}

std::string format_matrix(const Matrix& m) {
  std::string out = "[";
  for (int r = 0; r < m.rows; ++r) {
    if (r) out += ", ";
    out += "[";
    for (int c = 0; c < m.cols; ++c) {
      if (c) out += ", ";
      out += std::to_string(m.at(r, c));
    }
    out += "]";
  }
  return out + "]";
}

}  // namespace g2m
