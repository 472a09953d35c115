#include "g2m/parser.hpp"

#include <cctype>
#include <charconv>
#include <limits>
#include <map>
#include <vector>

namespace g2m {

std::string_view to_string(ParseStage stage) {
  switch (stage) {
    case ParseStage::Strict: return "strict";
    case ParseStage::Rowwise: return "rowwise";
    case ParseStage::Flatten: return "flatten";
  }
  return "strict";
}

std::string_view to_string(ParseFailure failure) {
  switch (failure) {
    case ParseFailure::NoStructure: return "no-structure";
    case ParseFailure::CountMismatch: return "count-mismatch";
    case ParseFailure::ShapeMismatch: return "shape-mismatch";
    case ParseFailure::InvalidToken: return "invalid-token";
  }
  return "no-structure";
}

std::optional<ParseStage> parse_stage_name(std::string_view name) {
  for (auto s : {ParseStage::Strict, ParseStage::Rowwise, ParseStage::Flatten}) {
    if (to_string(s) == name) return s;
  }
  return std::nullopt;
}

std::optional<ParseFailure> parse_failure_name(std::string_view name) {
  for (auto f : {ParseFailure::NoStructure, ParseFailure::CountMismatch, ParseFailure::ShapeMismatch,
                 ParseFailure::InvalidToken}) {
    if (to_string(f) == name) return f;
  }
  return std::nullopt;
}

ParseOutcome ParseOutcome::success(Matrix m, ParseStage stage) {
  ParseOutcome out;
  out.matrix = std::move(m);
  out.stage = stage;
  return out;
}

ParseOutcome ParseOutcome::failed(ParseFailure failure) {
  ParseOutcome out;
  out.failure = failure;
  return out;
}

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

// Parses [+-]?digits into an int; false on overflow.
bool to_int(std::string_view token, int& out) {
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), out);
  return ec == std::errc() && ptr == token.data() + token.size();
}

bool is_language_tag(std::string_view s) {
  for (char c : s) {
    if (!is_alnum(c) && c != '_' && c != '-' && c != '+' && c != '.') return false;
  }
  return true;
}

class StrictReader {
 public:
  explicit StrictReader(std::string_view s) : s_(s) {}

  // Returns false when the text is not exactly one matrix literal.
  bool read(std::vector<std::vector<int>>& rows, bool& overflow) {
    overflow = false;
    skip_ws();
    if (!eat('[')) return false;
    do {
      skip_ws();
      std::vector<int> row;
      if (!read_row(row, overflow)) return false;
      rows.push_back(std::move(row));
      skip_ws();
    } while (eat(','));
    if (!eat(']')) return false;
    skip_ws();
    return pos_ == s_.size();
  }

 private:
  bool read_row(std::vector<int>& row, bool& overflow) {
    if (!eat('[')) return false;
    do {
      skip_ws();
      const std::size_t start = pos_;
      if (pos_ < s_.size() && (s_[pos_] == '+' || s_[pos_] == '-')) ++pos_;
      const std::size_t digits = pos_;
      while (pos_ < s_.size() && is_digit(s_[pos_])) ++pos_;
      if (pos_ == digits) return false;
      int value = 0;
      if (!to_int(s_.substr(start, pos_ - start), value)) overflow = true;
      row.push_back(value);
      skip_ws();
    } while (eat(','));
    return eat(']');
  }

  void skip_ws() {
    while (pos_ < s_.size() && is_space(s_[pos_])) ++pos_;
  }
  bool eat(char c) {
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};


// ROW<k> = [int, int, ...] with optional spaces, any letter case and one trailing comma.
bool read_row_line(std::string_view line, int& label, std::vector<int>& values, bool& overflow) {
  line = trim(line);
  if (line.size() < 3) return false;
  for (std::size_t i = 0; i < 3; ++i) {
    if (std::tolower(static_cast<unsigned char>(line[i])) != "row"[i]) return false;
  }
  std::size_t i = 3;
  auto skip = [&] {
    while (i < line.size() && is_space(line[i])) ++i;
  };
  skip();
  const std::size_t label_start = i;
  while (i < line.size() && is_digit(line[i])) ++i;
  if (i == label_start || !to_int(line.substr(label_start, i - label_start), label)) return false;
  skip();
  if (i >= line.size() || line[i++] != '=') return false;
  skip();
  if (i >= line.size() || line[i++] != '[') return false;
  values.clear();
  for (;;) {
    skip();
    const std::size_t start = i;
    if (i < line.size() && (line[i] == '+' || line[i] == '-')) ++i;
    const std::size_t digits = i;
    while (i < line.size() && is_digit(line[i])) ++i;
    if (i == digits) return false;
    int v = 0;
    if (!to_int(line.substr(start, i - start), v)) overflow = true;
    values.push_back(v);
    skip();
    if (i < line.size() && line[i] == ',') {
      ++i;
      continue;
    }
    break;
  }
  if (i >= line.size() || line[i++] != ']') return false;
  skip();
  if (i < line.size() && line[i] == ',') ++i;
  skip();
  return i == line.size();
}

}  // namespace

std::string normalize(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    const std::string_view t = trim(line);
    bool keep = true;
    if (t.starts_with("```")) {
      std::string_view rest = trim(t.substr(3));
      if (rest.ends_with("```")) rest = trim(rest.substr(0, rest.size() - 3));
      if (is_language_tag(rest)) {
        keep = false;  // bare fence line, optionally with a language tag
      } else {
        line = rest;
      }
    } else if (t.ends_with("```")) {
      line = t.substr(0, t.size() - 3);
    }
    if (keep) {
      out.append(line);
      if (nl != std::string_view::npos) out.push_back('\n');
    }
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  return std::string(trim(out));
}

ParseOutcome parse_strict(std::string_view text, int h, int w) {
  std::vector<std::vector<int>> rows;
  bool overflow = false;
  if (!StrictReader(text).read(rows, overflow)) return ParseOutcome::failed(ParseFailure::NoStructure);
  if (overflow) return ParseOutcome::failed(ParseFailure::InvalidToken);
  if (static_cast<int>(rows.size()) != h) return ParseOutcome::failed(ParseFailure::ShapeMismatch);
  for (const auto& row : rows) {
    if (static_cast<int>(row.size()) != w) return ParseOutcome::failed(ParseFailure::ShapeMismatch);
  }
  return ParseOutcome::success(Matrix::from_rows(rows), ParseStage::Strict);
}

ParseOutcome parse_rowwise(std::string_view text, int h, int w) {
  std::map<int, std::vector<int>> found;
  bool duplicate = false;
  bool overflow = false;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    int label = 0;
    std::vector<int> values;
    bool line_overflow = false;
    if (read_row_line(line, label, values, line_overflow)) {
      overflow = overflow || line_overflow;
      if (!found.emplace(label, std::move(values)).second) duplicate = true;
    }
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }

  if (found.empty() || duplicate || static_cast<int>(found.size()) != h) {
    return ParseOutcome::failed(ParseFailure::NoStructure);
  }
  Matrix out(h, w);
  for (int r = 0; r < h; ++r) {
    const auto it = found.find(r + 1);
    if (it == found.end() || static_cast<int>(it->second.size()) != w) {
      return ParseOutcome::failed(ParseFailure::NoStructure);
    }
    for (int c = 0; c < w; ++c) out.at(r, c) = it->second[c];
  }
  if (overflow) return ParseOutcome::failed(ParseFailure::InvalidToken);
  return ParseOutcome::success(std::move(out), ParseStage::Rowwise);
}

ParseOutcome parse_flatten(std::string_view text, int h, int w) {
  std::vector<int> values;
  bool overflow = false;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!is_digit(text[i])) {
      ++i;
      continue;
    }
    std::size_t start = i;
    // A sign directly attached to the digits counts unless it follows a word character ("0-1" is two tokens).
    if (start > 0 && (text[start - 1] == '-' || text[start - 1] == '+') &&
        (start == 1 || !is_alnum(text[start - 2]))) {
      --start;
    }
    while (i < text.size() && is_digit(text[i])) ++i;
    int v = 0;
    if (!to_int(text.substr(start, i - start), v)) overflow = true;
    values.push_back(v);
  }
  if (overflow) return ParseOutcome::failed(ParseFailure::InvalidToken);
  if (static_cast<long long>(values.size()) != static_cast<long long>(h) * w) {
    return ParseOutcome::failed(ParseFailure::CountMismatch);
  }
  Matrix out(h, w);
  out.cells = std::move(values);
  return ParseOutcome::success(std::move(out), ParseStage::Flatten);
}

ParseOutcome parse_cascade(std::string_view text, int h, int w) {
  if (h < 1 || w < 1) return ParseOutcome::failed(ParseFailure::ShapeMismatch);
  const std::string clean = normalize(text);
  if (auto out = parse_strict(clean, h, w); out.ok()) return out;
  if (auto out = parse_rowwise(clean, h, w); out.ok()) return out;
  return parse_flatten(clean, h, w);
}

}  // namespace g2m
