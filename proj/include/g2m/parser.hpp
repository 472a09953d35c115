#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "g2m/matrix.hpp"

namespace g2m {

enum class ParseStage { Strict, Rowwise, Flatten };
enum class ParseFailure { NoStructure, CountMismatch, ShapeMismatch, InvalidToken };

std::string_view to_string(ParseStage stage);
std::string_view to_string(ParseFailure failure);
std::optional<ParseStage> parse_stage_name(std::string_view name);
std::optional<ParseFailure> parse_failure_name(std::string_view name);

// Either an h x w matrix tagged with the stage that produced it, or a classified failure.
struct ParseOutcome {
  std::optional<Matrix> matrix;
  ParseStage stage = ParseStage::Strict;
  ParseFailure failure = ParseFailure::NoStructure;

  static ParseOutcome success(Matrix m, ParseStage stage);
  static ParseOutcome failed(ParseFailure failure);

  bool ok() const { return matrix.has_value(); }
};

// Strips code fences (with an optional language tag) and surrounding whitespace.
std::string normalize(std::string_view text);

// Whole text must be one list-of-int-lists literal of shape h x w.
ParseOutcome parse_strict(std::string_view text, int h, int w);

// Lines of the form ROW<k>=[ints], any case, keyed by k.
ParseOutcome parse_rowwise(std::string_view text, int h, int w);

// Every integer token in order, reshaped row-major when there are exactly h*w.
ParseOutcome parse_flatten(std::string_view text, int h, int w);

// normalize, then strict -> rowwise -> flatten. Never throws on any input text.
ParseOutcome parse_cascade(std::string_view text, int h, int w);

}  // namespace g2m
