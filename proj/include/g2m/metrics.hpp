#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "g2m/matrix.hpp"
#include "g2m/parser.hpp"

namespace g2m {

// A prediction is a matrix, or nothing when parsing failed.
using Prediction = std::optional<Matrix>;

inline Prediction to_prediction(const ParseOutcome& outcome) { return outcome.matrix; }

struct ScoredPair {
  Prediction pred;
  Matrix truth;
};

bool exact_match(const Prediction& pred, const Matrix& truth);

// Fraction of equal cells; 0 for failures and shape mismatches.
double cell_accuracy(const Prediction& pred, const Matrix& truth);

double random_baseline(int c);

// Per-colour TP/FP/FN pooled over every parsed grid whose shape matches its truth.
struct ConfusionCounts {
  std::vector<std::int64_t> tp, fp, fn;

  explicit ConfusionCounts(int colors = 0) : tp(colors, 0), fp(colors, 0), fn(colors, 0) {}
  int colors() const { return static_cast<int>(tp.size()); }
  void add(const Matrix& pred, const Matrix& truth);
  void merge(const ConfusionCounts& other);

  // tp / (tp + fp + fn); nullopt when the denominator is zero.
  std::optional<double> iou(int color) const;
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

ConfusionCounts confusion_counts(const std::vector<ScoredPair>& results, int c);

// Pooled IoU for one colour. Throws InvalidColor when color >= c.
std::optional<double> color_iou(const std::vector<ScoredPair>& results, int color, int c);

// Per-position hit/total counters over a test set.
struct AccuracyGrid {
  int n = 0;
  std::vector<std::int64_t> hits;
  std::vector<std::int64_t> totals;

  AccuracyGrid() = default;
  explicit AccuracyGrid(int n_)
      : n(n_), hits(static_cast<std::size_t>(n_) * n_, 0), totals(static_cast<std::size_t>(n_) * n_, 0) {}

  // Adds one evaluated grid. Failures and shape mismatches count as all-wrong.
  void add(const Prediction& pred, const Matrix& truth);
  void merge(const AccuracyGrid& other);

  std::optional<double> accuracy(int r, int c) const;
  bool empty() const;
  friend bool operator==(const AccuracyGrid&, const AccuracyGrid&) = default;
};

AccuracyGrid accumulate_heatmap(const std::vector<ScoredPair>& results);

// Everything the aggregate report carries, with exact integer counters underneath.
struct Aggregate {
  int n = 0;
  int c = 0;
  std::int64_t count = 0;           // evaluated grids (transport failures excluded)
  std::int64_t exact_matches = 0;
  std::int64_t correct_cells = 0;
  std::int64_t total_cells = 0;
  std::int64_t parse_failures = 0;  // failures plus shape mismatches
  ConfusionCounts confusion;
  AccuracyGrid heatmap;

  double exact_match() const { return count ? static_cast<double>(exact_matches) / count : 0.0; }
  double cell_accuracy() const { return total_cells ? static_cast<double>(correct_cells) / total_cells : 0.0; }
};

// Throws InvalidBatch when truths disagree on n.
Aggregate aggregate(const std::vector<ScoredPair>& results, int c);

}  // namespace g2m
