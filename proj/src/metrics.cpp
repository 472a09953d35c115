#include "g2m/metrics.hpp"

#include <string>

#include "g2m/error.hpp"

namespace g2m {

namespace {

bool usable(const Prediction& pred, const Matrix& truth) { return pred && pred->same_shape(truth); }

std::int64_t equal_cells(const Matrix& pred, const Matrix& truth) {
  std::int64_t k = 0;
  for (std::size_t i = 0; i < truth.cells.size(); ++i) k += pred.cells[i] == truth.cells[i];
  return k;
}

}  // namespace

bool exact_match(const Prediction& pred, const Matrix& truth) { return usable(pred, truth) && *pred == truth; }

double cell_accuracy(const Prediction& pred, const Matrix& truth) {
  if (!usable(pred, truth) || truth.cells.empty()) return 0.0;
  return static_cast<double>(equal_cells(*pred, truth)) / static_cast<double>(truth.cells.size());
}

double random_baseline(int c) {
  if (c < 1) throw InvalidSpec("random_baseline needs c >= 1");
  return 1.0 / c;
}

void ConfusionCounts::add(const Matrix& pred, const Matrix& truth) {
  const int k = colors();
  for (std::size_t i = 0; i < truth.cells.size(); ++i) {
    const int t = truth.cells[i];
    const int p = pred.cells[i];
    if (p == t) {
      if (t >= 0 && t < k) ++tp[t];
      continue;
    }
    if (t >= 0 && t < k) ++fn[t];
    if (p >= 0 && p < k) ++fp[p];
  }
}

void ConfusionCounts::merge(const ConfusionCounts& other) {
  if (other.colors() != colors()) throw InvalidBatch("confusion counts over different colour counts");
  for (int k = 0; k < colors(); ++k) {
    tp[k] += other.tp[k];
    fp[k] += other.fp[k];
    fn[k] += other.fn[k];
  }
}

std::optional<double> ConfusionCounts::iou(int color) const {
  if (color < 0 || color >= colors()) throw InvalidColor("colour " + std::to_string(color) + " out of range");
  const std::int64_t denom = tp[color] + fp[color] + fn[color];
  if (denom == 0) return std::nullopt;
  return static_cast<double>(tp[color]) / static_cast<double>(denom);
}

ConfusionCounts confusion_counts(const std::vector<ScoredPair>& results, int c) {
  ConfusionCounts counts(c);
  for (const auto& r : results) {
    if (usable(r.pred, r.truth)) counts.add(*r.pred, r.truth);
  }
  return counts;
}

std::optional<double> color_iou(const std::vector<ScoredPair>& results, int color, int c) {
  if (color < 0 || color >= c) throw InvalidColor("colour " + std::to_string(color) + " >= c=" + std::to_string(c));
  return confusion_counts(results, c).iou(color);
}

void AccuracyGrid::add(const Prediction& pred, const Matrix& truth) {
  if (truth.rows != n || truth.cols != n) throw InvalidBatch("heatmap batch mixes grid sizes");
  const bool ok = usable(pred, truth);
  for (std::size_t i = 0; i < totals.size(); ++i) {
    ++totals[i];
    if (ok && pred->cells[i] == truth.cells[i]) ++hits[i];
  }
}

void AccuracyGrid::merge(const AccuracyGrid& other) {
  if (other.n != n) throw InvalidBatch("heatmap merge across grid sizes");
  for (std::size_t i = 0; i < totals.size(); ++i) {
    hits[i] += other.hits[i];
    totals[i] += other.totals[i];
  }
}

std::optional<double> AccuracyGrid::accuracy(int r, int c) const {
  const std::size_t i = static_cast<std::size_t>(r) * n + c;
  if (totals.at(i) == 0) return std::nullopt;
  return static_cast<double>(hits[i]) / static_cast<double>(totals[i]);
}

bool AccuracyGrid::empty() const {
  for (auto t : totals) {
    if (t > 0) return false;
  }
  return true;
}

AccuracyGrid accumulate_heatmap(const std::vector<ScoredPair>& results) {
  if (results.empty()) return {};
  AccuracyGrid grid(results.front().truth.rows);
  for (const auto& r : results) grid.add(r.pred, r.truth);
  return grid;
}

Aggregate aggregate(const std::vector<ScoredPair>& results, int c) {
  Aggregate agg;
  agg.c = c;
  agg.confusion = ConfusionCounts(c);
  if (!results.empty()) {
    agg.n = results.front().truth.rows;
    agg.heatmap = AccuracyGrid(agg.n);
  }
  for (const auto& r : results) {
    if (r.truth.rows != agg.n || r.truth.cols != agg.n) throw InvalidBatch("aggregate batch mixes grid sizes");
    ++agg.count;
    agg.total_cells += static_cast<std::int64_t>(r.truth.cells.size());
    agg.heatmap.add(r.pred, r.truth);
    if (!usable(r.pred, r.truth)) {
      ++agg.parse_failures;
      continue;
    }
    const std::int64_t k = equal_cells(*r.pred, r.truth);
    agg.correct_cells += k;
    agg.exact_matches += k == static_cast<std::int64_t>(r.truth.cells.size());
    agg.confusion.add(*r.pred, r.truth);
  }
  return agg;
}

}  // namespace g2m
