#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <nlohmann/json_fwd.hpp>
#include <optional>
#include <string>
#include <vector>

#include "g2m/grid_gen.hpp"
#include "g2m/metrics.hpp"
#include "g2m/parser.hpp"

namespace g2m {

struct QueryRequest {
  std::string id;
  std::string prompt;
  std::vector<std::uint8_t> png;
  int max_tokens = 0;
};

struct QueryResult {
  std::string text;
  int attempts = 1;
};

// Adapters must be safe to call from several threads at once.
class ModelAdapter {
 public:
  virtual ~ModelAdapter() = default;
  virtual std::string kind() const = 0;
  virtual std::string label() const = 0;
  // Throws TransportError or MissingResponse when no text can be produced.
  virtual QueryResult query(const QueryRequest& request) = 0;
};

// Serves stored responses. Accepts JSON lines with "id" and either "response" or
// "raw_response"; a run's records.jsonl therefore works as a replay source.
class ReplayAdapter : public ModelAdapter {
 public:
  explicit ReplayAdapter(std::map<std::string, std::string> responses, std::string label = "replay");
  static ReplayAdapter from_file(const std::filesystem::path& path, std::string label = "replay");

  std::string kind() const override { return "replay"; }
  std::string label() const override { return label_; }
  QueryResult query(const QueryRequest& request) override;
  bool contains(const std::string& id) const { return responses_.contains(id); }
  std::size_t size() const { return responses_.size(); }

 private:
  std::map<std::string, std::string> responses_;
  std::string label_;
};

std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t v);

enum class RecordStatus { Ok, TransportFailure };

struct RunRecord {
  std::string id;
  RecordStatus status = RecordStatus::Ok;
  std::string prompt_hash;
  std::string image_hash;
  std::string raw_response;  // verbatim, stored before parsing
  ParseOutcome outcome;
  bool exact = false;
  double cell_accuracy = 0.0;
  double latency_ms = 0.0;
  int attempts = 0;
  std::string error;  // transport failures only
  int http_status = 0;
};

nlohmann::json record_to_json(const RunRecord& record);
RunRecord record_from_json(const nlohmann::json& j);

struct RunConfig {
  int concurrency = 4;
  std::optional<int> limit;  // first `limit` manifest records
  bool resume = true;
  Palette palette = Palette::canonical();
};

inline constexpr int kDefaultHttpLimit = 300;

// Everything aggregate.json stores. Reports read only this.
struct RunAggregate {
  std::string model;
  Aggregate metrics;
  std::int64_t transport_failures = 0;
  std::map<std::string, std::int64_t> stages;    // successful parses by stage
  std::map<std::string, std::int64_t> failures;  // failed parses by kind
};

nlohmann::json aggregate_to_json(const RunAggregate& agg);
RunAggregate aggregate_from_json(const nlohmann::json& j);
RunAggregate read_aggregate(const std::filesystem::path& run_dir);

// Aggregates the last record per id over the manifest order. Records are re-parsed from
// their raw text, so a persisted run always reproduces the same numbers.
RunAggregate aggregate_records(const DatasetManifest& manifest, const std::vector<RunRecord>& records,
                               const std::string& model, int c);

// The canonical serialisation: sorted keys, two-space indent, trailing newline.
std::string dump_aggregate(const RunAggregate& agg);

// Reads records.jsonl, tolerating a truncated final line.
std::vector<RunRecord> read_records(const std::filesystem::path& path);

struct RunOutcome {
  RunAggregate aggregate;
  int queried = 0;  // samples sent to the adapter in this invocation
  int skipped = 0;  // already recorded successfully
};

// Writes run.json, appends to records.jsonl, rewrites aggregate.json.
RunOutcome run_eval(const DatasetManifest& manifest, const std::filesystem::path& manifest_dir, ModelAdapter& adapter,
                    const std::filesystem::path& run_dir, const RunConfig& config = {});

}  // namespace g2m
