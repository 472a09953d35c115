#include "g2m/harness.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <nlohmann/json.hpp>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "g2m/error.hpp"
#include "g2m/png_io.hpp"
#include "g2m/prompt.hpp"
#include "g2m/prompt_template.hpp"

namespace g2m {

using nlohmann::json;

namespace {

// Raw responses are kept verbatim; invalid UTF-8 is the only thing JSON cannot hold.
std::string dump_line(const json& j) { return j.dump(-1, ' ', false, json::error_handler_t::replace); }

std::string_view status_name(RecordStatus s) { return s == RecordStatus::Ok ? "ok" : "transport-failure"; }

}  // namespace

ReplayAdapter::ReplayAdapter(std::map<std::string, std::string> responses, std::string label)
    : responses_(std::move(responses)), label_(std::move(label)) {}

ReplayAdapter ReplayAdapter::from_file(const std::filesystem::path& path, std::string label) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open replay file " + path.string());
  std::map<std::string, std::string> responses;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("id") || !j["id"].is_string()) {
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": missing string id");
    }
    const json* text = nullptr;
    if (j.contains("response") && j["response"].is_string()) {
      text = &j["response"];
    } else if (j.contains("raw_response") && j["raw_response"].is_string()) {
      text = &j["raw_response"];
    }
    if (j.value("status", std::string("ok")) != "ok" || !text) continue;
    responses[j["id"].get<std::string>()] = text->get<std::string>();  // later lines win
  }
  return ReplayAdapter(std::move(responses), std::move(label));
}

QueryResult ReplayAdapter::query(const QueryRequest& request) {
  const auto it = responses_.find(request.id);
  if (it == responses_.end()) throw MissingResponse("no stored response for " + request.id);
  return {it->second, 1};
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

json record_to_json(const RunRecord& r) {
  json j;
  j["id"] = r.id;
  j["status"] = status_name(r.status);
  j["prompt_hash"] = r.prompt_hash;
  j["image_hash"] = r.image_hash;
  j["attempts"] = r.attempts;
  j["latency_ms"] = r.latency_ms;
  if (r.status == RecordStatus::TransportFailure) {
    j["raw_response"] = nullptr;
    j["error"] = r.error;
    j["http_status"] = r.http_status;
    return j;
  }
  j["raw_response"] = r.raw_response;
  if (r.outcome.ok()) {
    j["parse"] = {{"ok", true}, {"stage", to_string(r.outcome.stage)}};
    j["prediction"] = r.outcome.matrix->to_rows();
  } else {
    j["parse"] = {{"ok", false}, {"failure", to_string(r.outcome.failure)}};
    j["prediction"] = nullptr;
  }
  j["exact_match"] = r.exact;
  j["cell_accuracy"] = r.cell_accuracy;
  return j;
}

RunRecord record_from_json(const json& j) {
  RunRecord r;
  r.id = j.at("id").get<std::string>();
  r.status = j.value("status", std::string("ok")) == "ok" ? RecordStatus::Ok : RecordStatus::TransportFailure;
  r.prompt_hash = j.value("prompt_hash", std::string());
  r.image_hash = j.value("image_hash", std::string());
  r.attempts = j.value("attempts", 0);
  r.latency_ms = j.value("latency_ms", 0.0);
  if (r.status == RecordStatus::TransportFailure) {
    r.error = j.value("error", std::string());
    r.http_status = j.value("http_status", 0);
    return r;
  }
  r.raw_response = j.at("raw_response").get<std::string>();
  const auto& parse = j.at("parse");
  if (parse.value("ok", false)) {
    r.outcome = ParseOutcome::success(Matrix::from_rows(j.at("prediction").get<std::vector<std::vector<int>>>()),
                                      parse_stage_name(parse.at("stage").get<std::string>()).value());
  } else {
    r.outcome = ParseOutcome::failed(parse_failure_name(parse.at("failure").get<std::string>()).value());
  }
  r.exact = j.value("exact_match", false);
  r.cell_accuracy = j.value("cell_accuracy", 0.0);
  return r;
}

json aggregate_to_json(const RunAggregate& agg) {
  const Aggregate& m = agg.metrics;
  json j;
  j["model"] = agg.model;
  j["n"] = m.n;
  j["c"] = m.c;
  j["count"] = m.count;
  j["exact_matches"] = m.exact_matches;
  j["correct_cells"] = m.correct_cells;
  j["total_cells"] = m.total_cells;
  j["parse_failures"] = m.parse_failures;
  j["transport_failures"] = agg.transport_failures;
  j["exact_match"] = m.exact_match();
  j["cell_accuracy"] = m.cell_accuracy();
  j["random_baseline"] = m.c > 0 ? random_baseline(m.c) : 0.0;
  j["confusion"] = {{"tp", m.confusion.tp}, {"fp", m.confusion.fp}, {"fn", m.confusion.fn}};
  json iou = json::array();
  for (int k = 0; k < m.confusion.colors(); ++k) {
    const auto v = m.confusion.iou(k);
    iou.push_back(v ? json(*v) : json(nullptr));
  }
  j["iou"] = iou;
  j["heatmap"] = {{"n", m.heatmap.n}, {"hits", m.heatmap.hits}, {"totals", m.heatmap.totals}};
  j["parse_stages"] = agg.stages;
  j["parse_failure_kinds"] = agg.failures;
  return j;
}

RunAggregate aggregate_from_json(const json& j) {
  RunAggregate agg;
  agg.model = j.value("model", std::string());
  Aggregate& m = agg.metrics;
  m.n = j.at("n");
  m.c = j.at("c");
  m.count = j.at("count");
  m.exact_matches = j.at("exact_matches");
  m.correct_cells = j.at("correct_cells");
  m.total_cells = j.at("total_cells");
  m.parse_failures = j.at("parse_failures");
  agg.transport_failures = j.value("transport_failures", std::int64_t{0});
  m.confusion = ConfusionCounts(m.c);
  m.confusion.tp = j.at("confusion").at("tp").get<std::vector<std::int64_t>>();
  m.confusion.fp = j.at("confusion").at("fp").get<std::vector<std::int64_t>>();
  m.confusion.fn = j.at("confusion").at("fn").get<std::vector<std::int64_t>>();
  const auto& hm = j.at("heatmap");
  m.heatmap.n = hm.at("n");
  m.heatmap.hits = hm.at("hits").get<std::vector<std::int64_t>>();
  m.heatmap.totals = hm.at("totals").get<std::vector<std::int64_t>>();
  const auto cells = static_cast<std::size_t>(m.heatmap.n) * m.heatmap.n;
  if (m.confusion.tp.size() != static_cast<std::size_t>(m.c) || m.confusion.fp.size() != m.confusion.tp.size() ||
      m.confusion.fn.size() != m.confusion.tp.size() || m.heatmap.hits.size() != cells ||
      m.heatmap.totals.size() != cells) {
    throw ShapeError("aggregate arrays do not match n and c");
  }
  agg.stages = j.value("parse_stages", std::map<std::string, std::int64_t>{});
  agg.failures = j.value("parse_failure_kinds", std::map<std::string, std::int64_t>{});
  return agg;
}

RunAggregate read_aggregate(const std::filesystem::path& run_dir) {
  const auto path = run_dir / "aggregate.json";
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return aggregate_from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

std::string dump_aggregate(const RunAggregate& agg) { return aggregate_to_json(agg).dump(2) + "\n"; }

RunAggregate aggregate_records(const DatasetManifest& manifest, const std::vector<RunRecord>& records,
                               const std::string& model, int c) {
  std::unordered_map<std::string, const RunRecord*> latest;
  for (const auto& r : records) latest[r.id] = &r;

  RunAggregate agg;
  agg.model = model;
  std::vector<ScoredPair> pairs;
  for (const auto& rec : manifest.records) {
    const auto it = latest.find(rec.id);
    if (it == latest.end()) continue;
    const RunRecord& r = *it->second;
    if (r.status == RecordStatus::TransportFailure) {
      ++agg.transport_failures;
      continue;
    }
    const ParseOutcome outcome = parse_cascade(r.raw_response, rec.n, rec.n);
    if (outcome.ok()) {
      ++agg.stages[std::string(to_string(outcome.stage))];
    } else {
      ++agg.failures[std::string(to_string(outcome.failure))];
    }
    pairs.push_back({to_prediction(outcome), rec.matrix});
  }
  if (pairs.empty()) {
    agg.metrics.c = c;
    agg.metrics.confusion = ConfusionCounts(c);
    if (!manifest.records.empty()) {
      agg.metrics.n = manifest.records.front().n;
      agg.metrics.heatmap = AccuracyGrid(agg.metrics.n);
    }
    return agg;
  }
  agg.metrics = aggregate(pairs, c);
  return agg;
}

std::vector<RunRecord> read_records(const std::filesystem::path& path) {
  std::vector<RunRecord> out;
  std::ifstream in(path);
  if (!in) return out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      out.push_back(record_from_json(json::parse(line)));
    } catch (const std::exception&) {
      // An interrupted append leaves a partial last line; it is re-queried.
      if (in.peek() != std::char_traits<char>::eof()) throw IoError("corrupt record in " + path.string());
    }
  }
  return out;
}

namespace {

void check_uniform(const DatasetManifest& manifest, int& n, int& c) {
  if (manifest.records.empty()) throw InvalidSpec("manifest has no records");
  n = manifest.records.front().n;
  c = manifest.records.front().c;
  for (const auto& r : manifest.records) {
    if (r.n != n || r.c != c) throw InvalidBatch("a run needs one grid size and colour count");
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << text;
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace

RunOutcome run_eval(const DatasetManifest& full_manifest, const std::filesystem::path& manifest_dir,
                    ModelAdapter& adapter, const std::filesystem::path& run_dir, const RunConfig& config) {
  if (config.concurrency < 1) throw InvalidSpec("concurrency must be >= 1");
  DatasetManifest manifest = full_manifest;
  if (config.limit && *config.limit < static_cast<int>(manifest.records.size())) {
    if (*config.limit < 1) throw InvalidSpec("limit must be >= 1");
    manifest.records.resize(static_cast<std::size_t>(*config.limit));
  }
  int n = 0, c = 0;
  check_uniform(manifest, n, c);
  std::filesystem::create_directories(run_dir);

  const auto run_json = run_dir / "run.json";
  json run;
  run["adapter"] = adapter.kind();
  run["model"] = adapter.label();
  run["n"] = n;
  run["c"] = c;
  run["count"] = manifest.records.size();
  run["generator"] = manifest.generator_version;
  run["prompt_template"] = assets::kPromptTemplateVersion;
  run["temperature"] = 0;
  run["max_tokens"] = max_tokens(n, n);
  run["concurrency"] = config.concurrency;
  if (std::filesystem::exists(run_json)) {
    std::ifstream in(run_json);
    const json prev = json::parse(in, nullptr, false);
    if (!prev.is_discarded() && (prev.value("n", n) != n || prev.value("c", c) != c ||
                                 prev.value("model", adapter.label()) != adapter.label())) {
      throw InvalidSpec("run directory " + run_dir.string() + " belongs to a different run");
    }
  }
  write_text(run_json, run.dump(2) + "\n");

  const auto records_path = run_dir / "records.jsonl";
  std::vector<RunRecord> existing;
  if (config.resume) {
    existing = read_records(records_path);
  } else {
    std::filesystem::remove(records_path);
  }
  std::unordered_map<std::string, RecordStatus> done;
  for (const auto& r : existing) done[r.id] = r.status;

  std::vector<const ManifestRecord*> todo;
  RunOutcome outcome;
  for (const auto& rec : manifest.records) {
    const auto it = done.find(rec.id);
    if (it != done.end() && it->second == RecordStatus::Ok) {
      ++outcome.skipped;
    } else {
      todo.push_back(&rec);
    }
  }

  // A torn final line from an interrupted run is cut off before appending.
  if (std::filesystem::exists(records_path)) {
    std::string text;
    {
      std::ifstream in(records_path, std::ios::binary);
      text.assign(std::istreambuf_iterator<char>(in), {});
    }
    if (!text.empty() && text.back() != '\n') {
      const auto nl = text.rfind('\n');
      std::filesystem::resize_file(records_path, nl == std::string::npos ? 0 : nl + 1);
    }
  }
  // Single writer: every record is appended and flushed under one lock.
  std::ofstream out(records_path, std::ios::binary | std::ios::app);
  if (!out) throw IoError("cannot append to " + records_path.string());
  std::mutex write_mutex;
  std::vector<RunRecord> fresh;

  const ColorMapping mapping = ColorMapping::from_palette(config.palette, c);
  const std::string prompt = build_prompt(n, n, mapping);
  const std::string prompt_hash = hex64(fnv1a64(prompt));
  const int budget = max_tokens(n, n);

  std::atomic<std::size_t> next{0};
  std::exception_ptr fatal;
  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= todo.size()) return;
      const ManifestRecord& rec = *todo[i];
      RunRecord r;
      r.id = rec.id;
      r.prompt_hash = prompt_hash;
      try {
        QueryRequest req{rec.id, prompt, read_file_bytes(manifest_dir / rec.image), budget};
        r.image_hash = hex64(fnv1a64(std::string_view(reinterpret_cast<const char*>(req.png.data()), req.png.size())));
        const auto start = std::chrono::steady_clock::now();
        try {
          QueryResult res = adapter.query(req);
          r.raw_response = std::move(res.text);
          r.attempts = res.attempts;
          r.outcome = parse_cascade(r.raw_response, n, n);
          const Prediction pred = to_prediction(r.outcome);
          r.exact = exact_match(pred, rec.matrix);
          r.cell_accuracy = cell_accuracy(pred, rec.matrix);
        } catch (const TransportError& e) {
          r.status = RecordStatus::TransportFailure;
          r.error = e.what();
          r.http_status = e.status;
          r.attempts = e.attempts;
        } catch (const MissingResponse& e) {
          r.status = RecordStatus::TransportFailure;
          r.error = e.what();
        }
        r.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        std::lock_guard lock(write_mutex);
        out << dump_line(record_to_json(r)) << '\n';
        out.flush();
        fresh.push_back(std::move(r));
      } catch (...) {
        std::lock_guard lock(write_mutex);
        if (!fatal) fatal = std::current_exception();
        next = todo.size();
        return;
      }
    }
  };

  const int threads = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(config.concurrency), todo.size()));
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  if (threads > 0) worker();
  for (auto& t : pool) t.join();
  out.close();
  if (fatal) std::rethrow_exception(fatal);

  outcome.queried = static_cast<int>(fresh.size());
  existing.insert(existing.end(), std::make_move_iterator(fresh.begin()), std::make_move_iterator(fresh.end()));
  outcome.aggregate = aggregate_records(manifest, existing, adapter.label(), c);
  write_text(run_dir / "aggregate.json", dump_aggregate(outcome.aggregate));
  return outcome;
}

}  // namespace g2m
