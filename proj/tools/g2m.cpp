#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <iterator>
#include <nlohmann/json.hpp>
#include <optional>
#include <sstream>

#include "g2m/error.hpp"
#include "g2m/features.hpp"
#include "g2m/grid_gen.hpp"
#include "g2m/harness.hpp"
#include "g2m/http_adapter.hpp"
#include "g2m/parser.hpp"
#include "g2m/patch_geometry.hpp"
#include "g2m/probe.hpp"
#include "g2m/prompt.hpp"
#include "g2m/report.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace g2m;

namespace {

std::string read_all(std::istream& in) { return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()}; }

DatasetManifest load_manifest(const std::string& path) { return read_manifest(path); }

fs::path manifest_dir(const std::string& path) {
  const auto parent = fs::path(path).parent_path();
  return parent.empty() ? fs::path(".") : parent;
}

json aggregate_summary(const Aggregate& a) {
  return {{"n", a.n}, {"c", a.c}, {"count", a.count}, {"exact_match", a.exact_match()},
          {"cell_accuracy", a.cell_accuracy()}, {"parse_failures", a.parse_failures}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Grid-to-matrix evaluation toolkit"};
  // Long form only: `parse` takes --h for the grid height. Subcommands inherit this.
  app.set_help_flag("--help", "Print this help message and exit");
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "Generate a seeded grid dataset split");
  GridSpec spec;
  int count = 0;
  std::string split_arg = "test";
  std::uint64_t seed = 0;
  std::string out;
  bool force = false;
  gen->add_option("--n", spec.n, "Grid side")->required();
  gen->add_option("--colors", spec.c, "Colour count")->required();
  gen->add_option("--count", count, "Samples (defaults to 8000/2000/10000 by split)");
  gen->add_option("--split", split_arg, "train, val, test or all");
  gen->add_option("--seed", seed, "Base seed");
  gen->add_option("--out", out, "Output directory")->required();
  gen->add_option("--image-size", spec.image_size, "Image side in pixels");
  gen->add_flag("--force", force, "Overwrite existing files");

  // prompt
  auto* prompt = app.add_subcommand("prompt", "Print the zero-shot prompt for a grid size");
  int pn = 3, pc = 3;
  bool budget_only = false;
  prompt->add_option("--n", pn)->required();
  prompt->add_option("--colors", pc)->required();
  prompt->add_flag("--budget", budget_only, "Print only the max_tokens budget");

  // parse
  auto* parse = app.add_subcommand("parse", "Parse a model response (stdin or --file) into JSON");
  int ph = 0, pw = 0;
  std::string parse_file;
  parse->add_option("--h", ph)->required();
  parse->add_option("--w", pw)->required();
  parse->add_option("--file", parse_file);

  // geometry
  auto* geometry = app.add_subcommand("geometry", "Cell/patch interaction statistics");
  int gn = 0;
  PatchConfig patch;
  bool per_cell_csv = false;
  geometry->add_option("--n", gn)->required();
  geometry->add_option("--image-size", patch.image_size);
  geometry->add_option("--patch", patch.patch_len);
  geometry->add_flag("--csv", per_cell_csv, "Per-cell CSV instead of the histogram");

  // synth-features
  auto* synth = app.add_subcommand("synth-features", "Write synthetic encoder features for a manifest");
  std::string synth_manifest, synth_out;
  double sigma = 0.05;
  int synth_d = 16;
  std::uint64_t synth_seed = 0;
  synth->add_option("--manifest", synth_manifest)->required();
  synth->add_option("--out", synth_out)->required();
  synth->add_option("--sigma", sigma);
  synth->add_option("--d", synth_d);
  synth->add_option("--seed", synth_seed);

  // probe
  auto* probe = app.add_subcommand("probe", "Train or evaluate a spatial probe");
  probe->require_subcommand(1);
  std::string features, manifest_path, val_manifest, checkpoint, probe_out;
  int probe_n = 0, probe_c = 0, drop_leading = 0;
  TrainConfig tc;
  double target = 0.0;
  auto* ptrain = probe->add_subcommand("train", "Train a probe");
  auto* peval = probe->add_subcommand("eval", "Evaluate a probe checkpoint");
  for (auto* sub : {ptrain, peval}) {
    sub->add_option("--features", features, "Directory of <id>.g2mf files")->required();
    sub->add_option("--manifest", manifest_path)->required();
    sub->add_option("--n", probe_n)->required();
    sub->add_option("--colors", probe_c)->required();
    sub->add_option("--drop-leading", drop_leading, "Leading tokens to drop before reshaping");
  }
  ptrain->add_option("--seed", tc.seed);
  ptrain->add_option("--val-manifest", val_manifest, "Validation split for checkpoint selection");
  ptrain->add_option("--out", checkpoint, "Checkpoint path (.g2mf)")->required();
  ptrain->add_option("--hidden", tc.hidden);
  ptrain->add_option("--max-iters", tc.max_iters);
  ptrain->add_option("--batch", tc.batch);
  ptrain->add_option("--lr", tc.lr);
  ptrain->add_option("--eval-every", tc.eval_every);
  ptrain->add_option("--target", target, "Stop once validation cell accuracy reaches this");
  peval->add_option("--checkpoint", checkpoint)->required();
  peval->add_option("--seed", tc.seed);
  peval->add_option("--out", probe_out, "Write aggregate.json here for `g2m report`");

  // eval
  auto* eval = app.add_subcommand("eval", "Run a zero-shot evaluation");
  std::string adapter_kind, endpoint, replay, model = "model", run_dir;
  RunConfig rc;
  int limit = 0;
  bool no_resume = false;
  eval->add_option("--manifest", manifest_path)->required();
  eval->add_option("--adapter", adapter_kind)->required()->check(CLI::IsMember({"http", "replay"}));
  eval->add_option("--endpoint", endpoint, "API base URL (default $G2M_API_BASE)");
  eval->add_option("--replay", replay, "JSONL of {id, response}");
  eval->add_option("--model", model, "Model identifier");
  std::string prompt_role = "user";
  eval->add_option("--prompt-role", prompt_role, "Send the prompt as the user or system turn")
      ->check(CLI::IsMember({"user", "system"}));
  eval->add_option("--out", run_dir)->required();
  eval->add_option("--concurrency", rc.concurrency);
  eval->add_option("--limit", limit, "Evaluate the first N samples (http default 300)");
  eval->add_flag("--no-resume", no_resume);

  // report
  auto* report = app.add_subcommand("report", "Heatmap and CSV breakdowns for a run");
  std::string report_run, report_out;
  PatchConfig report_patch;
  report->add_option("--run", report_run)->required();
  report->add_option("--patch", report_patch.patch_len);
  report->add_option("--image-size", report_patch.image_size);
  report->add_option("--out", report_out);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      spec.validate();
      if (split_arg == "all") {
        SplitCounts counts;
        if (count > 0) counts = {count, count, count};
        const auto manifests = build_dataset(spec, counts, seed, out, force);
        for (const auto& m : manifests) std::cout << split_name(m.split) << ": " << m.records.size() << "\n";
      } else {
        const auto split = parse_split(split_arg);
        if (!split) throw InvalidSpec("unknown split " + split_arg);
        if (count <= 0) {
          const SplitCounts defaults;
          count = *split == Split::Train ? defaults.train : *split == Split::Val ? defaults.val : defaults.test;
        }
        const auto m = build_split(spec, *split, count, seed, out, force);
        std::cout << split_name(m.split) << ": " << m.records.size() << "\n";
      }
    } else if (*prompt) {
      if (budget_only) {
        std::cout << max_tokens(pn, pn) << "\n";
      } else {
        std::cout << build_prompt(pn, pn, ColorMapping::from_palette(Palette::canonical(), pc)) << "\n\n"
                  << "max_tokens: " << max_tokens(pn, pn) << "\n";
      }
    } else if (*parse) {
      std::string text;
      if (parse_file.empty()) {
        text = read_all(std::cin);
      } else {
        std::ifstream in(parse_file, std::ios::binary);
        if (!in) throw IoError("cannot open " + parse_file);
        text = read_all(in);
      }
      const auto outcome = parse_cascade(text, ph, pw);
      json j;
      j["ok"] = outcome.ok();
      if (outcome.ok()) {
        j["stage"] = to_string(outcome.stage);
        j["matrix"] = outcome.matrix->to_rows();
      } else {
        j["failure"] = to_string(outcome.failure);
      }
      std::cout << j.dump() << "\n";
      return outcome.ok() ? 0 : 3;
    } else if (*geometry) {
      patch.validate();
      if (gn < 1 || gn > patch.image_size) throw InvalidSpec("n must be in 1..image size");
      if (per_cell_csv) {
        std::cout << "row,col,type,area_dominance\n";
        for (int r = 0; r < gn; ++r)
          for (int c = 0; c < gn; ++c)
            std::printf("%d,%d,%s,%.6f\n", r, c, std::string(to_string(cell_interaction(r, c, gn, patch))).c_str(),
                        area_dominance(r, c, gn, patch));
      } else {
        const auto hist = type_distribution(gn, patch);
        json j;
        for (auto t : kInteractionTypes) j[std::string(to_string(t))] = hist[static_cast<int>(t)];
        std::cout << j.dump() << "\n";
      }
    } else if (*synth) {
      const auto m = load_manifest(synth_manifest);
      fs::create_directories(synth_out);
      for (std::size_t i = 0; i < m.records.size(); ++i) {
        const auto& rec = m.records[i];
        save_features(fs::path(synth_out) / (rec.id + ".g2mf"),
                      synthetic_features(rec.matrix, sigma, synth_d, synth_seed ^ rec.seed));
      }
      std::cout << "wrote " << m.records.size() << " feature files\n";
    } else if (*ptrain) {
      if (target > 0) tc.target_val_accuracy = target;
      const auto train = load_probe_dataset(load_manifest(manifest_path), features, drop_leading);
      std::vector<ProbeSample> val;
      if (!val_manifest.empty()) val = load_probe_dataset(load_manifest(val_manifest), features, drop_leading);
      const auto result = train_probe(tc, train, val, probe_n, probe_c);
      save_checkpoint(checkpoint, result.params, {probe_n, probe_c, tc, result.best_iteration, result.best_val_accuracy});
      for (const auto& e : result.log) {
        if (!e.val_cell_accuracy) continue;
        std::cerr << "iter " << e.iteration << " loss " << e.loss << " val " << *e.val_cell_accuracy << "\n";
      }
      json j{{"iterations", result.iterations_run},
             {"best_iteration", result.best_iteration},
             {"best_val_cell_accuracy", result.best_val_accuracy},
             {"final_loss", result.log.empty() ? 0.0 : result.log.back().loss},
             {"checkpoint", checkpoint}};
      std::cout << j.dump() << "\n";
    } else if (*peval) {
      const auto params = load_checkpoint(checkpoint);
      const auto samples = load_probe_dataset(load_manifest(manifest_path), features, drop_leading);
      const auto ev = evaluate_probe(params, samples, probe_n, probe_c);
      if (!probe_out.empty()) {
        fs::create_directories(probe_out);
        RunAggregate agg;
        agg.model = "probe:" + fs::path(checkpoint).stem().string();
        agg.metrics = ev.aggregate;
        std::ofstream(fs::path(probe_out) / "aggregate.json") << dump_aggregate(agg);
      }
      std::cout << aggregate_summary(ev.aggregate).dump() << "\n";
    } else if (*eval) {
      const auto manifest = load_manifest(manifest_path);
      rc.resume = !no_resume;
      if (limit > 0) rc.limit = limit;
      RunOutcome outcome;
      if (adapter_kind == "replay") {
        if (replay.empty()) throw InvalidSpec("--replay is required for the replay adapter");
        auto adapter = ReplayAdapter::from_file(replay, model == "model" ? "replay" : model);
        outcome = run_eval(manifest, manifest_dir(manifest_path), adapter, run_dir, rc);
      } else {
        HttpConfig hc;
        hc.base_url = endpoint;
        hc.model = model;
        hc.prompt_role = prompt_role == "system" ? PromptRole::System : PromptRole::User;
        HttpAdapter adapter(HttpConfig::from_env(hc));
        if (!rc.limit) rc.limit = kDefaultHttpLimit;
        outcome = run_eval(manifest, manifest_dir(manifest_path), adapter, run_dir, rc);
      }
      json j = aggregate_summary(outcome.aggregate.metrics);
      j["transport_failures"] = outcome.aggregate.transport_failures;
      j["queried"] = outcome.queried;
      j["skipped"] = outcome.skipped;
      std::cout << j.dump() << "\n";
    } else if (*report) {
      write_report(report_run, report_out.empty() ? report_run : report_out, report_patch);
      const auto agg = read_aggregate(report_run);
      for (const auto& row : summary_table({agg})) std::cout << row.model << " n=" << row.n << ": " << row.text() << "\n";
    }
  } catch (const Error& e) {
    std::cerr << "g2m: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "g2m: unexpected error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
