#include <algorithm>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numbers>
#include <numeric>
#include <string>

#include "g2m/error.hpp"
#include "g2m/probe.hpp"
#include "g2m/splitmix.hpp"

namespace g2m {

void TrainConfig::validate() const {
  if (!(lr > 0.0) || !(weight_decay >= 0.0)) throw InvalidSpec("lr must be positive and weight decay non-negative");
  if (batch < 1 || max_iters < 1 || hidden < 1 || eval_every < 1) throw InvalidSpec("training sizes must be positive");
  if (!(warmup >= 0.0 && warmup < 1.0)) throw InvalidSpec("warmup fraction must be in [0, 1)");
  if (target_val_accuracy && !(*target_val_accuracy > 0.0 && *target_val_accuracy <= 1.0)) {
    throw InvalidSpec("target accuracy must be in (0, 1]");
  }
}

double lr_at(const TrainConfig& config, int iteration) {
  const double warmup_iters = config.warmup * config.max_iters;
  if (iteration < warmup_iters) return config.lr * iteration / warmup_iters;
  const double span = config.max_iters - warmup_iters;
  const double progress = span > 0 ? std::clamp((iteration - warmup_iters) / span, 0.0, 1.0) : 1.0;
  return config.lr * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

namespace {

constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

struct AdamSlot {
  Eigen::ArrayXXf m, v;
};

template <typename Block>
void adamw_step(Block& param, const Block& grad, AdamSlot& slot, double lr, double wd, int t) {
  if (slot.m.size() == 0) {
    slot.m = Eigen::ArrayXXf::Zero(param.rows(), param.cols());
    slot.v = Eigen::ArrayXXf::Zero(param.rows(), param.cols());
  }
  auto p = param.array();
  const auto g = grad.array();
  Eigen::Map<Eigen::ArrayXXf> m(slot.m.data(), param.rows(), param.cols());
  Eigen::Map<Eigen::ArrayXXf> v(slot.v.data(), param.rows(), param.cols());
  p *= static_cast<float>(1.0 - lr * wd);
  m = kBeta1 * m + (1.0f - static_cast<float>(kBeta1)) * g;
  v = kBeta2 * v + (1.0f - static_cast<float>(kBeta2)) * g.square();
  const float step = static_cast<float>(lr / (1.0 - std::pow(kBeta1, t)));
  const float bias2 = static_cast<float>(std::sqrt(1.0 - std::pow(kBeta2, t)));
  p -= step * m / (v.sqrt() / bias2 + static_cast<float>(kAdamEps));
}

void check_sample(const FeatureMap& fm, const Matrix& labels, int d, int n, int c) {
  if (fm.d != d) throw ShapeError("feature maps differ in channel count");
  if (labels.rows != n || labels.cols != n) throw ShapeError("label matrix does not match n");
  for (int v : labels.cells) {
    if (v < 0 || v >= c) throw InvalidLabel("label " + std::to_string(v) + " outside [0, " + std::to_string(c) + ")");
  }
}

std::vector<ProbeSample> resized(const std::vector<ProbeSample>& samples, int n, int c, int d) {
  std::vector<ProbeSample> out;
  out.reserve(samples.size());
  for (const auto& s : samples) {
    check_sample(s.features, s.labels, d, n, c);
    out.push_back({interpolate(s.features, n), s.labels});
  }
  return out;
}

ProbeEvaluation evaluate_resized(const ProbeParamsF& params, const std::vector<ProbeSample>& samples, int n, int c) {
  constexpr std::size_t kChunk = 32;
  std::vector<ScoredPair> pairs;
  pairs.reserve(samples.size());
  ProbeEvaluation result;
  for (std::size_t start = 0; start < samples.size(); start += kChunk) {
    const std::size_t stop = std::min(samples.size(), start + kChunk);
    std::vector<const FeatureMap*> maps;
    for (std::size_t i = start; i < stop; ++i) maps.push_back(&samples[i].features);
    const auto classes = argmax_columns(forward_eval(params, stack_features(maps)));
    const std::size_t per = static_cast<std::size_t>(n) * n;
    for (std::size_t i = start; i < stop; ++i) {
      Matrix pred(n, n);
      std::copy_n(classes.begin() + static_cast<std::ptrdiff_t>((i - start) * per), per, pred.cells.begin());
      pairs.push_back({pred, samples[i].labels});
      result.predictions.push_back(std::move(pred));
    }
  }
  result.aggregate = aggregate(pairs, c);
  return result;
}

}  // namespace

TrainResult train_probe(const TrainConfig& config, const std::vector<ProbeSample>& train,
                        const std::vector<ProbeSample>& val, int n, int c) {
  config.validate();
  if (train.empty()) throw InvalidBatch("training set is empty");
  if (n < 1 || c < 1) throw InvalidSpec("n and c must be positive");
  const int d = train.front().features.d;
  const auto train_set = resized(train, n, c, d);
  const auto val_set = resized(val, n, c, d);

  SplitMix64 seeds(config.seed);
  ProbeParamsF params = ProbeParamsF::init(d, config.hidden, c, seeds.next());
  SplitMix64 shuffle(seeds.next());

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  auto reshuffle = [&] {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle.next() % i]);
  };
  reshuffle();
  std::size_t cursor = 0;

  AdamSlot s_w1, s_b1, s_gamma, s_beta, s_w2, s_b2;
  ProbeGrads<float> grads;
  ForwardCache<float> cache;
  TrainResult result;
  result.params = params;
  const std::size_t batch = std::min<std::size_t>(static_cast<std::size_t>(config.batch), train_set.size());
  if (batch * static_cast<std::size_t>(n) * n < 2) throw InvalidBatch("batch too small for batch norm");

  for (int it = 0; it < config.max_iters; ++it) {
    std::vector<const FeatureMap*> maps;
    std::vector<const Matrix*> labels;
    for (std::size_t b = 0; b < batch; ++b) {
      if (cursor == order.size()) {
        reshuffle();
        cursor = 0;
      }
      const auto& s = train_set[order[cursor++]];
      maps.push_back(&s.features);
      labels.push_back(&s.labels);
    }
    const Eigen::MatrixXf x = stack_features(maps);
    const Eigen::MatrixXf logits = forward_train(params, x, &cache);
    const double loss = loss_and_grads(params, x, logits, cache, stack_labels(labels), grads);
    if (!std::isfinite(loss)) {
      throw TrainingDiverged("non-finite training loss at iteration " + std::to_string(it));
    }
    const double lr = lr_at(config, it);
    const int t = it + 1;
    adamw_step(params.w1, grads.w1, s_w1, lr, config.weight_decay, t);
    adamw_step(params.b1, grads.b1, s_b1, lr, config.weight_decay, t);
    adamw_step(params.gamma, grads.gamma, s_gamma, lr, config.weight_decay, t);
    adamw_step(params.beta, grads.beta, s_beta, lr, config.weight_decay, t);
    adamw_step(params.w2, grads.w2, s_w2, lr, config.weight_decay, t);
    adamw_step(params.b2, grads.b2, s_b2, lr, config.weight_decay, t);
    if (!params.finite()) throw TrainingDiverged("non-finite parameters after iteration " + std::to_string(it));

    TrainLogEntry entry{t, loss, lr, std::nullopt};
    result.iterations_run = t;
    if (!val_set.empty() && (t % config.eval_every == 0 || t == config.max_iters)) {
      const double acc = evaluate_resized(params, val_set, n, c).aggregate.cell_accuracy();
      entry.val_cell_accuracy = acc;
      if (acc > result.best_val_accuracy || result.best_iteration < 0) {
        result.best_val_accuracy = acc;
        result.best_iteration = t;
        result.params = params;
      }
    }
    result.log.push_back(entry);
    if (config.target_val_accuracy && result.best_iteration > 0 &&
        result.best_val_accuracy >= *config.target_val_accuracy) {
      break;
    }
  }
  if (val_set.empty()) {
    result.params = params;
    result.best_iteration = result.iterations_run;
  }
  return result;
}

ProbeEvaluation evaluate_probe(const ProbeParamsF& params, const std::vector<ProbeSample>& samples, int n, int c) {
  if (samples.empty()) throw EmptyReport("no samples to evaluate");
  if (params.classes() != c) throw ShapeError("probe class count does not match c");
  return evaluate_resized(params, resized(samples, n, c, params.d()), n, c);
}

std::filesystem::path sidecar_path(const std::filesystem::path& checkpoint) {
  auto p = checkpoint;
  return p.replace_extension(".json");
}

void save_checkpoint(const std::filesystem::path& path, const ProbeParamsF& params, const CheckpointInfo& info) {
  Tensor t;
  const auto append = [&t](const auto& block) {
    // Row-major per block so the file order matches the sidecar layout.
    for (Eigen::Index i = 0; i < block.rows(); ++i)
      for (Eigen::Index j = 0; j < block.cols(); ++j) t.values.push_back(block(i, j));
  };
  append(params.w1);
  append(params.b1);
  append(params.gamma);
  append(params.beta);
  append(params.running_mean);
  append(params.running_var);
  append(params.w2);
  append(params.b2);
  t.dims = {static_cast<std::uint32_t>(t.values.size())};
  save_g2mf(path, t);

  nlohmann::json j;
  j["format"] = "g2m-probe/1";
  j["d"] = params.d();
  j["hidden"] = params.hidden();
  j["classes"] = params.classes();
  j["layout"] = {"w1", "b1", "bn_weight", "bn_bias", "bn_running_mean", "bn_running_var", "w2", "b2"};
  j["bn_momentum"] = params.momentum;
  j["bn_eps"] = params.eps;
  j["n"] = info.n;
  j["c"] = info.c;
  j["seed"] = info.config.seed;
  j["lr"] = info.config.lr;
  j["weight_decay"] = info.config.weight_decay;
  j["batch"] = info.config.batch;
  j["max_iters"] = info.config.max_iters;
  j["warmup"] = info.config.warmup;
  j["best_iteration"] = info.best_iteration;
  j["best_val_accuracy"] = info.best_val_accuracy;
  std::ofstream out(sidecar_path(path));
  if (!out) throw IoError("cannot write " + sidecar_path(path).string());
  out << j.dump(2) << '\n';
}

ProbeParamsF load_checkpoint(const std::filesystem::path& path, CheckpointInfo* info) {
  std::ifstream in(sidecar_path(path));
  if (!in) throw IoError("missing checkpoint sidecar " + sidecar_path(path).string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("bad checkpoint sidecar: ") + e.what());
  }
  const int d = j.at("d"), hidden = j.at("hidden"), classes = j.at("classes");
  ProbeParamsF p = ProbeParamsF::zeros(d, hidden, classes);
  p.momentum = j.value("bn_momentum", 0.1);
  p.eps = j.value("bn_eps", 1e-5);
  const Tensor t = load_g2mf(path);
  const std::size_t expected = static_cast<std::size_t>(hidden) * (d + 5) + static_cast<std::size_t>(classes) * (hidden + 1);
  if (t.dims.size() != 1 || t.values.size() != expected) {
    throw ShapeError("checkpoint size " + std::to_string(t.values.size()) + " does not match sidecar dims");
  }
  std::size_t k = 0;
  const auto take = [&t, &k](auto& block) {
    for (Eigen::Index i = 0; i < block.rows(); ++i)
      for (Eigen::Index jj = 0; jj < block.cols(); ++jj) block(i, jj) = t.values[k++];
  };
  take(p.w1);
  take(p.b1);
  take(p.gamma);
  take(p.beta);
  take(p.running_mean);
  take(p.running_var);
  take(p.w2);
  take(p.b2);
  if (info) {
    info->n = j.value("n", 0);
    info->c = j.value("c", classes);
    info->config.seed = j.value("seed", std::uint64_t{0});
    info->config.lr = j.value("lr", 1e-2);
    info->config.weight_decay = j.value("weight_decay", 1e-4);
    info->config.batch = j.value("batch", 32);
    info->config.max_iters = j.value("max_iters", 5000);
    info->config.warmup = j.value("warmup", 0.05);
    info->config.hidden = hidden;
    info->best_iteration = j.value("best_iteration", -1);
    info->best_val_accuracy = j.value("best_val_accuracy", 0.0);
  }
  return p;
}

std::vector<ProbeSample> load_probe_dataset(const DatasetManifest& manifest, const std::filesystem::path& features_dir,
                                            int drop_leading) {
  std::vector<ProbeSample> out;
  out.reserve(manifest.records.size());
  for (const auto& rec : manifest.records) {
    out.push_back({load_features(features_dir / (rec.id + ".g2mf"), drop_leading), rec.matrix});
  }
  return out;
}

}  // namespace g2m
