#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "g2m/features.hpp"
#include "g2m/grid_gen.hpp"
#include "g2m/matrix.hpp"
#include "g2m/metrics.hpp"

namespace g2m {

// Conv1x1(d→hidden) → BatchNorm → GELU → Conv1x1(hidden→C). Positions are columns.
template <typename T>
struct ProbeParams {
  using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
  using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

  Mat w1;  // hidden × d
  Vec b1;
  Vec gamma;
  Vec beta;
  Vec running_mean;
  Vec running_var;
  Mat w2;  // C × hidden
  Vec b2;
  double momentum = 0.1;
  double eps = 1e-5;

  int d() const { return static_cast<int>(w1.cols()); }
  int hidden() const { return static_cast<int>(w1.rows()); }
  int classes() const { return static_cast<int>(w2.rows()); }

  // Uniform(±1/sqrt(fan_in)) for both convolutions; identity batch norm.
  static ProbeParams init(int d, int hidden, int classes, std::uint64_t seed);
  static ProbeParams zeros(int d, int hidden, int classes);

  template <typename U>
  ProbeParams<U> cast() const {
    ProbeParams<U> p;
    p.w1 = w1.template cast<U>();
    p.b1 = b1.template cast<U>();
    p.gamma = gamma.template cast<U>();
    p.beta = beta.template cast<U>();
    p.running_mean = running_mean.template cast<U>();
    p.running_var = running_var.template cast<U>();
    p.w2 = w2.template cast<U>();
    p.b2 = b2.template cast<U>();
    p.momentum = momentum;
    p.eps = eps;
    return p;
  }

  // Flat parameter views, in a fixed order: w1 b1 gamma beta w2 b2.
  std::size_t trainable_size() const;
  T& trainable(std::size_t index);
  bool finite() const;
};

using ProbeParamsF = ProbeParams<float>;
using ProbeParamsD = ProbeParams<double>;

template <typename T>
struct ProbeGrads {
  typename ProbeParams<T>::Mat w1, w2;
  typename ProbeParams<T>::Vec b1, gamma, beta, b2;
  T& at(std::size_t index);  // same order as ProbeParams::trainable
};

template <typename T>
struct ForwardCache {
  typename ProbeParams<T>::Mat xhat;  // normalised conv1 output
  typename ProbeParams<T>::Mat y;     // batch-norm output, GELU input
  typename ProbeParams<T>::Mat a;     // GELU output
  typename ProbeParams<T>::Mat work;  // backward scratch
  typename ProbeParams<T>::Vec inv_std;
};

// Train mode: batch statistics, running statistics updated in place.
template <typename T>
typename ProbeParams<T>::Mat forward_train(ProbeParams<T>& params, const typename ProbeParams<T>::Mat& x,
                                           ForwardCache<T>* cache = nullptr);

template <typename T>
typename ProbeParams<T>::Mat forward_eval(const ProbeParams<T>& params, const typename ProbeParams<T>::Mat& x);

// Mean cross-entropy over columns. Throws InvalidLabel when a label is outside [0, C).
template <typename T>
double cross_entropy(const typename ProbeParams<T>::Mat& logits, const std::vector<int>& labels);

// Loss plus gradients of every trainable parameter, backpropagating through the
// train-mode forward pass that produced `cache`.
template <typename T>
double loss_and_grads(const ProbeParams<T>& params, const typename ProbeParams<T>::Mat& x,
                      const typename ProbeParams<T>::Mat& logits, ForwardCache<T>& cache,
                      const std::vector<int>& labels, ProbeGrads<T>& grads);

// Central finite differences against loss_and_grads on a random double-precision probe.
struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;  // tensor index in trainable order: w1 b1 gamma beta w2 b2
  std::size_t checked = 0;      // scalar parameters perturbed
};
GradCheckResult gradient_check(std::uint64_t seed, int d = 5, int hidden = 4, int classes = 3, int n = 2,
                               int batch = 2, double eps = 1e-3);

// Stacks n×n feature maps into a d × (B·n·n) column matrix, row-major within each map.
Eigen::MatrixXf stack_features(const std::vector<const FeatureMap*>& maps);
std::vector<int> stack_labels(const std::vector<const Matrix*>& labels);

// Per-column argmax; ties go to the lowest index.
std::vector<int> argmax_columns(const Eigen::MatrixXf& logits);

// C × n × n logits for one feature map already sized n×n.
std::vector<float> probe_forward(const ProbeParamsF& params, const FeatureMap& fm);

struct TrainConfig {
  double lr = 1e-2;
  double weight_decay = 1e-4;
  int batch = 32;
  int max_iters = 5000;
  double warmup = 0.05;
  std::uint64_t seed = 0;
  int hidden = 512;
  int eval_every = 100;
  std::optional<double> target_val_accuracy;  // stop once validation reaches it

  void validate() const;
};

double lr_at(const TrainConfig& config, int iteration);

struct ProbeSample {
  FeatureMap features;
  Matrix labels;
};

struct TrainLogEntry {
  int iteration = 0;
  double loss = 0.0;
  double lr = 0.0;
  std::optional<double> val_cell_accuracy;
};

struct TrainResult {
  ProbeParamsF params;  // validation-best checkpoint
  std::vector<TrainLogEntry> log;
  int iterations_run = 0;
  int best_iteration = -1;
  double best_val_accuracy = 0.0;
};

// Features are resized to n×n once up front. Throws TrainingDiverged on a non-finite loss.
TrainResult train_probe(const TrainConfig& config, const std::vector<ProbeSample>& train,
                        const std::vector<ProbeSample>& val, int n, int c);

struct ProbeEvaluation {
  Aggregate aggregate;
  std::vector<Matrix> predictions;
};

ProbeEvaluation evaluate_probe(const ProbeParamsF& params, const std::vector<ProbeSample>& samples, int n, int c);

// Checkpoint: flat rank-1 G2MF at `path` plus a JSON sidecar next to it (.json).
struct CheckpointInfo {
  int n = 0;
  int c = 0;
  TrainConfig config;
  int best_iteration = -1;
  double best_val_accuracy = 0.0;
};

void save_checkpoint(const std::filesystem::path& path, const ProbeParamsF& params, const CheckpointInfo& info);
ProbeParamsF load_checkpoint(const std::filesystem::path& path, CheckpointInfo* info = nullptr);
std::filesystem::path sidecar_path(const std::filesystem::path& checkpoint);

// Pairs each manifest record with <features_dir>/<id>.g2mf.
std::vector<ProbeSample> load_probe_dataset(const DatasetManifest& manifest, const std::filesystem::path& features_dir,
                                            int drop_leading = 0);

}  // namespace g2m
