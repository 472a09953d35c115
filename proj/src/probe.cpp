#include "g2m/probe.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <unsupported/Eigen/SpecialFunctions>

#include "g2m/error.hpp"
#include "g2m/splitmix.hpp"

namespace g2m {

template <typename T>
ProbeParams<T> ProbeParams<T>::init(int d, int hidden, int classes, std::uint64_t seed) {
  if (d < 1 || hidden < 1 || classes < 1) throw ShapeError("probe dimensions must be positive");
  SplitMix64 rng(seed);
  auto fill = [&rng](auto& m, double bound) {
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = static_cast<T>((2.0 * rng.uniform() - 1.0) * bound);
  };
  ProbeParams p = zeros(d, hidden, classes);
  const double bound1 = 1.0 / std::sqrt(static_cast<double>(d));
  const double bound2 = 1.0 / std::sqrt(static_cast<double>(hidden));
  fill(p.w1, bound1);
  fill(p.b1, bound1);
  fill(p.w2, bound2);
  fill(p.b2, bound2);
  return p;
}

template <typename T>
ProbeParams<T> ProbeParams<T>::zeros(int d, int hidden, int classes) {
  ProbeParams p;
  p.w1 = Mat::Zero(hidden, d);
  p.b1 = Vec::Zero(hidden);
  p.gamma = Vec::Ones(hidden);
  p.beta = Vec::Zero(hidden);
  p.running_mean = Vec::Zero(hidden);
  p.running_var = Vec::Ones(hidden);
  p.w2 = Mat::Zero(classes, hidden);
  p.b2 = Vec::Zero(classes);
  return p;
}

template <typename T>
std::size_t ProbeParams<T>::trainable_size() const {
  return static_cast<std::size_t>(w1.size() + b1.size() + gamma.size() + beta.size() + w2.size() + b2.size());
}

namespace {

template <typename T, typename... Blocks>
T& flat_at(std::size_t index, Blocks&... blocks) {
  T* found = nullptr;
  auto visit = [&](auto& block) {
    if (found) return;
    const auto size = static_cast<std::size_t>(block.size());
    if (index < size) {
      found = block.data() + index;
    } else {
      index -= size;
    }
  };
  (visit(blocks), ...);
  if (!found) throw OutOfRange("parameter index out of range");
  return *found;
}

}  // namespace

template <typename T>
T& ProbeParams<T>::trainable(std::size_t index) {
  return flat_at<T>(index, w1, b1, gamma, beta, w2, b2);
}

template <typename T>
T& ProbeGrads<T>::at(std::size_t index) {
  return flat_at<T>(index, w1, b1, gamma, beta, w2, b2);
}

template <typename T>
bool ProbeParams<T>::finite() const {
  return w1.allFinite() && b1.allFinite() && gamma.allFinite() && beta.allFinite() && running_mean.allFinite() &&
         running_var.allFinite() && w2.allFinite() && b2.allFinite() && (running_var.array() > T(0)).all();
}

namespace {

template <typename T>
void check_input(const ProbeParams<T>& params, Eigen::Index rows) {
  if (rows != params.d()) {
    throw ShapeError("feature channels " + std::to_string(rows) + " do not match probe input " +
                     std::to_string(params.d()));
  }
}

template <typename Derived>
auto gelu(const Eigen::ArrayBase<Derived>& y) {
  using T = typename Derived::Scalar;
  return y * T(0.5) * (T(1) + (y * T(std::numbers::sqrt2 / 2)).erf());
}

}  // namespace

template <typename T>
typename ProbeParams<T>::Mat forward_train(ProbeParams<T>& params, const typename ProbeParams<T>::Mat& x,
                                           ForwardCache<T>* cache) {
  using Mat = typename ProbeParams<T>::Mat;
  using Vec = typename ProbeParams<T>::Vec;
  check_input(params, x.rows());
  const Eigen::Index m = x.cols();
  if (m < 2) throw InvalidBatch("train-mode batch norm needs at least two positions");
  ForwardCache<T> local;
  ForwardCache<T>& c = cache ? *cache : local;

  // Buffers keep their storage across calls with the same batch shape.
  Mat& z = c.xhat;
  z.resize(params.hidden(), m);
  z.noalias() = params.w1 * x;
  z.colwise() += params.b1;

  // Batch statistics accumulated in double.
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(z.rows());
  for (Eigen::Index j = 0; j < m; ++j) sum += z.col(j).template cast<double>();
  const Eigen::VectorXd mean = sum / static_cast<double>(m);
  Eigen::VectorXd sq = Eigen::VectorXd::Zero(z.rows());
  for (Eigen::Index j = 0; j < m; ++j) sq += (z.col(j).template cast<double>() - mean).array().square().matrix();
  const Eigen::VectorXd var = sq / static_cast<double>(m);

  c.inv_std = (var.array() + params.eps).rsqrt().matrix().template cast<T>();
  z.colwise() -= mean.template cast<T>();
  z.array().colwise() *= c.inv_std.array();

  const double mom = params.momentum;
  params.running_mean = ((1.0 - mom) * params.running_mean.template cast<double>() + mom * mean).template cast<T>();
  params.running_var = ((1.0 - mom) * params.running_var.template cast<double>() +
                        mom * var * (static_cast<double>(m) / static_cast<double>(m - 1)))
                           .template cast<T>();

  c.y.resize(z.rows(), m);
  c.y.array() = (z.array().colwise() * params.gamma.array()).colwise() + params.beta.array();
  c.a.resize(z.rows(), m);
  c.a.array() = gelu(c.y.array());
  Mat logits = params.w2 * c.a;
  logits.colwise() += params.b2;
  return logits;
}

template <typename T>
typename ProbeParams<T>::Mat forward_eval(const ProbeParams<T>& params, const typename ProbeParams<T>::Mat& x) {
  using Mat = typename ProbeParams<T>::Mat;
  using Vec = typename ProbeParams<T>::Vec;
  check_input(params, x.rows());
  const Vec scale =
      (params.gamma.array() * (params.running_var.array() + static_cast<T>(params.eps)).rsqrt()).matrix();
  const Vec shift = params.beta - (params.running_mean.array() * scale.array()).matrix();
  Mat y = params.w1 * x;
  y.colwise() += params.b1;
  y.array().colwise() *= scale.array();
  y.colwise() += shift;
  Mat logits = params.w2 * gelu(y.array()).matrix();
  logits.colwise() += params.b2;
  return logits;
}

namespace {

void check_labels(Eigen::Index classes, Eigen::Index columns, const std::vector<int>& labels) {
  if (static_cast<Eigen::Index>(labels.size()) != columns) throw ShapeError("label count does not match logits");
  for (int label : labels) {
    if (label < 0 || label >= classes) {
      throw InvalidLabel("label " + std::to_string(label) + " outside [0, " + std::to_string(classes) + ")");
    }
  }
}

// Column-wise log-sum-exp in double.
template <typename T>
double column_lse(const typename ProbeParams<T>::Mat& logits, Eigen::Index j) {
  const double top = static_cast<double>(logits.col(j).maxCoeff());
  double s = 0.0;
  for (Eigen::Index k = 0; k < logits.rows(); ++k) s += std::exp(static_cast<double>(logits(k, j)) - top);
  return top + std::log(s);
}

}  // namespace

template <typename T>
double cross_entropy(const typename ProbeParams<T>::Mat& logits, const std::vector<int>& labels) {
  check_labels(logits.rows(), logits.cols(), labels);
  double total = 0.0;
  for (Eigen::Index j = 0; j < logits.cols(); ++j) {
    total += column_lse<T>(logits, j) - static_cast<double>(logits(labels[j], j));
  }
  return total / static_cast<double>(logits.cols());
}

template <typename T>
double loss_and_grads(const ProbeParams<T>& params, const typename ProbeParams<T>::Mat& x,
                      const typename ProbeParams<T>::Mat& logits, ForwardCache<T>& cache,
                      const std::vector<int>& labels, ProbeGrads<T>& grads) {
  using Mat = typename ProbeParams<T>::Mat;
  using Vec = typename ProbeParams<T>::Vec;
  check_labels(logits.rows(), logits.cols(), labels);
  const Eigen::Index m = logits.cols();
  const double inv_m = 1.0 / static_cast<double>(m);

  // dL/dlogits = (softmax - onehot) / M
  Mat dlogits(logits.rows(), m);
  double total = 0.0;
  for (Eigen::Index j = 0; j < m; ++j) {
    const double lse = column_lse<T>(logits, j);
    total += lse - static_cast<double>(logits(labels[j], j));
    for (Eigen::Index k = 0; k < logits.rows(); ++k) {
      dlogits(k, j) = static_cast<T>(std::exp(static_cast<double>(logits(k, j)) - lse) * inv_m);
    }
    dlogits(labels[j], j) -= static_cast<T>(inv_m);
  }

  grads.w2.noalias() = dlogits * cache.a.transpose();
  grads.b2 = dlogits.rowwise().sum();

  // GELU'(y) = Phi(y) + y * phi(y)
  Mat& dy = cache.work;
  dy.resize(params.hidden(), m);
  dy.noalias() = params.w2.transpose() * dlogits;
  {
    const auto y = cache.y.array();
    const T inv_sqrt2 = static_cast<T>(std::numbers::sqrt2 / 2);
    const T inv_sqrt2pi = static_cast<T>(std::numbers::inv_sqrtpi * std::numbers::sqrt2 / 2);
    dy.array() *= T(0.5) * (T(1) + (y * inv_sqrt2).erf()) + y * inv_sqrt2pi * (T(-0.5) * y.square()).exp();
  }

  grads.gamma = (dy.array() * cache.xhat.array()).rowwise().sum().matrix();
  grads.beta = dy.rowwise().sum();

  // Batch-norm backward with batch statistics.
  dy.array().colwise() *= params.gamma.array();  // now d x-hat
  const Vec sum1 = dy.rowwise().sum();
  const Vec sum2 = (dy.array() * cache.xhat.array()).rowwise().sum().matrix();
  const T scale_m = static_cast<T>(m);
  const Vec post = cache.inv_std.array() * static_cast<T>(inv_m);
  dy.array() = ((dy.array() * scale_m).colwise() - sum1.array() - cache.xhat.array().colwise() * sum2.array())
                   .colwise() * post.array();  // now dz

  grads.w1.noalias() = dy * x.transpose();
  grads.b1 = dy.rowwise().sum();
  return total * inv_m;
}

Eigen::MatrixXf stack_features(const std::vector<const FeatureMap*>& maps) {
  if (maps.empty()) return {};
  const int d = maps.front()->d;
  const Eigen::Index per = static_cast<Eigen::Index>(maps.front()->h) * maps.front()->w;
  Eigen::MatrixXf x(d, per * static_cast<Eigen::Index>(maps.size()));
  for (std::size_t b = 0; b < maps.size(); ++b) {
    const FeatureMap& fm = *maps[b];
    if (fm.d != d || static_cast<Eigen::Index>(fm.h) * fm.w != per) throw ShapeError("feature maps differ in shape");
    // Channels-first storage is already a per × d column-major block, transposed.
    Eigen::Map<const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> src(fm.values.data(), d,
                                                                                               per);
    x.middleCols(static_cast<Eigen::Index>(b) * per, per) = src;
  }
  return x;
}

std::vector<int> stack_labels(const std::vector<const Matrix*>& labels) {
  std::vector<int> out;
  for (const Matrix* m : labels) out.insert(out.end(), m->cells.begin(), m->cells.end());
  return out;
}

std::vector<int> argmax_columns(const Eigen::MatrixXf& logits) {
  std::vector<int> out(static_cast<std::size_t>(logits.cols()));
  for (Eigen::Index j = 0; j < logits.cols(); ++j) {
    int best = 0;
    for (Eigen::Index k = 1; k < logits.rows(); ++k) {
      if (logits(k, j) > logits(best, j)) best = static_cast<int>(k);
    }
    out[static_cast<std::size_t>(j)] = best;
  }
  return out;
}

std::vector<float> probe_forward(const ProbeParamsF& params, const FeatureMap& fm) {
  const Eigen::MatrixXf logits = forward_eval(params, stack_features({&fm}));
  // C × (h·w) column-major → C × h × w channels-first.
  std::vector<float> out(static_cast<std::size_t>(logits.size()));
  Eigen::Map<Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(out.data(), logits.rows(),
                                                                                    logits.cols()) = logits;
  return out;
}

// Per parameter tensor: ||analytic - numeric|| / max(||analytic||, ||numeric||, 1e-6). The floor keeps
// tensors whose true gradient is zero (conv1 bias under batch norm) from dividing rounding noise by itself.
GradCheckResult gradient_check(std::uint64_t seed, int d, int hidden, int classes, int n, int batch, double eps) {
  SplitMix64 rng(seed);
  ProbeParamsD p = ProbeParamsD::init(d, hidden, classes, rng.next());
  for (Eigen::Index i = 0; i < p.gamma.size(); ++i) {
    p.gamma(i) = 0.5 + rng.uniform();
    p.beta(i) = rng.uniform() - 0.5;
  }
  const Eigen::Index m = static_cast<Eigen::Index>(batch) * n * n;
  Eigen::MatrixXd x(d, m);
  for (Eigen::Index j = 0; j < m; ++j)
    for (Eigen::Index i = 0; i < d; ++i) x(i, j) = rng.normal();
  std::vector<int> labels(static_cast<std::size_t>(m));
  for (int& l : labels) l = static_cast<int>(rng.below(static_cast<std::uint32_t>(classes)));

  auto loss_at = [&](const ProbeParamsD& params) {
    ProbeParamsD copy = params;
    return cross_entropy<double>(forward_train(copy, x), labels);
  };

  ProbeParamsD work = p;
  ForwardCache<double> cache;
  ProbeGrads<double> grads;
  const Eigen::MatrixXd logits = forward_train(work, x, &cache);
  loss_and_grads(p, x, logits, cache, labels, grads);

  const std::size_t sizes[] = {static_cast<std::size_t>(p.w1.size()), static_cast<std::size_t>(p.b1.size()),
                               static_cast<std::size_t>(p.gamma.size()), static_cast<std::size_t>(p.beta.size()),
                               static_cast<std::size_t>(p.w2.size()), static_cast<std::size_t>(p.b2.size())};
  GradCheckResult result;
  std::size_t k = 0;
  for (std::size_t t = 0; t < std::size(sizes); ++t) {
    double diff = 0.0, na = 0.0, nn = 0.0;
    for (std::size_t e = 0; e < sizes[t]; ++e, ++k) {
      ProbeParamsD plus = p, minus = p;
      plus.trainable(k) += eps;
      minus.trainable(k) -= eps;
      const double numeric = (loss_at(plus) - loss_at(minus)) / (2 * eps);
      const double analytic = grads.at(k);
      diff += (analytic - numeric) * (analytic - numeric);
      na += analytic * analytic;
      nn += numeric * numeric;
    }
    const double rel = std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nn), 1e-6});
    if (rel > result.max_rel_error) {
      result.max_rel_error = rel;
      result.worst_index = t;
    }
  }
  result.checked = k;
  return result;
}

#define G2M_INSTANTIATE(T)                                                                                      \
  template struct ProbeParams<T>;                                                                               \
  template struct ProbeGrads<T>;                                                                                \
  template ProbeParams<T>::Mat forward_train<T>(ProbeParams<T>&, const ProbeParams<T>::Mat&, ForwardCache<T>*); \
  template ProbeParams<T>::Mat forward_eval<T>(const ProbeParams<T>&, const ProbeParams<T>::Mat&);              \
  template double cross_entropy<T>(const ProbeParams<T>::Mat&, const std::vector<int>&);                        \
  template double loss_and_grads<T>(const ProbeParams<T>&, const ProbeParams<T>::Mat&,                          \
                                    const ProbeParams<T>::Mat&, ForwardCache<T>&, const std::vector<int>&,        \
                                    ProbeGrads<T>&);

G2M_INSTANTIATE(float)
G2M_INSTANTIATE(double)
#undef G2M_INSTANTIATE

}  // namespace g2m
