#pragma once

// Dense feed-forward regression network: Glorot-uniform initialization,
// forward/backward passes, Adam or plain SGD updates, mini-batch training and
// a central-difference gradient check. All arithmetic is double precision.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fiberforge/errors.hpp"
#include "fiberforge/rng.hpp"

namespace fiberforge {

enum class Activation { kRelu, kLinear };

inline constexpr std::string_view activation_name(Activation a) {
  return a == Activation::kRelu ? "relu" : "linear";
}

inline Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "linear") return Activation::kLinear;
  throw InvalidArgument("unknown activation '" + std::string(name) + "'");
}

enum class OptimizerKind { kAdam, kSgd };

inline constexpr std::string_view optimizer_name(OptimizerKind k) {
  return k == OptimizerKind::kAdam ? "adam" : "sgd";
}

inline OptimizerKind parse_optimizer(std::string_view name) {
  if (name == "adam") return OptimizerKind::kAdam;
  if (name == "sgd") return OptimizerKind::kSgd;
  throw InvalidArgument("unknown optimizer '" + std::string(name) + "'");
}

/// Defaults follow the published configuration: 4 hidden ReLU layers of 14
/// neurons, linear output, lr 0.001, 32 epochs, batch 20.
struct NetworkConfig {
  std::size_t input_dim = 0;
  std::size_t hidden_layers = 4;
  std::size_t hidden_neurons = 14;
  std::size_t output_dim = 0;
  Activation hidden_activation = Activation::kRelu;
  Activation output_activation = Activation::kLinear;
  double learning_rate = 0.001;
  std::size_t epochs = 32;
  std::size_t batch_size = 20;
  std::uint64_t seed = 0;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  double validation_fraction = 0.2;

  void validate() const {
    if (input_dim == 0 || output_dim == 0 || hidden_layers == 0 || hidden_neurons == 0)
      throw InvalidArgument("NetworkConfig: layer dimensions must be >= 1");
    if (epochs == 0) throw InvalidArgument("NetworkConfig: epochs must be >= 1");
    if (batch_size == 0) throw InvalidArgument("NetworkConfig: batch_size must be >= 1");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
      throw InvalidArgument("NetworkConfig: learning_rate must be > 0");
    if (!(validation_fraction > 0.0 && validation_fraction < 1.0))
      throw InvalidArgument("NetworkConfig: validation_fraction must be in (0, 1)");
  }

  friend bool operator==(const NetworkConfig&, const NetworkConfig&) = default;
};

/// Trainable parameter count of a network built from `cfg`.
inline std::size_t parameter_count(const NetworkConfig& cfg) {
  const std::size_t h = cfg.hidden_neurons;
  return cfg.input_dim * h + h + (cfg.hidden_layers - 1) * (h * h + h) + h * cfg.output_dim +
         cfg.output_dim;
}

/// y = act(W x + b), W stored row-major with `rows` outputs and `cols` inputs.
struct Layer {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> weights;
  std::vector<double> biases;
  Activation activation = Activation::kLinear;

  double& w(std::size_t r, std::size_t c) { return weights[r * cols + c]; }
  double w(std::size_t r, std::size_t c) const { return weights[r * cols + c]; }

  friend bool operator==(const Layer&, const Layer&) = default;
};

struct Network {
  std::vector<Layer> layers;

  std::size_t input_dim() const { return layers.empty() ? 0 : layers.front().cols; }
  std::size_t output_dim() const { return layers.empty() ? 0 : layers.back().rows; }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.weights.size() + l.biases.size();
    return n;
  }

  /// Throws InvalidArgument on broken shapes or non-finite parameters.
  void validate() const {
    if (layers.empty()) throw InvalidArgument("Network: no layers");
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const Layer& l = layers[i];
      const std::string at = "Network layer " + std::to_string(i) + ": ";
      if (l.rows == 0 || l.cols == 0) throw InvalidArgument(at + "zero dimension");
      if (l.weights.size() != l.rows * l.cols)
        throw InvalidArgument(at + "weight count " + std::to_string(l.weights.size()) +
                              " != rows*cols " + std::to_string(l.rows * l.cols));
      if (l.biases.size() != l.rows)
        throw InvalidArgument(at + "bias count " + std::to_string(l.biases.size()) +
                              " != rows " + std::to_string(l.rows));
      if (i > 0 && l.cols != layers[i - 1].rows)
        throw InvalidArgument(at + "cols " + std::to_string(l.cols) +
                              " do not chain with previous rows " +
                              std::to_string(layers[i - 1].rows));
      for (double v : l.weights)
        if (!std::isfinite(v)) throw InvalidArgument(at + "non-finite weight");
      for (double v : l.biases)
        if (!std::isfinite(v)) throw InvalidArgument(at + "non-finite bias");
    }
  }

  friend bool operator==(const Network&, const Network&) = default;
};

/// Glorot-uniform weights, limit sqrt(6 / (fan_in + fan_out)), drawn row-major
/// layer by layer from Rng(cfg.seed, Stream::kInit). Biases start at zero.
inline Network init_network(const NetworkConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed, Stream::kInit);
  Network net;
  std::size_t fan_in = cfg.input_dim;
  for (std::size_t i = 0; i <= cfg.hidden_layers; ++i) {
    const bool output = i == cfg.hidden_layers;
    Layer l;
    l.cols = fan_in;
    l.rows = output ? cfg.output_dim : cfg.hidden_neurons;
    l.activation = output ? cfg.output_activation : cfg.hidden_activation;
    const double limit = std::sqrt(6.0 / static_cast<double>(l.rows + l.cols));
    l.weights.resize(l.rows * l.cols);
    for (double& w : l.weights) w = rng.uniform(-limit, limit);
    l.biases.assign(l.rows, 0.0);
    fan_in = l.rows;
    net.layers.push_back(std::move(l));
  }
  return net;
}

/// Pre- and post-activation values of every layer for one input.
struct ForwardCache {
  std::vector<double> input;
  std::vector<std::vector<double>> pre;
  std::vector<std::vector<double>> post;
};

namespace detail {

inline void check_dim(std::size_t got, std::size_t want, const char* what) {
  if (got != want)
    throw InvalidArgument(std::string(what) + ": expected length " + std::to_string(want) +
                          ", got " + std::to_string(got));
}

inline double activate(Activation a, double z) {
  return a == Activation::kRelu ? (z > 0.0 ? z : 0.0) : z;
}

// ReLU subgradient at exactly 0 is 0.
inline double activate_grad(Activation a, double z) {
  return a == Activation::kRelu ? (z > 0.0 ? 1.0 : 0.0) : 1.0;
}

inline void affine(const Layer& l, std::span<const double> in, std::vector<double>& out) {
  out.resize(l.rows);
  for (std::size_t r = 0; r < l.rows; ++r) {
    double acc = l.biases[r];
    const double* row = l.weights.data() + r * l.cols;
    for (std::size_t c = 0; c < l.cols; ++c) acc += row[c] * in[c];
    out[r] = acc;
  }
}

}  // namespace detail

struct ForwardResult {
  std::vector<double> output;
  ForwardCache cache;
};

inline ForwardResult forward(const Network& net, std::span<const double> x) {
  detail::check_dim(x.size(), net.input_dim(), "forward");
  ForwardResult res;
  res.cache.input.assign(x.begin(), x.end());
  res.cache.pre.resize(net.layers.size());
  res.cache.post.resize(net.layers.size());
  std::span<const double> in = res.cache.input;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const Layer& l = net.layers[i];
    detail::affine(l, in, res.cache.pre[i]);
    auto& post = res.cache.post[i];
    post.resize(l.rows);
    for (std::size_t r = 0; r < l.rows; ++r) post[r] = detail::activate(l.activation, res.cache.pre[i][r]);
    in = post;
  }
  res.output = res.cache.post.back();
  return res;
}

/// Forward pass without keeping the cache.
inline std::vector<double> predict(const Network& net, std::span<const double> x) {
  detail::check_dim(x.size(), net.input_dim(), "predict");
  std::vector<double> cur(x.begin(), x.end()), next;
  for (const Layer& l : net.layers) {
    detail::affine(l, cur, next);
    for (double& v : next) v = detail::activate(l.activation, v);
    cur.swap(next);
  }
  return cur;
}

inline double mse_loss(std::span<const double> pred, std::span<const double> target) {
  detail::check_dim(target.size(), pred.size(), "mse_loss");
  if (pred.empty()) throw InvalidArgument("mse_loss: empty vectors");
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - target[i];
    sum += d * d;
  }
  return sum / static_cast<double>(pred.size());
}

struct LayerGradient {
  std::vector<double> weights;
  std::vector<double> biases;
};

/// Same shapes as the network's parameters.
struct Gradients {
  std::vector<LayerGradient> layers;

  static Gradients zeros_like(const Network& net) {
    Gradients g;
    g.layers.reserve(net.layers.size());
    for (const Layer& l : net.layers)
      g.layers.push_back({std::vector<double>(l.weights.size(), 0.0),
                          std::vector<double>(l.biases.size(), 0.0)});
    return g;
  }

  bool matches(const Network& net) const {
    if (layers.size() != net.layers.size()) return false;
    for (std::size_t i = 0; i < layers.size(); ++i)
      if (layers[i].weights.size() != net.layers[i].weights.size() ||
          layers[i].biases.size() != net.layers[i].biases.size())
        return false;
    return true;
  }

  Gradients& operator+=(const Gradients& o) {
    for (std::size_t i = 0; i < layers.size(); ++i) {
      for (std::size_t k = 0; k < layers[i].weights.size(); ++k) layers[i].weights[k] += o.layers[i].weights[k];
      for (std::size_t k = 0; k < layers[i].biases.size(); ++k) layers[i].biases[k] += o.layers[i].biases[k];
    }
    return *this;
  }

  Gradients& operator*=(double s) {
    for (auto& l : layers) {
      for (double& v : l.weights) v *= s;
      for (double& v : l.biases) v *= s;
    }
    return *this;
  }
};

/// Analytic gradient of mse_loss(forward(net, x), target) with respect to
/// every weight and bias. `cache` must come from forward() on this network.
inline Gradients backward(const Network& net, const ForwardCache& cache,
                          std::span<const double> target) {
  const std::size_t n_layers = net.layers.size();
  bool stale = cache.pre.size() != n_layers || cache.post.size() != n_layers ||
               cache.input.size() != net.input_dim();
  for (std::size_t i = 0; !stale && i < n_layers; ++i)
    stale = cache.pre[i].size() != net.layers[i].rows || cache.post[i].size() != net.layers[i].rows;
  if (stale) throw InvalidArgument("backward: cache does not match network shape");
  detail::check_dim(target.size(), net.output_dim(), "backward target");

  Gradients g = Gradients::zeros_like(net);
  const auto& y = cache.post.back();
  std::vector<double> delta(y.size());
  const double scale = 2.0 / static_cast<double>(y.size());
  for (std::size_t r = 0; r < y.size(); ++r) delta[r] = scale * (y[r] - target[r]);

  for (std::size_t li = n_layers; li-- > 0;) {
    const Layer& l = net.layers[li];
    for (std::size_t r = 0; r < l.rows; ++r) delta[r] *= detail::activate_grad(l.activation, cache.pre[li][r]);
    const std::vector<double>& in = li == 0 ? cache.input : cache.post[li - 1];
    auto& gl = g.layers[li];
    for (std::size_t r = 0; r < l.rows; ++r) {
      gl.biases[r] = delta[r];
      for (std::size_t c = 0; c < l.cols; ++c) gl.weights[r * l.cols + c] = delta[r] * in[c];
    }
    if (li == 0) break;
    std::vector<double> prev(l.cols, 0.0);
    for (std::size_t r = 0; r < l.rows; ++r)
      for (std::size_t c = 0; c < l.cols; ++c) prev[c] += l.w(r, c) * delta[r];
    delta.swap(prev);
  }
  return g;
}

/// Adam moment accumulators (unused by SGD apart from the step counter).
struct OptimizerState {
  Gradients first_moment;
  Gradients second_moment;
  std::uint64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  OptimizerKind kind = OptimizerKind::kAdam;

  static OptimizerState for_network(const Network& net, OptimizerKind kind = OptimizerKind::kAdam) {
    OptimizerState s;
    s.first_moment = Gradients::zeros_like(net);
    s.second_moment = Gradients::zeros_like(net);
    s.kind = kind;
    return s;
  }
};

inline void optimizer_step(OptimizerState& state, Network& net, const Gradients& grads, double lr) {
  if (!grads.matches(net) || !state.first_moment.matches(net) || !state.second_moment.matches(net))
    throw InvalidArgument("optimizer_step: gradient/state shapes do not match the network");
  ++state.step;
  if (state.kind == OptimizerKind::kSgd) {
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
      auto& l = net.layers[i];
      for (std::size_t k = 0; k < l.weights.size(); ++k) l.weights[k] -= lr * grads.layers[i].weights[k];
      for (std::size_t k = 0; k < l.biases.size(); ++k) l.biases[k] -= lr * grads.layers[i].biases[k];
    }
    return;
  }
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  auto update = [&](std::vector<double>& p, const std::vector<double>& g, std::vector<double>& m,
                    std::vector<double>& v) {
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = state.beta1 * m[k] + (1.0 - state.beta1) * g[k];
      v[k] = state.beta2 * v[k] + (1.0 - state.beta2) * g[k] * g[k];
      const double m_hat = m[k] / c1;
      const double v_hat = v[k] / c2;
      p[k] -= lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  };
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    update(net.layers[i].weights, grads.layers[i].weights, state.first_moment.layers[i].weights,
           state.second_moment.layers[i].weights);
    update(net.layers[i].biases, grads.layers[i].biases, state.first_moment.layers[i].biases,
           state.second_moment.layers[i].biases);
  }
}

struct Sample {
  std::vector<double> x;
  std::vector<double> y;
};

struct EpochLoss {
  double training = 0.0;
  double validation = 0.0;

  friend bool operator==(const EpochLoss&, const EpochLoss&) = default;
};

/// One entry per epoch, measured after the epoch's last update.
struct LossCurve {
  std::vector<EpochLoss> epochs;

  std::size_t size() const { return epochs.size(); }
  const EpochLoss& operator[](std::size_t i) const { return epochs[i]; }

  friend bool operator==(const LossCurve&, const LossCurve&) = default;
};

inline double mean_loss(const Network& net, std::span<const Sample> data,
                        std::span<const std::size_t> which) {
  double sum = 0.0;
  for (std::size_t idx : which) sum += mse_loss(predict(net, data[idx].x), data[idx].y);
  return sum / static_cast<double>(which.size());
}

/// Number of validation samples carved out of n: round(n * fraction), kept
/// within [1, n - 1].
inline std::size_t validation_count(std::size_t n, double fraction) {
  const auto raw = static_cast<std::size_t>(std::llround(static_cast<double>(n) * fraction));
  return std::clamp<std::size_t>(raw, 1, n - 1);
}

/// Mini-batch training.
///
/// Indices are shuffled once with Rng(cfg.seed, kValidationSplit); the first
/// validation_count() of them form the validation set. Each epoch the training
/// indices are reshuffled in place with a persistent Rng(cfg.seed,
/// kEpochShuffle) and consumed in batches of cfg.batch_size, the last batch
/// possibly short. Per-sample gradients are averaged over the batch before
/// each optimizer step. Throws NumericError on a non-finite epoch loss.
inline LossCurve train(Network& net, std::span<const Sample> data, const NetworkConfig& cfg,
                       double val_fraction) {
  cfg.validate();
  if (!(val_fraction > 0.0 && val_fraction < 1.0))
    throw InvalidArgument("train: val_fraction must be in (0, 1)");
  if (data.size() < 2) throw InvalidArgument("train: need at least 2 samples to form train/validation splits");
  for (const auto& s : data) {
    detail::check_dim(s.x.size(), net.input_dim(), "train sample input");
    detail::check_dim(s.y.size(), net.output_dim(), "train sample target");
  }

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng split_rng(cfg.seed, Stream::kValidationSplit);
  split_rng.shuffle(std::span<std::size_t>(order));
  const std::size_t n_val = validation_count(data.size(), val_fraction);
  std::vector<std::size_t> val_idx(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> train_idx(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());

  Rng epoch_rng(cfg.seed, Stream::kEpochShuffle);
  OptimizerState opt = OptimizerState::for_network(net, cfg.optimizer);
  LossCurve curve;
  curve.epochs.reserve(cfg.epochs);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    epoch_rng.shuffle(std::span<std::size_t>(train_idx));
    for (std::size_t start = 0; start < train_idx.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(start + cfg.batch_size, train_idx.size());
      Gradients batch = Gradients::zeros_like(net);
      for (std::size_t k = start; k < stop; ++k) {
        const Sample& s = data[train_idx[k]];
        const auto fr = forward(net, s.x);
        batch += backward(net, fr.cache, s.y);
      }
      batch *= 1.0 / static_cast<double>(stop - start);
      optimizer_step(opt, net, batch, cfg.learning_rate);
    }
    EpochLoss el{mean_loss(net, data, train_idx), mean_loss(net, data, val_idx)};
    if (!std::isfinite(el.training) || !std::isfinite(el.validation))
      throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch + 1));
    curve.epochs.push_back(el);
  }
  return curve;
}

/// Largest relative deviation between backward() and central differences of
/// the loss, |a - b| / max(|a|, |b|, 1e-12), over all parameters. Results at
/// inputs where a ReLU pre-activation sits within eps-scale of 0 are not
/// meaningful; callers screen those samples with min_abs_preactivation().
inline double grad_check(const Network& net, const Sample& sample, double eps) {
  if (!(eps > 0.0)) throw InvalidArgument("grad_check: eps must be > 0");
  const auto fr = forward(net, sample.x);
  const Gradients analytic = backward(net, fr.cache, sample.y);
  Network probe = net;
  double worst = 0.0;
  auto check = [&](double& param, double a) {
    const double saved = param;
    param = saved + eps;
    const double up = mse_loss(predict(probe, sample.x), sample.y);
    param = saved - eps;
    const double down = mse_loss(predict(probe, sample.x), sample.y);
    param = saved;
    const double numeric = (up - down) / (2.0 * eps);
    const double denom = std::max({std::abs(a), std::abs(numeric), 1e-12});
    worst = std::max(worst, std::abs(a - numeric) / denom);
  };
  for (std::size_t i = 0; i < probe.layers.size(); ++i) {
    for (std::size_t k = 0; k < probe.layers[i].weights.size(); ++k)
      check(probe.layers[i].weights[k], analytic.layers[i].weights[k]);
    for (std::size_t k = 0; k < probe.layers[i].biases.size(); ++k)
      check(probe.layers[i].biases[k], analytic.layers[i].biases[k]);
  }
  return worst;
}

/// Smallest |pre-activation| over all ReLU units for input x.
inline double min_abs_preactivation(const Network& net, std::span<const double> x) {
  const auto fr = forward(net, x);
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < net.layers.size(); ++i)
    if (net.layers[i].activation == Activation::kRelu)
      for (double z : fr.cache.pre[i]) m = std::min(m, std::abs(z));
  return m;
}

}  // namespace fiberforge
