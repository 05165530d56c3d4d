#pragma once

#include <cstring>
#include <functional>
#include <fstream>
#include <memory>
#include <numeric>
#include <random>

#include "sgwmbdl/common.hpp"

namespace sgwmbdl {

// Feature-map shape: channels x len, stored row-major as v[c*len + i].
struct Shape {
  int channels = 1;
  int len = 0;
  int size() const { return channels * len; }
  bool operator==(const Shape&) const = default;
};

inline constexpr double kProbEps = 1e-7;

inline double clamp_prob(double p) { return std::clamp(p, kProbEps, 1.0 - kProbEps); }

class Layer {
 public:
  virtual ~Layer() = default;

  virtual int kind_tag() const = 0;
  virtual const char* name() const = 0;
  virtual Shape infer_out(Shape in) const = 0;
  virtual std::vector<std::int64_t> meta() const { return {}; }
  virtual std::unique_ptr<Layer> clone() const = 0;

  // Pure computation, usable concurrently on immutable models.
  virtual void apply(std::span<const double> x, std::vector<double>& y) const = 0;

  // Training path: apply + retain whatever backward needs.
  virtual std::vector<double> forward(const std::vector<double>& x) {
    x_cache_ = x;
    std::vector<double> y;
    apply(x, y);
    return y;
  }
  virtual std::vector<double> backward(const std::vector<double>& gy) = 0;

  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }
  std::span<double> grads() { return grads_; }
  void zero_grads() { std::fill(grads_.begin(), grads_.end(), 0.0); }

  void bind(Shape in) {
    in_shape_ = in;
    out_shape_ = infer_out(in);
  }
  Shape in_shape() const { return in_shape_; }
  Shape out_shape() const { return out_shape_; }

 protected:
  Shape in_shape_{}, out_shape_{};
  std::vector<double> params_, grads_;
  std::vector<double> x_cache_;

  void alloc_params(std::size_t n) {
    params_.assign(n, 0.0);
    grads_.assign(n, 0.0);
  }
  void xavier_init(std::mt19937_64& rng, int fan_in, int fan_out, std::size_t count) {
    const double a = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> u(-a, a);
    for (std::size_t i = 0; i < count; ++i) params_[i] = u(rng);
  }
};

namespace layer_tag {
inline constexpr int kDense = 1, kConv1D = 2, kReLU = 3, kSigmoid = 4, kTanh = 5, kSoftmax = 6,
                     kMeanPool = 7, kGlobalAvgPool = 8;
}

class DenseLayer final : public Layer {
 public:
  DenseLayer(int in_size, int out_size, std::mt19937_64& rng)
      : in_size_(in_size), out_size_(out_size) {
    if (in_size < 1 || out_size < 1) throw std::invalid_argument("DenseLayer: bad sizes");
    alloc_params(static_cast<std::size_t>(in_size) * out_size + out_size);
    xavier_init(rng, in_size, out_size, static_cast<std::size_t>(in_size) * out_size);
  }

  int kind_tag() const override { return layer_tag::kDense; }
  const char* name() const override { return "dense"; }
  std::vector<std::int64_t> meta() const override { return {in_size_, out_size_}; }
  std::unique_ptr<Layer> clone() const override { return std::make_unique<DenseLayer>(*this); }

  Shape infer_out(Shape in) const override {
    if (in.size() != in_size_)
      throw std::invalid_argument("DenseLayer: input size " + std::to_string(in.size()) +
                                  " != " + std::to_string(in_size_));
    return {1, out_size_};
  }

  void apply(std::span<const double> x, std::vector<double>& y) const override {
    y.assign(out_size_, 0.0);
    const double* w = params_.data();
    for (int o = 0; o < out_size_; ++o) {
      double s = params_[weight_count() + o];  // bias
      for (int i = 0; i < in_size_; ++i) s += w[o * in_size_ + i] * x[i];
      y[o] = s;
    }
  }

  std::vector<double> backward(const std::vector<double>& gy) override {
    std::vector<double> gx(in_size_, 0.0);
    double* gw = grads_.data();
    for (int o = 0; o < out_size_; ++o) {
      const double g = gy[o];
      grads_[weight_count() + o] += g;
      for (int i = 0; i < in_size_; ++i) {
        gw[o * in_size_ + i] += g * x_cache_[i];
        gx[i] += g * params_[o * in_size_ + i];
      }
    }
    return gx;
  }

 private:
  std::size_t weight_count() const { return static_cast<std::size_t>(in_size_) * out_size_; }
  int in_size_, out_size_;
};

// Valid (no padding) 1D convolution over channels x len maps.
class Conv1DLayer final : public Layer {
 public:
  Conv1DLayer(int in_channels, int out_channels, int width, std::mt19937_64& rng)
      : in_ch_(in_channels), out_ch_(out_channels), width_(width) {
    if (in_channels < 1 || out_channels < 1 || width < 1)
      throw std::invalid_argument("Conv1DLayer: bad shape parameters");
    alloc_params(static_cast<std::size_t>(out_ch_) * in_ch_ * width_ + out_ch_);
    xavier_init(rng, in_ch_ * width_, out_ch_ * width_,
                static_cast<std::size_t>(out_ch_) * in_ch_ * width_);
  }

  int kind_tag() const override { return layer_tag::kConv1D; }
  const char* name() const override { return "conv1d"; }
  std::vector<std::int64_t> meta() const override { return {in_ch_, out_ch_, width_}; }
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Conv1DLayer>(*this); }

  Shape infer_out(Shape in) const override {
    if (in.channels != in_ch_)
      throw std::invalid_argument("Conv1DLayer: expected " + std::to_string(in_ch_) +
                                  " channels, got " + std::to_string(in.channels));
    if (in.len < width_)
      throw std::invalid_argument("Conv1DLayer: input length " + std::to_string(in.len) +
                                  " shorter than kernel width " + std::to_string(width_));
    return {out_ch_, in.len - width_ + 1};
  }

  void apply(std::span<const double> x, std::vector<double>& y) const override {
    const int in_len = in_shape_.len, out_len = out_shape_.len;
    y.assign(static_cast<std::size_t>(out_ch_) * out_len, 0.0);
    for (int o = 0; o < out_ch_; ++o)
      for (int i = 0; i < out_len; ++i) {
        double s = params_[weight_count() + o];
        for (int c = 0; c < in_ch_; ++c) {
          const double* w = params_.data() + ((o * in_ch_) + c) * width_;
          const double* xc = x.data() + c * in_len + i;
          for (int k = 0; k < width_; ++k) s += w[k] * xc[k];
        }
        y[o * out_len + i] = s;
      }
  }

  std::vector<double> backward(const std::vector<double>& gy) override {
    const int in_len = in_shape_.len, out_len = out_shape_.len;
    std::vector<double> gx(static_cast<std::size_t>(in_ch_) * in_len, 0.0);
    for (int o = 0; o < out_ch_; ++o)
      for (int i = 0; i < out_len; ++i) {
        const double g = gy[o * out_len + i];
        grads_[weight_count() + o] += g;
        for (int c = 0; c < in_ch_; ++c) {
          double* gw = grads_.data() + ((o * in_ch_) + c) * width_;
          const double* w = params_.data() + ((o * in_ch_) + c) * width_;
          for (int k = 0; k < width_; ++k) {
            gw[k] += g * x_cache_[c * in_len + i + k];
            gx[c * in_len + i + k] += g * w[k];
          }
        }
      }
    return gx;
  }

 private:
  std::size_t weight_count() const {
    return static_cast<std::size_t>(out_ch_) * in_ch_ * width_;
  }
  int in_ch_, out_ch_, width_;
};

// Non-overlapping mean pooling; a trailing partial window is averaged over
// its actual size.
class MeanPoolLayer final : public Layer {
 public:
  explicit MeanPoolLayer(int window) : window_(window) {
    if (window < 1) throw std::invalid_argument("MeanPoolLayer: window must be >= 1");
  }

  int kind_tag() const override { return layer_tag::kMeanPool; }
  const char* name() const override { return "mean_pool"; }
  std::vector<std::int64_t> meta() const override { return {window_}; }
  std::unique_ptr<Layer> clone() const override { return std::make_unique<MeanPoolLayer>(*this); }

  Shape infer_out(Shape in) const override {
    if (in.len < 1) throw std::invalid_argument("MeanPoolLayer: empty input");
    return {in.channels, (in.len + window_ - 1) / window_};
  }

  void apply(std::span<const double> x, std::vector<double>& y) const override {
    const int in_len = in_shape_.len, out_len = out_shape_.len;
    y.assign(static_cast<std::size_t>(in_shape_.channels) * out_len, 0.0);
    for (int c = 0; c < in_shape_.channels; ++c)
      for (int i = 0; i < out_len; ++i) {
        const int lo = i * window_, hi = std::min(in_len, lo + window_);
        double s = 0.0;
        for (int t = lo; t < hi; ++t) s += x[c * in_len + t];
        y[c * out_len + i] = s / (hi - lo);
      }
  }

  std::vector<double> backward(const std::vector<double>& gy) override {
    const int in_len = in_shape_.len, out_len = out_shape_.len;
    std::vector<double> gx(static_cast<std::size_t>(in_shape_.channels) * in_len, 0.0);
    for (int c = 0; c < in_shape_.channels; ++c)
      for (int i = 0; i < out_len; ++i) {
        const int lo = i * window_, hi = std::min(in_len, lo + window_);
        const double g = gy[c * out_len + i] / (hi - lo);
        for (int t = lo; t < hi; ++t) gx[c * in_len + t] += g;
      }
    return gx;
  }

 private:
  int window_;
};

class GlobalAvgPoolLayer final : public Layer {
 public:
  int kind_tag() const override { return layer_tag::kGlobalAvgPool; }
  const char* name() const override { return "global_avg_pool"; }
  std::unique_ptr<Layer> clone() const override {
    return std::make_unique<GlobalAvgPoolLayer>(*this);
  }

  Shape infer_out(Shape in) const override {
    if (in.len < 1) throw std::invalid_argument("GlobalAvgPoolLayer: empty input");
    return {1, in.channels};
  }

  void apply(std::span<const double> x, std::vector<double>& y) const override {
    const int len = in_shape_.len;
    y.assign(in_shape_.channels, 0.0);
    for (int c = 0; c < in_shape_.channels; ++c) {
      double s = 0.0;
      for (int t = 0; t < len; ++t) s += x[c * len + t];
      y[c] = s / len;
    }
  }

  std::vector<double> backward(const std::vector<double>& gy) override {
    const int len = in_shape_.len;
    std::vector<double> gx(static_cast<std::size_t>(in_shape_.channels) * len, 0.0);
    for (int c = 0; c < in_shape_.channels; ++c)
      for (int t = 0; t < len; ++t) gx[c * len + t] = gy[c] / len;
    return gx;
  }
};

enum class ActKind { ReLU, Sigmoid, Tanh, Softmax };

class ActivationLayer final : public Layer {
 public:
  explicit ActivationLayer(ActKind kind) : kind_(kind) {}

  int kind_tag() const override {
    switch (kind_) {
      case ActKind::ReLU: return layer_tag::kReLU;
      case ActKind::Sigmoid: return layer_tag::kSigmoid;
      case ActKind::Tanh: return layer_tag::kTanh;
      default: return layer_tag::kSoftmax;
    }
  }
  const char* name() const override {
    switch (kind_) {
      case ActKind::ReLU: return "relu";
      case ActKind::Sigmoid: return "sigmoid";
      case ActKind::Tanh: return "tanh";
      default: return "softmax";
    }
  }
  std::unique_ptr<Layer> clone() const override {
    return std::make_unique<ActivationLayer>(*this);
  }

  Shape infer_out(Shape in) const override { return in; }

  void apply(std::span<const double> x, std::vector<double>& y) const override {
    y.assign(x.begin(), x.end());
    switch (kind_) {
      case ActKind::ReLU:
        for (auto& v : y) v = std::max(0.0, v);
        break;
      case ActKind::Sigmoid:
        for (auto& v : y) v = 1.0 / (1.0 + std::exp(-v));
        break;
      case ActKind::Tanh:
        for (auto& v : y) v = std::tanh(v);
        break;
      case ActKind::Softmax: {
        const double m = *std::max_element(y.begin(), y.end());
        double z = 0.0;
        for (auto& v : y) z += (v = std::exp(v - m));
        for (auto& v : y) v /= z;
        break;
      }
    }
  }

  std::vector<double> forward(const std::vector<double>& x) override {
    x_cache_ = x;
    apply(x, y_cache_);
    return y_cache_;
  }

  std::vector<double> backward(const std::vector<double>& gy) override {
    std::vector<double> gx(gy.size());
    switch (kind_) {
      case ActKind::ReLU:
        for (std::size_t i = 0; i < gy.size(); ++i) gx[i] = x_cache_[i] > 0.0 ? gy[i] : 0.0;
        break;
      case ActKind::Sigmoid:
        for (std::size_t i = 0; i < gy.size(); ++i)
          gx[i] = gy[i] * y_cache_[i] * (1.0 - y_cache_[i]);
        break;
      case ActKind::Tanh:
        for (std::size_t i = 0; i < gy.size(); ++i)
          gx[i] = gy[i] * (1.0 - y_cache_[i] * y_cache_[i]);
        break;
      case ActKind::Softmax: {
        double dot = 0.0;
        for (std::size_t i = 0; i < gy.size(); ++i) dot += gy[i] * y_cache_[i];
        for (std::size_t i = 0; i < gy.size(); ++i) gx[i] = y_cache_[i] * (gy[i] - dot);
        break;
      }
    }
    return gx;
  }

 private:
  ActKind kind_;
  std::vector<double> y_cache_;
};

class Net {
 public:
  Net() = default;
  explicit Net(Shape in) : in_shape_(in), out_shape_(in) {}

  Net(const Net& o) : in_shape_(o.in_shape_), out_shape_(o.out_shape_) {
    layers_.reserve(o.layers_.size());
    for (const auto& l : o.layers_) layers_.push_back(l->clone());
  }
  Net& operator=(const Net& o) {
    if (this != &o) {
      Net tmp(o);
      *this = std::move(tmp);
    }
    return *this;
  }
  Net(Net&&) = default;
  Net& operator=(Net&&) = default;

  void add(std::unique_ptr<Layer> layer) {
    layer->bind(out_shape_);
    out_shape_ = layer->out_shape();
    layers_.push_back(std::move(layer));
  }

  Shape in_shape() const { return in_shape_; }
  Shape out_shape() const { return out_shape_; }
  const std::vector<std::unique_ptr<Layer>>& layers() const { return layers_; }

  // Inference without touching training caches.
  std::vector<double> infer(const std::vector<double>& x) const {
    check_input(x);
    std::vector<double> cur = x, next;
    for (const auto& l : layers_) {
      l->apply(cur, next);
      cur.swap(next);
    }
    return cur;
  }

  std::vector<double> forward(const std::vector<double>& x) {
    check_input(x);
    std::vector<double> cur = x;
    for (auto& l : layers_) cur = l->forward(cur);
    return cur;
  }

  std::vector<double> backward(const std::vector<double>& gy) {
    if (static_cast<int>(gy.size()) != out_shape_.size())
      throw std::invalid_argument("Net::backward: gradient size mismatch");
    std::vector<double> g = gy;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
    return g;
  }

  void zero_grads() {
    for (auto& l : layers_) l->zero_grads();
  }

  // p -= lr * g over all parameters.
  void sgd_step(double lr) {
    for (auto& l : layers_) {
      auto p = l->params();
      auto g = l->grads();
      for (std::size_t i = 0; i < p.size(); ++i) p[i] -= lr * g[i];
    }
  }

  std::size_t param_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += l->params().size();
    return n;
  }

  std::vector<double*> param_ptrs() {
    std::vector<double*> out;
    out.reserve(param_count());
    for (auto& l : layers_)
      for (auto& v : l->params()) out.push_back(&v);
    return out;
  }

  std::vector<double*> grad_ptrs() {
    std::vector<double*> out;
    out.reserve(param_count());
    for (auto& l : layers_)
      for (auto& v : l->grads()) out.push_back(&v);
    return out;
  }

  bool params_finite() const {
    for (const auto& l : layers_)
      if (!all_finite(l->params())) return false;
    return true;
  }

  // Bit-level FNV-1a over the parameter doubles.
  std::uint64_t param_checksum() const {
    std::uint64_t h = 1469598103934665603ULL;
    for (const auto& l : layers_)
      for (double v : l->params()) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        for (int b = 0; b < 8; ++b) {
          h ^= (bits >> (8 * b)) & 0xff;
          h *= 1099511628211ULL;
        }
      }
    return h;
  }

  bool operator==(const Net& o) const {
    if (in_shape_ != o.in_shape_ || layers_.size() != o.layers_.size()) return false;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      const auto &a = *layers_[i], &b = *o.layers_[i];
      if (a.kind_tag() != b.kind_tag() || a.meta() != b.meta()) return false;
      const auto pa = a.params(), pb = b.params();
      if (!std::equal(pa.begin(), pa.end(), pb.begin(), pb.end())) return false;
    }
    return true;
  }

 private:
  void check_input(const std::vector<double>& x) const {
    if (static_cast<int>(x.size()) != in_shape_.size())
      throw std::invalid_argument("Net: input size " + std::to_string(x.size()) +
                                  " != expected " + std::to_string(in_shape_.size()));
  }

  Shape in_shape_{}, out_shape_{};
  std::vector<std::unique_ptr<Layer>> layers_;
};

// ---- losses ----

inline double softmax_ce_loss(std::span<const double> probs, int label) {
  return -std::log(clamp_prob(probs[label]));
}

inline std::vector<double> softmax_ce_grad(std::span<const double> probs, int label) {
  std::vector<double> g(probs.size(), 0.0);
  const double p = probs[label];
  if (p > kProbEps && p < 1.0 - kProbEps) g[label] = -1.0 / p;
  return g;
}

struct TrainConfig {
  double learning_rate = 0.05;
  int epochs = 20;
  int batch_size = 32;
  std::uint64_t seed = 1;
};

inline void validate(const TrainConfig& c) {
  if (!(c.learning_rate > 0.0) || c.epochs < 1 || c.batch_size < 1)
    throw std::invalid_argument("TrainConfig: learning_rate, epochs, batch_size must be > 0");
}

// Minibatch SGD with softmax cross-entropy; returns per-epoch mean loss.
inline std::vector<double> train_classifier(Net& net, const Mat& X, const std::vector<int>& y,
                                            const TrainConfig& cfg) {
  validate(cfg);
  if (X.rows == 0 || X.rows != y.size())
    throw std::invalid_argument("train_classifier: bad data shapes");
  const std::size_t n = X.rows;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> trace;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::mt19937_64 rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t stop = std::min(n, start + cfg.batch_size);
      net.zero_grads();
      for (std::size_t b = start; b < stop; ++b) {
        const auto row = X.row(order[b]);
        const auto probs = net.forward({row.begin(), row.end()});
        epoch_loss += softmax_ce_loss(probs, y[order[b]]);
        net.backward(softmax_ce_grad(probs, y[order[b]]));
      }
      net.sgd_step(cfg.learning_rate / static_cast<double>(stop - start));
    }
    epoch_loss /= static_cast<double>(n);
    if (!std::isfinite(epoch_loss) || !net.params_finite())
      throw std::runtime_error("train_classifier: diverged at epoch " + std::to_string(epoch));
    trace.push_back(epoch_loss);
  }
  return trace;
}

// ---- gradient checking ----

// Central finite differences against already-computed analytic gradients.
// Returns max over parameters of |a - n| / max(1e-8, |a| + |n|).
inline double grad_check(std::span<double* const> params, std::span<const double> analytic,
                         const std::function<double()>& loss, double h = 1e-5) {
  if (params.size() != analytic.size())
    throw std::invalid_argument("grad_check: gradient count mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = *params[i];
    *params[i] = saved + h;
    const double f1 = loss();
    *params[i] = saved - h;
    const double f2 = loss();
    *params[i] = saved;
    const double numeric = (f1 - f2) / (2.0 * h);
    const double denom = std::max(1e-8, std::abs(analytic[i]) + std::abs(numeric));
    worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
  }
  return worst;
}

inline std::vector<double> collect_grads(Net& net) {
  std::vector<double> g;
  g.reserve(net.param_count());
  for (double* p : net.grad_ptrs()) g.push_back(*p);
  return g;
}

// ---- net builders ----

inline std::unique_ptr<Layer> make_activation(ActKind k) {
  return std::make_unique<ActivationLayer>(k);
}

// Conv(8x5) - ReLU - MeanPool(2) - Conv(16x5) - ReLU - GAP - Dense - Softmax.
// Kernel widths clamp to the running length so short inputs stay valid.
inline Net make_cnn_classifier(int input_len, int num_classes, std::uint64_t seed) {
  std::mt19937_64 rng(mix_seed(seed, 0xc99ULL));
  Net net({1, input_len});
  net.add(std::make_unique<Conv1DLayer>(1, 8, std::min(5, net.out_shape().len), rng));
  net.add(make_activation(ActKind::ReLU));
  net.add(std::make_unique<MeanPoolLayer>(2));
  net.add(std::make_unique<Conv1DLayer>(8, 16, std::min(5, net.out_shape().len), rng));
  net.add(make_activation(ActKind::ReLU));
  net.add(std::make_unique<GlobalAvgPoolLayer>());
  net.add(std::make_unique<DenseLayer>(16, num_classes, rng));
  net.add(make_activation(ActKind::Softmax));
  return net;
}

// Conv(16x8) - ReLU - Conv(32x5) - ReLU - Conv(16x3) - ReLU - GAP - Dense -
// Softmax. The dense projection after GAP is the classification head mapping
// the 16 pooled channels onto class scores.
inline Net make_fcn_classifier(int input_len, int num_classes, std::uint64_t seed) {
  std::mt19937_64 rng(mix_seed(seed, 0xfc9ULL));
  Net net({1, input_len});
  net.add(std::make_unique<Conv1DLayer>(1, 16, std::min(8, net.out_shape().len), rng));
  net.add(make_activation(ActKind::ReLU));
  net.add(std::make_unique<Conv1DLayer>(16, 32, std::min(5, net.out_shape().len), rng));
  net.add(make_activation(ActKind::ReLU));
  net.add(std::make_unique<Conv1DLayer>(32, 16, std::min(3, net.out_shape().len), rng));
  net.add(make_activation(ActKind::ReLU));
  net.add(std::make_unique<GlobalAvgPoolLayer>());
  net.add(std::make_unique<DenseLayer>(16, num_classes, rng));
  net.add(make_activation(ActKind::Softmax));
  return net;
}

// Dense stack with ReLU hiddens and an optional output activation.
inline Net make_mlp(int in_size, const std::vector<int>& hidden, int out_size,
                    ActKind out_act, std::mt19937_64& rng) {
  Net net({1, in_size});
  int cur = in_size;
  for (int hsize : hidden) {
    net.add(std::make_unique<DenseLayer>(cur, hsize, rng));
    net.add(make_activation(ActKind::ReLU));
    cur = hsize;
  }
  net.add(std::make_unique<DenseLayer>(cur, out_size, rng));
  net.add(make_activation(out_act));
  return net;
}

// ---- checkpoints ----
//
// Binary envelope: magic "SGWM1", little-endian integers, float64 payloads.
// Per layer: kind tag, meta ints, then tensor records (ndim, dims, data).

namespace ckpt {

inline void put_u32(std::ostream& os, std::uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
inline void put_i64(std::ostream& os, std::int64_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
inline void put_f64(std::ostream& os, const double* p, std::size_t n) {
  os.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
}
inline std::uint32_t get_u32(std::istream& is) {
  std::uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!is) throw std::runtime_error("checkpoint: truncated stream");
  return v;
}
inline std::int64_t get_i64(std::istream& is) {
  std::int64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!is) throw std::runtime_error("checkpoint: truncated stream");
  return v;
}
inline void get_f64(std::istream& is, double* p, std::size_t n) {
  is.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
  if (!is) throw std::runtime_error("checkpoint: truncated stream");
}

inline constexpr char kMagic[5] = {'S', 'G', 'W', 'M', '1'};

inline void put_magic(std::ostream& os) { os.write(kMagic, sizeof kMagic); }
inline void get_magic(std::istream& is) {
  char buf[5] = {};
  is.read(buf, sizeof buf);
  if (!is || !std::equal(buf, buf + 5, kMagic))
    throw std::runtime_error("checkpoint: bad magic");
}

// Tensor shapes per layer kind, derived from meta.
inline std::vector<std::vector<std::int64_t>> tensor_shapes(int tag,
                                                            const std::vector<std::int64_t>& m) {
  switch (tag) {
    case layer_tag::kDense: return {{m[1], m[0]}, {m[1]}};
    case layer_tag::kConv1D: return {{m[1], m[0], m[2]}, {m[1]}};
    default: return {};
  }
}

}  // namespace ckpt

inline void save_net(const Net& net, std::ostream& os) {
  ckpt::put_magic(os);
  ckpt::put_u32(os, static_cast<std::uint32_t>(net.in_shape().channels));
  ckpt::put_u32(os, static_cast<std::uint32_t>(net.in_shape().len));
  ckpt::put_u32(os, static_cast<std::uint32_t>(net.layers().size()));
  for (const auto& l : net.layers()) {
    ckpt::put_u32(os, static_cast<std::uint32_t>(l->kind_tag()));
    const auto meta = l->meta();
    ckpt::put_u32(os, static_cast<std::uint32_t>(meta.size()));
    for (auto v : meta) ckpt::put_i64(os, v);
    const auto shapes = ckpt::tensor_shapes(l->kind_tag(), meta);
    ckpt::put_u32(os, static_cast<std::uint32_t>(shapes.size()));
    const double* p = l->params().data();
    for (const auto& shape : shapes) {
      ckpt::put_u32(os, static_cast<std::uint32_t>(shape.size()));
      std::int64_t count = 1;
      for (auto d : shape) {
        ckpt::put_i64(os, d);
        count *= d;
      }
      ckpt::put_f64(os, p, static_cast<std::size_t>(count));
      p += count;
    }
  }
}

inline Net load_net(std::istream& is) {
  ckpt::get_magic(is);
  Shape in{static_cast<int>(ckpt::get_u32(is)), static_cast<int>(ckpt::get_u32(is))};
  Net net(in);
  const auto n_layers = ckpt::get_u32(is);
  std::mt19937_64 dummy(0);
  for (std::uint32_t li = 0; li < n_layers; ++li) {
    const int tag = static_cast<int>(ckpt::get_u32(is));
    std::vector<std::int64_t> meta(ckpt::get_u32(is));
    for (auto& v : meta) v = ckpt::get_i64(is);
    std::unique_ptr<Layer> layer;
    switch (tag) {
      case layer_tag::kDense:
        layer = std::make_unique<DenseLayer>(static_cast<int>(meta.at(0)),
                                             static_cast<int>(meta.at(1)), dummy);
        break;
      case layer_tag::kConv1D:
        layer = std::make_unique<Conv1DLayer>(static_cast<int>(meta.at(0)),
                                              static_cast<int>(meta.at(1)),
                                              static_cast<int>(meta.at(2)), dummy);
        break;
      case layer_tag::kReLU: layer = make_activation(ActKind::ReLU); break;
      case layer_tag::kSigmoid: layer = make_activation(ActKind::Sigmoid); break;
      case layer_tag::kTanh: layer = make_activation(ActKind::Tanh); break;
      case layer_tag::kSoftmax: layer = make_activation(ActKind::Softmax); break;
      case layer_tag::kMeanPool:
        layer = std::make_unique<MeanPoolLayer>(static_cast<int>(meta.at(0)));
        break;
      case layer_tag::kGlobalAvgPool: layer = std::make_unique<GlobalAvgPoolLayer>(); break;
      default: throw std::runtime_error("checkpoint: unknown layer tag " + std::to_string(tag));
    }
    const auto n_tensors = ckpt::get_u32(is);
    double* p = layer->params().data();
    std::size_t remaining = layer->params().size();
    for (std::uint32_t t = 0; t < n_tensors; ++t) {
      const auto ndim = ckpt::get_u32(is);
      std::int64_t count = 1;
      for (std::uint32_t d = 0; d < ndim; ++d) count *= ckpt::get_i64(is);
      if (static_cast<std::size_t>(count) > remaining)
        throw std::runtime_error("checkpoint: tensor larger than layer parameters");
      ckpt::get_f64(is, p, static_cast<std::size_t>(count));
      p += count;
      remaining -= static_cast<std::size_t>(count);
    }
    if (remaining != 0) throw std::runtime_error("checkpoint: missing parameter payload");
    net.add(std::move(layer));
  }
  return net;
}

inline void save_net_file(const Net& net, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("save_net_file: cannot open " + path);
  save_net(net, os);
}

inline Net load_net_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("load_net_file: cannot open " + path);
  return load_net(is);
}

}  // namespace sgwmbdl
