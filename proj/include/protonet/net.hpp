#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "protonet/error.hpp"
#include "protonet/image.hpp"

namespace protonet {

template <typename T>
using VectorX = Eigen::Matrix<T, Eigen::Dynamic, 1>;
template <typename T>
using MatrixX = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

struct Shape {
  int h = 1, w = 1, c = 1;
  int size() const { return h * w * c; }
  bool operator==(const Shape&) const = default;
};

// Flat activation buffer with shape metadata; index (ch, y, x) maps to
// ch*h*w + y*w + x.
template <typename T>
struct Tensor {
  Shape shape;
  VectorX<T> v;

  Tensor() = default;
  explicit Tensor(Shape s) : shape(s), v(VectorX<T>::Zero(s.size())) {}
  T& at(int ch, int y, int x) {
    return v[(ch * shape.h + y) * shape.w + x];
  }
  T at(int ch, int y, int x) const {
    return v[(ch * shape.h + y) * shape.w + x];
  }
};

template <typename T>
Tensor<T> tensor_from_image(const Image& img) {
  Tensor<T> t(Shape{img.height(), img.width(), img.channels()});
  int pos = 0;
  for (const Plane& p : img.planes)
    for (int y = 0; y < p.rows(); ++y)
      for (int x = 0; x < p.cols(); ++x) t.v[pos++] = T(p(y, x));
  return t;
}

// Numerically stable softmax (max subtraction).
template <typename T>
VectorX<T> softmax(const VectorX<T>& z) {
  if (z.size() < 1) throw Error("invalid-argument", "softmax of empty vector");
  VectorX<T> e = (z.array() - z.maxCoeff()).exp();
  return e / e.sum();
}

// -log p_y, with the argument clamped away from zero.
template <typename T>
T nll_loss(const VectorX<T>& probabilities, int label) {
  if (label < 0 || label >= probabilities.size())
    throw Error("invalid-argument", "label out of range");
  return -std::log(std::max(probabilities[label], T(1e-12)));
}

template <typename T>
class Layer {
 public:
  virtual ~Layer() = default;
  virtual std::string kind() const = 0;
  virtual Shape output_shape() const = 0;
  virtual Tensor<T> forward(const Tensor<T>& in, bool training,
                            std::mt19937_64& rng) = 0;
  // Accumulates parameter gradients into grad and returns the gradient with
  // respect to the layer input. Requires state retained by a training-mode
  // forward on the same layer.
  virtual Tensor<T> backward(const Tensor<T>& grad_out) = 0;
  virtual std::unique_ptr<Layer<T>> clone() const = 0;

  // Learnable parameters as one flat vector (empty for stateless layers and
  // for fixed heads, which by contract receive no gradient).
  VectorX<T> theta, grad, velocity;
  void zero_grad() { grad.setZero(); }
};

namespace detail {
template <typename T>
void init_uniform_fan_in(VectorX<T>& theta, int fan_in, std::mt19937_64& rng) {
  const T bound = std::sqrt(T(6) / T(fan_in));
  std::uniform_real_distribution<double> dist(-double(bound), double(bound));
  for (Eigen::Index i = 0; i < theta.size(); ++i) theta[i] = T(dist(rng));
}
}  // namespace detail

// Valid convolution, stride 1, square kernel. Weights laid out as a
// (out_maps) x (in_channels*k*k) matrix followed by out_maps biases.
template <typename T>
class ConvLayer : public Layer<T> {
 public:
  ConvLayer(Shape in, int out_maps, int kernel, std::mt19937_64& rng)
      : in_(in), maps_(out_maps), k_(kernel) {
    if (kernel < 1 || kernel > in.h || kernel > in.w)
      throw Error("invalid-config", "conv kernel does not fit input " +
                                        std::to_string(in.h) + "x" +
                                        std::to_string(in.w));
    out_ = Shape{in.h - kernel + 1, in.w - kernel + 1, out_maps};
    const int fan_in = in.c * kernel * kernel;
    this->theta.resize(out_maps * fan_in + out_maps);
    detail::init_uniform_fan_in(this->theta, fan_in, rng);
    this->theta.tail(out_maps).setZero();
    this->grad = VectorX<T>::Zero(this->theta.size());
    this->velocity = VectorX<T>::Zero(this->theta.size());
  }

  std::string kind() const override { return "conv"; }
  Shape output_shape() const override { return out_; }

  Tensor<T> forward(const Tensor<T>& in, bool, std::mt19937_64&) override {
    if (!(in.shape == in_)) throw Error("shape-mismatch", "conv input shape");
    const int rows = in_.c * k_ * k_, npix = out_.h * out_.w;
    cols_.resize(rows, npix);
    for (int ci = 0; ci < in_.c; ++ci)
      for (int ky = 0; ky < k_; ++ky)
        for (int kx = 0; kx < k_; ++kx) {
          const int r = (ci * k_ + ky) * k_ + kx;
          for (int oy = 0; oy < out_.h; ++oy)
            for (int ox = 0; ox < out_.w; ++ox)
              cols_(r, oy * out_.w + ox) = in.at(ci, oy + ky, ox + kx);
        }
    auto W = weight_map();
    MatrixX<T> res = W * cols_;
    res.colwise() += this->theta.tail(maps_);
    Tensor<T> out(out_);
    for (int m = 0; m < maps_; ++m)
      out.v.segment(m * npix, npix) = res.row(m).transpose();
    return out;
  }

  Tensor<T> backward(const Tensor<T>& grad_out) override {
    if (cols_.size() == 0) throw Error("no-forward-state", "conv backward");
    const int rows = in_.c * k_ * k_, npix = out_.h * out_.w;
    MatrixX<T> dres(maps_, npix);
    for (int m = 0; m < maps_; ++m)
      dres.row(m) = grad_out.v.segment(m * npix, npix).transpose();
    grad_weight_map() += dres * cols_.transpose();
    this->grad.tail(maps_) += dres.rowwise().sum();
    MatrixX<T> dcols = weight_map().transpose() * dres;
    Tensor<T> din(in_);
    for (int ci = 0; ci < in_.c; ++ci)
      for (int ky = 0; ky < k_; ++ky)
        for (int kx = 0; kx < k_; ++kx) {
          const int r = (ci * k_ + ky) * k_ + kx;
          for (int oy = 0; oy < out_.h; ++oy)
            for (int ox = 0; ox < out_.w; ++ox)
              din.at(ci, oy + ky, ox + kx) += dcols(r, oy * out_.w + ox);
        }
    return din;
  }

  std::unique_ptr<Layer<T>> clone() const override {
    return std::make_unique<ConvLayer<T>>(*this);
  }

 private:
  Eigen::Map<MatrixX<T>> weight_map() {
    return {this->theta.data(), maps_, in_.c * k_ * k_};
  }
  Eigen::Map<MatrixX<T>> grad_weight_map() {
    return {this->grad.data(), maps_, in_.c * k_ * k_};
  }

  Shape in_, out_;
  int maps_, k_;
  MatrixX<T> cols_;  // retained im2col buffer
};

// Non-overlapping max pooling, window == stride; trailing rows/cols that do
// not fill a window are dropped. Ties route the gradient to the first
// occurrence in scan order.
template <typename T>
class MaxPoolLayer : public Layer<T> {
 public:
  MaxPoolLayer(Shape in, int window) : in_(in), p_(window) {
    if (window < 1 || window > in.h || window > in.w)
      throw Error("invalid-config", "pool window does not fit input");
    out_ = Shape{in.h / window, in.w / window, in.c};
  }

  std::string kind() const override { return "maxpool"; }
  Shape output_shape() const override { return out_; }

  Tensor<T> forward(const Tensor<T>& in, bool, std::mt19937_64&) override {
    if (!(in.shape == in_)) throw Error("shape-mismatch", "maxpool input");
    Tensor<T> out(out_);
    argmax_.assign(out_.size(), 0);
    int pos = 0;
    for (int ch = 0; ch < out_.c; ++ch)
      for (int oy = 0; oy < out_.h; ++oy)
        for (int ox = 0; ox < out_.w; ++ox, ++pos) {
          T best = in.at(ch, oy * p_, ox * p_);
          int best_idx = (ch * in_.h + oy * p_) * in_.w + ox * p_;
          for (int dy = 0; dy < p_; ++dy)
            for (int dx = 0; dx < p_; ++dx) {
              const int y = oy * p_ + dy, x = ox * p_ + dx;
              const T val = in.at(ch, y, x);
              if (val > best) {
                best = val;
                best_idx = (ch * in_.h + y) * in_.w + x;
              }
            }
          out.v[pos] = best;
          argmax_[pos] = best_idx;
        }
    return out;
  }

  Tensor<T> backward(const Tensor<T>& grad_out) override {
    if (argmax_.empty()) throw Error("no-forward-state", "maxpool backward");
    Tensor<T> din(in_);
    for (int i = 0; i < out_.size(); ++i) din.v[argmax_[i]] += grad_out.v[i];
    return din;
  }

  std::unique_ptr<Layer<T>> clone() const override {
    return std::make_unique<MaxPoolLayer<T>>(*this);
  }

 private:
  Shape in_, out_;
  int p_;
  std::vector<int> argmax_;
};

// Fully connected; flattens any input shape.
template <typename T>
class FullyConnectedLayer : public Layer<T> {
 public:
  FullyConnectedLayer(Shape in, int out_dim, std::mt19937_64& rng)
      : in_(in), out_dim_(out_dim) {
    if (out_dim < 1) throw Error("invalid-config", "fc width must be >= 1");
    this->theta.resize(out_dim * in.size() + out_dim);
    detail::init_uniform_fan_in(this->theta, in.size(), rng);
    this->theta.tail(out_dim).setZero();
    this->grad = VectorX<T>::Zero(this->theta.size());
    this->velocity = VectorX<T>::Zero(this->theta.size());
  }

  std::string kind() const override { return "fc"; }
  Shape output_shape() const override { return Shape{1, 1, out_dim_}; }

  Tensor<T> forward(const Tensor<T>& in, bool, std::mt19937_64&) override {
    if (in.v.size() != in_.size()) throw Error("shape-mismatch", "fc input");
    input_ = in.v;
    Tensor<T> out(output_shape());
    out.v = weight_map() * in.v + this->theta.tail(out_dim_);
    return out;
  }

  Tensor<T> backward(const Tensor<T>& grad_out) override {
    if (input_.size() == 0) throw Error("no-forward-state", "fc backward");
    grad_weight_map() += grad_out.v * input_.transpose();
    this->grad.tail(out_dim_) += grad_out.v;
    Tensor<T> din(in_);
    din.v = weight_map().transpose() * grad_out.v;
    return din;
  }

  std::unique_ptr<Layer<T>> clone() const override {
    return std::make_unique<FullyConnectedLayer<T>>(*this);
  }

 private:
  Eigen::Map<MatrixX<T>> weight_map() {
    return {this->theta.data(), out_dim_, in_.size()};
  }
  Eigen::Map<MatrixX<T>> grad_weight_map() {
    return {this->grad.data(), out_dim_, in_.size()};
  }

  Shape in_;
  int out_dim_;
  VectorX<T> input_;
};

template <typename T>
class ActivationLayer : public Layer<T> {
 public:
  enum class Fn { relu, tanh };

  ActivationLayer(Shape in, Fn fn) : shape_(in), fn_(fn) {}

  std::string kind() const override {
    return fn_ == Fn::relu ? "relu" : "tanh";
  }
  Shape output_shape() const override { return shape_; }

  Tensor<T> forward(const Tensor<T>& in, bool, std::mt19937_64&) override {
    if (!(in.shape == shape_)) throw Error("shape-mismatch", "activation");
    Tensor<T> out(shape_);
    if (fn_ == Fn::relu)
      out.v = in.v.cwiseMax(T(0));
    else
      out.v = in.v.array().tanh().matrix();
    output_ = out.v;
    return out;
  }

  Tensor<T> backward(const Tensor<T>& grad_out) override {
    if (output_.size() == 0) throw Error("no-forward-state", "activation");
    Tensor<T> din(shape_);
    if (fn_ == Fn::relu)
      din.v = (output_.array() > T(0)).template cast<T>() * grad_out.v.array();
    else
      din.v = (T(1) - output_.array().square()) * grad_out.v.array();
    return din;
  }

  std::unique_ptr<Layer<T>> clone() const override {
    return std::make_unique<ActivationLayer<T>>(*this);
  }

 private:
  Shape shape_;
  Fn fn_;
  VectorX<T> output_;
};

// Inverted dropout: kept units scaled by 1/keep at train time, identity at
// inference.
template <typename T>
class DropoutLayer : public Layer<T> {
 public:
  DropoutLayer(Shape in, double rate) : shape_(in), rate_(rate) {
    if (rate < 0 || rate >= 1)
      throw Error("invalid-config", "dropout rate must be in [0,1)");
  }

  std::string kind() const override { return "dropout"; }
  Shape output_shape() const override { return shape_; }

  Tensor<T> forward(const Tensor<T>& in, bool training,
                    std::mt19937_64& rng) override {
    if (!(in.shape == shape_)) throw Error("shape-mismatch", "dropout");
    if (!training || rate_ == 0) {
      mask_ = VectorX<T>::Ones(shape_.size());
      Tensor<T> out(shape_);
      out.v = in.v;
      return out;
    }
    const double keep = 1.0 - rate_;
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    mask_.resize(shape_.size());
    for (Eigen::Index i = 0; i < mask_.size(); ++i)
      mask_[i] = dist(rng) < keep ? T(1.0 / keep) : T(0);
    Tensor<T> out(shape_);
    out.v = in.v.cwiseProduct(mask_);
    return out;
  }

  Tensor<T> backward(const Tensor<T>& grad_out) override {
    if (mask_.size() == 0) throw Error("no-forward-state", "dropout");
    Tensor<T> din(shape_);
    din.v = grad_out.v.cwiseProduct(mask_);
    return din;
  }

  std::unique_ptr<Layer<T>> clone() const override {
    return std::make_unique<DropoutLayer<T>>(*this);
  }

  double rate() const { return rate_; }

 private:
  Shape shape_;
  double rate_;
  VectorX<T> mask_;
};

// Output head: z_c = <column_c, v>, no bias. The weight matrix is either
// learnable (standard baseline head is FullyConnectedLayer instead) or fixed
// prototype embeddings, in which case theta stays empty and no gradient is
// ever produced for it.
template <typename T>
class FixedHeadLayer : public Layer<T> {
 public:
  FixedHeadLayer(Shape in, MatrixX<T> columns) : in_(in), W_(std::move(columns)) {
    if (W_.rows() != in.size())
      throw Error("k-mismatch",
                  "head expects " + std::to_string(W_.rows()) +
                      " activations, penultimate layer outputs " +
                      std::to_string(in.size()));
  }

  std::string kind() const override { return "fixed_head"; }
  Shape output_shape() const override { return Shape{1, 1, int(W_.cols())}; }

  Tensor<T> forward(const Tensor<T>& in, bool, std::mt19937_64&) override {
    if (in.v.size() != in_.size()) throw Error("shape-mismatch", "fixed head");
    input_ = in.v;
    Tensor<T> out(output_shape());
    out.v = W_.transpose() * in.v;
    return out;
  }

  Tensor<T> backward(const Tensor<T>& grad_out) override {
    if (input_.size() == 0) throw Error("no-forward-state", "fixed head");
    Tensor<T> din(in_);
    din.v = W_ * grad_out.v;
    return din;
  }

  std::unique_ptr<Layer<T>> clone() const override {
    return std::make_unique<FixedHeadLayer<T>>(*this);
  }

  const MatrixX<T>& columns() const { return W_; }

 private:
  Shape in_;
  MatrixX<T> W_;
  VectorX<T> input_;
};

template <typename T>
struct ForwardResult {
  VectorX<T> logits;       // pre-softmax, length C
  VectorX<T> penultimate;  // activations fed into the head, length k
};

// Ordered layer stack; the last layer is the classification head.
template <typename T>
class Network {
 public:
  Network() = default;
  Network(const Network& other) { *this = other; }
  Network& operator=(const Network& other) {
    if (this == &other) return *this;
    input_shape = other.input_shape;
    rng = other.rng;
    layers.clear();
    for (const auto& l : other.layers) layers.push_back(l->clone());
    return *this;
  }
  Network(Network&&) = default;
  Network& operator=(Network&&) = default;

  Shape input_shape;
  std::vector<std::unique_ptr<Layer<T>>> layers;
  std::mt19937_64 rng{0};

  Shape output_shape() const {
    if (layers.empty()) throw Error("invalid-config", "empty network");
    return layers.back()->output_shape();
  }
  int num_classes() const { return output_shape().size(); }
  Shape penultimate_shape() const {
    if (layers.size() < 2) return input_shape;
    return layers[layers.size() - 2]->output_shape();
  }

  ForwardResult<T> forward(const Tensor<T>& input, bool training = false) {
    if (!(input.shape == input_shape))
      throw Error("shape-mismatch", "network input shape");
    Tensor<T> act = input;
    Tensor<T> penultimate;
    for (size_t i = 0; i < layers.size(); ++i) {
      if (i + 1 == layers.size()) penultimate = act;
      act = layers[i]->forward(act, training, rng);
    }
    return {act.v, penultimate.v};
  }

  ForwardResult<T> forward(const Image& img, bool training = false) {
    return forward(tensor_from_image<T>(img), training);
  }

  // Accumulates parameter gradients; returns nothing for fixed layers.
  void backward(const VectorX<T>& logit_gradient) {
    Tensor<T> g(output_shape());
    g.v = logit_gradient;
    for (auto it = layers.rbegin(); it != layers.rend(); ++it)
      g = (*it)->backward(g);
  }

  void zero_grad() {
    for (auto& l : layers) l->zero_grad();
  }

  // theta <- theta - lr * velocity, velocity <- momentum*velocity + grad.
  void sgd_step(T learning_rate, T momentum) {
    for (auto& l : layers) {
      if (l->theta.size() == 0) continue;
      if (l->grad.size() != l->theta.size())
        throw Error("shape-mismatch", "gradient/parameter size");
      l->velocity = momentum * l->velocity + l->grad;
      l->theta -= learning_rate * l->velocity;
    }
  }
};

}  // namespace protonet
