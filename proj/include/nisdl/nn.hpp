#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "nisdl/tensor.hpp"

namespace nisdl {

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;  // same shape as value

  Parameter(std::string n, Shape shape) : name(std::move(n)), value(shape), grad(shape) {}
};

/// View over the trainable tensors of one model. Pointers stay valid for the
/// lifetime of the owning model.
struct ModelParams {
  std::vector<Parameter*> tensors;
  std::uint64_t rng_seed = 0;

  std::size_t count() const;
  void zero_grad();
  Parameter* find(const std::string& name) const;
};

/// p <- p - lr * grad for every tensor, then zero all gradients.
void sgd_step(ModelParams& params, double learning_rate);

/// Uniform(-sqrt(6 / fan_in), +sqrt(6 / fan_in)), the He bound for ReLU.
void he_uniform(Tensor& weights, std::size_t fan_in, std::mt19937_64& rng);

/// Layers cache what backward needs during forward. Calling backward without
/// a preceding forward throws ErrorCode::state; the cache is consumed by
/// backward.
class Layer {
 public:
  explicit Layer(std::string name) : name_(std::move(name)) {}
  virtual ~Layer() = default;
  Layer(const Layer&) = delete;
  Layer& operator=(const Layer&) = delete;

  const std::string& name() const { return name_; }
  virtual std::string kind() const = 0;
  virtual Tensor forward(const Tensor& input) = 0;
  virtual Tensor backward(const Tensor& grad_output) = 0;
  virtual Shape output_shape(const Shape& input) const = 0;
  virtual std::vector<Parameter*> parameters() { return {}; }
  virtual void initialize(std::mt19937_64& /*rng*/) {}

  // When false, backward only accumulates parameter gradients and returns an
  // empty tensor. Used for layers that consume raw inputs.
  void set_input_grad(bool enabled) { input_grad_ = enabled; }

 protected:
  void require_cached(bool cached) const;

  std::string name_;
  bool input_grad_ = true;
};

/// k x k cross-correlation over NHWC input, stride 1, zero "same" padding.
/// Weights are laid out [k][k][in][out].
class Conv2d : public Layer {
 public:
  Conv2d(std::string name, std::size_t in_channels, std::size_t out_channels, std::size_t kernel);
  std::string kind() const override { return "conv2d"; }
  Tensor forward(const Tensor& input) override;
  Tensor backward(const Tensor& grad_output) override;
  Shape output_shape(const Shape& input) const override;
  std::vector<Parameter*> parameters() override { return {&weight_, &bias_}; }
  void initialize(std::mt19937_64& rng) override;

  Parameter& weight() { return weight_; }
  Parameter& bias() { return bias_; }

 private:
  std::size_t in_, out_, k_;
  Parameter weight_, bias_;
  Tensor input_;
  bool cached_ = false;
};

/// Kernel-k cross-correlation over NLC input, stride 1, "same" padding.
/// Weights are laid out [k][in][out].
class Conv1d : public Layer {
 public:
  Conv1d(std::string name, std::size_t in_channels, std::size_t out_channels, std::size_t kernel);
  std::string kind() const override { return "conv1d"; }
  Tensor forward(const Tensor& input) override;
  Tensor backward(const Tensor& grad_output) override;
  Shape output_shape(const Shape& input) const override;
  std::vector<Parameter*> parameters() override { return {&weight_, &bias_}; }
  void initialize(std::mt19937_64& rng) override;

  Parameter& weight() { return weight_; }
  Parameter& bias() { return bias_; }

 private:
  std::size_t in_, out_, k_;
  Parameter weight_, bias_;
  Tensor input_;
  bool cached_ = false;
};

/// y = x W + b on N x in input; W is [in][out].
class Dense : public Layer {
 public:
  Dense(std::string name, std::size_t in_features, std::size_t out_features);
  std::string kind() const override { return "dense"; }
  Tensor forward(const Tensor& input) override;
  Tensor backward(const Tensor& grad_output) override;
  Shape output_shape(const Shape& input) const override;
  std::vector<Parameter*> parameters() override { return {&weight_, &bias_}; }
  void initialize(std::mt19937_64& rng) override;

  std::size_t in_features() const { return in_; }
  std::size_t out_features() const { return out_; }
  Parameter& weight() { return weight_; }
  Parameter& bias() { return bias_; }

 private:
  std::size_t in_, out_;
  Parameter weight_, bias_;
  Tensor input_;
  bool cached_ = false;
};

class Relu : public Layer {
 public:
  using Layer::Layer;
  std::string kind() const override { return "relu"; }
  Tensor forward(const Tensor& input) override;
  Tensor backward(const Tensor& grad_output) override;
  Shape output_shape(const Shape& input) const override { return input; }

 private:
  Tensor output_;
  bool cached_ = false;
};

/// Non-overlapping window x window averaging over NHWC; trailing rows and
/// columns that do not fill a window are dropped.
class AvgPool2d : public Layer {
 public:
  AvgPool2d(std::string name, std::size_t window) : Layer(std::move(name)), window_(window) {}
  std::string kind() const override { return "avgpool2d"; }
  Tensor forward(const Tensor& input) override;
  Tensor backward(const Tensor& grad_output) override;
  Shape output_shape(const Shape& input) const override;

 private:
  std::size_t window_;
  Shape input_shape_;
  bool cached_ = false;
};

/// Non-overlapping averaging along L of NLC input.
class AvgPool1d : public Layer {
 public:
  AvgPool1d(std::string name, std::size_t window) : Layer(std::move(name)), window_(window) {}
  std::string kind() const override { return "avgpool1d"; }
  Tensor forward(const Tensor& input) override;
  Tensor backward(const Tensor& grad_output) override;
  Shape output_shape(const Shape& input) const override;

 private:
  std::size_t window_;
  Shape input_shape_;
  bool cached_ = false;
};

/// N x ... -> N x prod(...).
class Flatten : public Layer {
 public:
  using Layer::Layer;
  std::string kind() const override { return "flatten"; }
  Tensor forward(const Tensor& input) override;
  Tensor backward(const Tensor& grad_output) override;
  Shape output_shape(const Shape& input) const override;

 private:
  Shape input_shape_;
  bool cached_ = false;
};

/// Joins two tensors along their last axis; leading dimensions must agree.
class Concat {
 public:
  Tensor forward(const Tensor& a, const Tensor& b);
  std::pair<Tensor, Tensor> backward(const Tensor& grad_output);
  static Shape output_shape(const Shape& a, const Shape& b);

 private:
  Shape a_shape_, b_shape_;
  bool cached_ = false;
};

class Sequential {
 public:
  Sequential() = default;
  Sequential(Sequential&&) = default;
  Sequential& operator=(Sequential&&) = default;

  template <typename L, typename... Args>
  L& add(Args&&... args) {
    auto layer = std::make_unique<L>(std::forward<Args>(args)...);
    L& ref = *layer;
    layers_.push_back(std::move(layer));
    return ref;
  }

  Tensor forward(const Tensor& input);
  Tensor backward(const Tensor& grad_output);
  Shape output_shape(const Shape& input) const;
  std::vector<Parameter*> parameters();
  void initialize(std::mt19937_64& rng);

  std::size_t size() const { return layers_.size(); }
  Layer& layer(std::size_t i) { return *layers_.at(i); }
  const Layer& layer(std::size_t i) const { return *layers_.at(i); }
  Layer& front() { return *layers_.front(); }

 private:
  std::vector<std::unique_ptr<Layer>> layers_;
};

struct LossResult {
  double loss = 0.0;
  Tensor grad;  // d loss / d prediction
};

/// mean((p - y)^2) over all elements.
LossResult mse_loss(const Tensor& prediction, const Tensor& target);

}  // namespace nisdl
