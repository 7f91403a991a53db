#include "nisdl/nn.hpp"

#include <algorithm>
#include <cmath>

#include "nisdl/error.hpp"

namespace nisdl {

namespace {

void expect_rank(const std::string& layer, const Tensor& t, std::size_t rank) {
  if (t.rank() != rank) {
    fail(ErrorCode::shape, layer + ": expected rank " + std::to_string(rank) + " input, got " +
                               shape_string(t.shape()));
  }
}

void expect_dim(const std::string& layer, const Shape& shape, std::size_t axis, std::size_t expected) {
  if (shape.size() <= axis || shape[axis] != expected) {
    fail(ErrorCode::shape, layer + ": expected dimension " + std::to_string(axis) + " = " +
                               std::to_string(expected) + ", got shape " + shape_string(shape));
  }
}

void expect_shape(const std::string& layer, const Shape& expected, const Shape& actual) {
  if (expected != actual) {
    fail(ErrorCode::shape, layer + ": expected gradient shape " + shape_string(expected) + ", got " +
                               shape_string(actual));
  }
}

}  // namespace

std::size_t ModelParams::count() const {
  std::size_t n = 0;
  for (const auto* p : tensors) n += p->value.size();
  return n;
}

void ModelParams::zero_grad() {
  for (auto* p : tensors) p->grad.fill(0.0);
}

Parameter* ModelParams::find(const std::string& name) const {
  for (auto* p : tensors)
    if (p->name == name) return p;
  return nullptr;
}

void sgd_step(ModelParams& params, double learning_rate) {
  for (auto* p : params.tensors) {
    double* v = p->value.data();
    double* g = p->grad.data();
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      v[i] -= learning_rate * g[i];
      g[i] = 0.0;
    }
  }
}

void he_uniform(Tensor& weights, std::size_t fan_in, std::mt19937_64& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(std::max<std::size_t>(fan_in, 1)));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& w : weights.values()) w = dist(rng);
}

void Layer::require_cached(bool cached) const {
  if (!cached) fail(ErrorCode::state, name_ + ": backward called without a recorded forward pass");
}

// ---------------------------------------------------------------- Conv2d

Conv2d::Conv2d(std::string name, std::size_t in_channels, std::size_t out_channels, std::size_t kernel)
    : Layer(name),
      in_(in_channels),
      out_(out_channels),
      k_(kernel),
      weight_(name + ".weight", {kernel, kernel, in_channels, out_channels}),
      bias_(name + ".bias", {out_channels}) {
  if (kernel % 2 == 0) fail(ErrorCode::config, name + ": same padding needs an odd kernel");
}

void Conv2d::initialize(std::mt19937_64& rng) {
  he_uniform(weight_.value, k_ * k_ * in_, rng);
  bias_.value.fill(0.0);
}

Shape Conv2d::output_shape(const Shape& input) const {
  if (input.size() != 4) fail(ErrorCode::shape, name_ + ": expected NHWC input, got " + shape_string(input));
  expect_dim(name_, input, 3, in_);
  return {input[0], input[1], input[2], out_};
}

Tensor Conv2d::forward(const Tensor& input) {
  expect_rank(name_, input, 4);
  expect_dim(name_, input.shape(), 3, in_);
  const std::size_t n = input.dim(0), h = input.dim(1), w = input.dim(2);
  const auto pad = static_cast<std::ptrdiff_t>(k_ / 2);
  Tensor out({n, h, w, out_});
  const double* x = input.data();
  const double* wt = weight_.value.data();
  const double* b = bias_.value.data();
  double* y = out.data();
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t r = 0; r < h; ++r) {
      for (std::size_t c = 0; c < w; ++c) {
        double* o = y + ((s * h + r) * w + c) * out_;
        std::copy(b, b + out_, o);
        for (std::size_t ky = 0; ky < k_; ++ky) {
          const auto iy = static_cast<std::ptrdiff_t>(r + ky) - pad;
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
          for (std::size_t kx = 0; kx < k_; ++kx) {
            const auto ix = static_cast<std::ptrdiff_t>(c + kx) - pad;
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
            const double* in = x + ((s * h + static_cast<std::size_t>(iy)) * w + static_cast<std::size_t>(ix)) * in_;
            const double* wk = wt + (ky * k_ + kx) * in_ * out_;
            for (std::size_t ci = 0; ci < in_; ++ci) {
              const double v = in[ci];
              if (v == 0.0) continue;
              const double* wr = wk + ci * out_;
              for (std::size_t co = 0; co < out_; ++co) o[co] += v * wr[co];
            }
          }
        }
      }
    }
  }
  input_ = input;
  cached_ = true;
  return out;
}

Tensor Conv2d::backward(const Tensor& grad_output) {
  require_cached(cached_);
  const std::size_t n = input_.dim(0), h = input_.dim(1), w = input_.dim(2);
  expect_shape(name_, {n, h, w, out_}, grad_output.shape());
  const auto pad = static_cast<std::ptrdiff_t>(k_ / 2);
  Tensor grad_in;
  if (input_grad_) grad_in = Tensor(input_.shape());
  const double* x = input_.data();
  const double* wt = weight_.value.data();
  double* gw = weight_.grad.data();
  double* gb = bias_.grad.data();
  double* gx = input_grad_ ? grad_in.data() : nullptr;
  const double* go_all = grad_output.data();
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t r = 0; r < h; ++r) {
      for (std::size_t c = 0; c < w; ++c) {
        const double* go = go_all + ((s * h + r) * w + c) * out_;
        bool any = false;
        for (std::size_t co = 0; co < out_; ++co) {
          gb[co] += go[co];
          any = any || go[co] != 0.0;
        }
        if (!any) continue;
        for (std::size_t ky = 0; ky < k_; ++ky) {
          const auto iy = static_cast<std::ptrdiff_t>(r + ky) - pad;
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
          for (std::size_t kx = 0; kx < k_; ++kx) {
            const auto ix = static_cast<std::ptrdiff_t>(c + kx) - pad;
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
            const std::size_t pix = (s * h + static_cast<std::size_t>(iy)) * w + static_cast<std::size_t>(ix);
            const double* in = x + pix * in_;
            const std::size_t koff = (ky * k_ + kx) * in_ * out_;
            for (std::size_t ci = 0; ci < in_; ++ci) {
              const double v = in[ci];
              double* gwr = gw + koff + ci * out_;
              if (v != 0.0) {
                for (std::size_t co = 0; co < out_; ++co) gwr[co] += v * go[co];
              }
              if (gx) {
                const double* wr = wt + koff + ci * out_;
                double acc = 0.0;
                for (std::size_t co = 0; co < out_; ++co) acc += wr[co] * go[co];
                gx[pix * in_ + ci] += acc;
              }
            }
          }
        }
      }
    }
  }
  cached_ = false;
  input_ = Tensor();
  return grad_in;
}

// ---------------------------------------------------------------- Conv1d

Conv1d::Conv1d(std::string name, std::size_t in_channels, std::size_t out_channels, std::size_t kernel)
    : Layer(name),
      in_(in_channels),
      out_(out_channels),
      k_(kernel),
      weight_(name + ".weight", {kernel, in_channels, out_channels}),
      bias_(name + ".bias", {out_channels}) {
  if (kernel % 2 == 0) fail(ErrorCode::config, name + ": same padding needs an odd kernel");
}

void Conv1d::initialize(std::mt19937_64& rng) {
  he_uniform(weight_.value, k_ * in_, rng);
  bias_.value.fill(0.0);
}

Shape Conv1d::output_shape(const Shape& input) const {
  if (input.size() != 3) fail(ErrorCode::shape, name_ + ": expected NLC input, got " + shape_string(input));
  expect_dim(name_, input, 2, in_);
  return {input[0], input[1], out_};
}

Tensor Conv1d::forward(const Tensor& input) {
  expect_rank(name_, input, 3);
  expect_dim(name_, input.shape(), 2, in_);
  const std::size_t n = input.dim(0), len = input.dim(1);
  const auto pad = static_cast<std::ptrdiff_t>(k_ / 2);
  Tensor out({n, len, out_});
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t i = 0; i < len; ++i) {
      double* o = out.data() + (s * len + i) * out_;
      std::copy(bias_.value.data(), bias_.value.data() + out_, o);
      for (std::size_t t = 0; t < k_; ++t) {
        const auto j = static_cast<std::ptrdiff_t>(i + t) - pad;
        if (j < 0 || j >= static_cast<std::ptrdiff_t>(len)) continue;
        const double* in = input.data() + (s * len + static_cast<std::size_t>(j)) * in_;
        const double* wk = weight_.value.data() + t * in_ * out_;
        for (std::size_t ci = 0; ci < in_; ++ci)
          for (std::size_t co = 0; co < out_; ++co) o[co] += in[ci] * wk[ci * out_ + co];
      }
    }
  }
  input_ = input;
  cached_ = true;
  return out;
}

Tensor Conv1d::backward(const Tensor& grad_output) {
  require_cached(cached_);
  const std::size_t n = input_.dim(0), len = input_.dim(1);
  expect_shape(name_, {n, len, out_}, grad_output.shape());
  const auto pad = static_cast<std::ptrdiff_t>(k_ / 2);
  Tensor grad_in;
  if (input_grad_) grad_in = Tensor(input_.shape());
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t i = 0; i < len; ++i) {
      const double* go = grad_output.data() + (s * len + i) * out_;
      for (std::size_t co = 0; co < out_; ++co) bias_.grad[co] += go[co];
      for (std::size_t t = 0; t < k_; ++t) {
        const auto j = static_cast<std::ptrdiff_t>(i + t) - pad;
        if (j < 0 || j >= static_cast<std::ptrdiff_t>(len)) continue;
        const std::size_t pos = s * len + static_cast<std::size_t>(j);
        const double* in = input_.data() + pos * in_;
        for (std::size_t ci = 0; ci < in_; ++ci) {
          const std::size_t row = t * in_ * out_ + ci * out_;
          double acc = 0.0;
          for (std::size_t co = 0; co < out_; ++co) {
            weight_.grad[row + co] += in[ci] * go[co];
            acc += weight_.value[row + co] * go[co];
          }
          if (input_grad_) grad_in[pos * in_ + ci] += acc;
        }
      }
    }
  }
  cached_ = false;
  input_ = Tensor();
  return grad_in;
}

// ---------------------------------------------------------------- Dense

Dense::Dense(std::string name, std::size_t in_features, std::size_t out_features)
    : Layer(name),
      in_(in_features),
      out_(out_features),
      weight_(name + ".weight", {in_features, out_features}),
      bias_(name + ".bias", {out_features}) {}

void Dense::initialize(std::mt19937_64& rng) {
  he_uniform(weight_.value, in_, rng);
  bias_.value.fill(0.0);
}

Shape Dense::output_shape(const Shape& input) const {
  if (input.size() != 2) fail(ErrorCode::shape, name_ + ": expected N x features input, got " + shape_string(input));
  expect_dim(name_, input, 1, in_);
  return {input[0], out_};
}

Tensor Dense::forward(const Tensor& input) {
  expect_rank(name_, input, 2);
  expect_dim(name_, input.shape(), 1, in_);
  const std::size_t n = input.dim(0);
  Tensor out({n, out_});
  for (std::size_t s = 0; s < n; ++s) {
    double* o = out.data() + s * out_;
    std::copy(bias_.value.data(), bias_.value.data() + out_, o);
    const double* x = input.data() + s * in_;
    for (std::size_t i = 0; i < in_; ++i) {
      const double v = x[i];
      if (v == 0.0) continue;
      const double* wr = weight_.value.data() + i * out_;
      for (std::size_t j = 0; j < out_; ++j) o[j] += v * wr[j];
    }
  }
  input_ = input;
  cached_ = true;
  return out;
}

Tensor Dense::backward(const Tensor& grad_output) {
  require_cached(cached_);
  const std::size_t n = input_.dim(0);
  expect_shape(name_, {n, out_}, grad_output.shape());
  Tensor grad_in;
  if (input_grad_) grad_in = Tensor(input_.shape());
  for (std::size_t s = 0; s < n; ++s) {
    const double* go = grad_output.data() + s * out_;
    const double* x = input_.data() + s * in_;
    for (std::size_t j = 0; j < out_; ++j) bias_.grad[j] += go[j];
    for (std::size_t i = 0; i < in_; ++i) {
      double* gwr = weight_.grad.data() + i * out_;
      const double v = x[i];
      if (v != 0.0)
        for (std::size_t j = 0; j < out_; ++j) gwr[j] += v * go[j];
      if (input_grad_) {
        const double* wr = weight_.value.data() + i * out_;
        double acc = 0.0;
        for (std::size_t j = 0; j < out_; ++j) acc += wr[j] * go[j];
        grad_in[s * in_ + i] = acc;
      }
    }
  }
  cached_ = false;
  input_ = Tensor();
  return grad_in;
}

// ---------------------------------------------------------------- Relu

Tensor Relu::forward(const Tensor& input) {
  Tensor out = input;
  for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
  output_ = out;
  cached_ = true;
  return out;
}

Tensor Relu::backward(const Tensor& grad_output) {
  require_cached(cached_);
  expect_shape(name_, output_.shape(), grad_output.shape());
  Tensor grad_in = grad_output;
  for (std::size_t i = 0; i < grad_in.size(); ++i)
    if (!(output_[i] > 0.0)) grad_in[i] = 0.0;
  cached_ = false;
  output_ = Tensor();
  return grad_in;
}

// ---------------------------------------------------------------- pooling

Shape AvgPool2d::output_shape(const Shape& input) const {
  if (input.size() != 4) fail(ErrorCode::shape, name_ + ": expected NHWC input, got " + shape_string(input));
  if (input[1] < window_ || input[2] < window_) {
    fail(ErrorCode::shape, name_ + ": window " + std::to_string(window_) + " larger than input " + shape_string(input));
  }
  return {input[0], input[1] / window_, input[2] / window_, input[3]};
}

Tensor AvgPool2d::forward(const Tensor& input) {
  Shape os = output_shape(input.shape());
  const std::size_t h = input.dim(1), w = input.dim(2), ch = input.dim(3);
  const double scale = 1.0 / static_cast<double>(window_ * window_);
  Tensor out(os);
  for (std::size_t s = 0; s < os[0]; ++s)
    for (std::size_t r = 0; r < os[1]; ++r)
      for (std::size_t c = 0; c < os[2]; ++c) {
        double* o = out.data() + ((s * os[1] + r) * os[2] + c) * ch;
        for (std::size_t dy = 0; dy < window_; ++dy)
          for (std::size_t dx = 0; dx < window_; ++dx) {
            const double* in = input.data() + ((s * h + r * window_ + dy) * w + c * window_ + dx) * ch;
            for (std::size_t k = 0; k < ch; ++k) o[k] += in[k];
          }
        for (std::size_t k = 0; k < ch; ++k) o[k] *= scale;
      }
  input_shape_ = input.shape();
  cached_ = true;
  return out;
}

Tensor AvgPool2d::backward(const Tensor& grad_output) {
  require_cached(cached_);
  Shape os = output_shape(input_shape_);
  expect_shape(name_, os, grad_output.shape());
  const std::size_t h = input_shape_[1], w = input_shape_[2], ch = input_shape_[3];
  const double scale = 1.0 / static_cast<double>(window_ * window_);
  Tensor grad_in(input_shape_);
  for (std::size_t s = 0; s < os[0]; ++s)
    for (std::size_t r = 0; r < os[1]; ++r)
      for (std::size_t c = 0; c < os[2]; ++c) {
        const double* go = grad_output.data() + ((s * os[1] + r) * os[2] + c) * ch;
        for (std::size_t dy = 0; dy < window_; ++dy)
          for (std::size_t dx = 0; dx < window_; ++dx) {
            double* gi = grad_in.data() + ((s * h + r * window_ + dy) * w + c * window_ + dx) * ch;
            for (std::size_t k = 0; k < ch; ++k) gi[k] = go[k] * scale;
          }
      }
  cached_ = false;
  return grad_in;
}

Shape AvgPool1d::output_shape(const Shape& input) const {
  if (input.size() != 3) fail(ErrorCode::shape, name_ + ": expected NLC input, got " + shape_string(input));
  if (input[1] < window_) {
    fail(ErrorCode::shape, name_ + ": window " + std::to_string(window_) + " larger than input " + shape_string(input));
  }
  return {input[0], input[1] / window_, input[2]};
}

Tensor AvgPool1d::forward(const Tensor& input) {
  Shape os = output_shape(input.shape());
  const std::size_t len = input.dim(1), ch = input.dim(2);
  const double scale = 1.0 / static_cast<double>(window_);
  Tensor out(os);
  for (std::size_t s = 0; s < os[0]; ++s)
    for (std::size_t i = 0; i < os[1]; ++i) {
      double* o = out.data() + (s * os[1] + i) * ch;
      for (std::size_t d = 0; d < window_; ++d) {
        const double* in = input.data() + (s * len + i * window_ + d) * ch;
        for (std::size_t k = 0; k < ch; ++k) o[k] += in[k];
      }
      for (std::size_t k = 0; k < ch; ++k) o[k] *= scale;
    }
  input_shape_ = input.shape();
  cached_ = true;
  return out;
}

Tensor AvgPool1d::backward(const Tensor& grad_output) {
  require_cached(cached_);
  Shape os = output_shape(input_shape_);
  expect_shape(name_, os, grad_output.shape());
  const std::size_t len = input_shape_[1], ch = input_shape_[2];
  const double scale = 1.0 / static_cast<double>(window_);
  Tensor grad_in(input_shape_);
  for (std::size_t s = 0; s < os[0]; ++s)
    for (std::size_t i = 0; i < os[1]; ++i) {
      const double* go = grad_output.data() + (s * os[1] + i) * ch;
      for (std::size_t d = 0; d < window_; ++d) {
        double* gi = grad_in.data() + (s * len + i * window_ + d) * ch;
        for (std::size_t k = 0; k < ch; ++k) gi[k] = go[k] * scale;
      }
    }
  cached_ = false;
  return grad_in;
}

// ---------------------------------------------------------------- Flatten

Shape Flatten::output_shape(const Shape& input) const {
  if (input.empty()) fail(ErrorCode::shape, name_ + ": cannot flatten a scalar");
  std::size_t rest = 1;
  for (std::size_t i = 1; i < input.size(); ++i) rest *= input[i];
  return {input[0], rest};
}

Tensor Flatten::forward(const Tensor& input) {
  input_shape_ = input.shape();
  cached_ = true;
  return input.reshaped(output_shape(input.shape()));
}

Tensor Flatten::backward(const Tensor& grad_output) {
  require_cached(cached_);
  cached_ = false;
  return grad_output.reshaped(input_shape_);
}

// ---------------------------------------------------------------- Concat

Shape Concat::output_shape(const Shape& a, const Shape& b) {
  if (a.size() != b.size() || a.empty() || !std::equal(a.begin(), a.end() - 1, b.begin())) {
    fail(ErrorCode::shape, "concat: leading dimensions differ between " + shape_string(a) + " and " + shape_string(b));
  }
  Shape out = a;
  out.back() += b.back();
  return out;
}

Tensor Concat::forward(const Tensor& a, const Tensor& b) {
  Shape os = output_shape(a.shape(), b.shape());
  const std::size_t wa = a.shape().back(), wb = b.shape().back();
  const std::size_t rows = a.size() / wa;
  Tensor out(os);
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy(a.data() + r * wa, a.data() + (r + 1) * wa, out.data() + r * (wa + wb));
    std::copy(b.data() + r * wb, b.data() + (r + 1) * wb, out.data() + r * (wa + wb) + wa);
  }
  a_shape_ = a.shape();
  b_shape_ = b.shape();
  cached_ = true;
  return out;
}

std::pair<Tensor, Tensor> Concat::backward(const Tensor& grad_output) {
  if (!cached_) fail(ErrorCode::state, "concat: backward called without a recorded forward pass");
  expect_shape("concat", output_shape(a_shape_, b_shape_), grad_output.shape());
  const std::size_t wa = a_shape_.back(), wb = b_shape_.back();
  const std::size_t rows = shape_size(a_shape_) / wa;
  Tensor ga(a_shape_), gb(b_shape_);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* g = grad_output.data() + r * (wa + wb);
    std::copy(g, g + wa, ga.data() + r * wa);
    std::copy(g + wa, g + wa + wb, gb.data() + r * wb);
  }
  cached_ = false;
  return {std::move(ga), std::move(gb)};
}

// ---------------------------------------------------------------- Sequential

Tensor Sequential::forward(const Tensor& input) {
  Tensor x = input;
  for (auto& layer : layers_) x = layer->forward(x);
  return x;
}

Tensor Sequential::backward(const Tensor& grad_output) {
  Tensor g = grad_output;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
  return g;
}

Shape Sequential::output_shape(const Shape& input) const {
  Shape s = input;
  for (const auto& layer : layers_) s = layer->output_shape(s);
  return s;
}

std::vector<Parameter*> Sequential::parameters() {
  std::vector<Parameter*> out;
  for (auto& layer : layers_) {
    auto p = layer->parameters();
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

void Sequential::initialize(std::mt19937_64& rng) {
  for (auto& layer : layers_) layer->initialize(rng);
}

// ---------------------------------------------------------------- loss

LossResult mse_loss(const Tensor& prediction, const Tensor& target) {
  if (prediction.shape() != target.shape()) {
    fail(ErrorCode::shape, "mse: prediction " + shape_string(prediction.shape()) + " vs target " +
                               shape_string(target.shape()));
  }
  if (prediction.empty()) fail(ErrorCode::empty_data, "mse: empty prediction");
  const double n = static_cast<double>(prediction.size());
  LossResult r{0.0, Tensor(prediction.shape())};
  for (std::size_t i = 0; i < prediction.size(); ++i) {
    const double d = prediction[i] - target[i];
    r.loss += d * d;
    r.grad[i] = 2.0 * d / n;
  }
  r.loss /= n;
  return r;
}

}  // namespace nisdl
