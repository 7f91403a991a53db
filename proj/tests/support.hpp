#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>
#include <unistd.h>

#include "nisdl/nn.hpp"

namespace testing {

// Fresh directory under the system temp dir, removed on scope exit.
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path = std::filesystem::temp_directory_path() /
           ("nisdl_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline nisdl::Tensor random_tensor(nisdl::Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  nisdl::Tensor t(std::move(shape));
  std::uniform_real_distribution<double> u(lo, hi);
  for (auto& v : t.values()) v = u(rng);
  return t;
}

// Denominator floored at 1e-4 so entries with vanishing gradient are judged
// on an absolute 1e-8 scale instead of on roundoff.
inline double rel_error(double a, double b) {
  double denom = std::max(std::abs(a) + std::abs(b), 1e-4);
  return std::abs(a - b) / denom;
}

// Central differences of f at x[i]; f must recompute from scratch.
inline double numeric_derivative(const std::function<double()>& f, double& x, double h = 1e-5) {
  const double keep = x;
  x = keep + h;
  double up = f();
  x = keep - h;
  double down = f();
  x = keep;
  return (up - down) / (2 * h);
}

// Central difference that steps down h when the one-sided slopes disagree,
// i.e. when the stencil straddles a ReLU kink.
inline double kink_safe_derivative(const std::function<double()>& f, double& x) {
  const double keep = x;
  const double f0 = f();
  double central = 0;
  for (double h : {1e-6, 1e-7, 1e-8}) {
    x = keep + h;
    double up = f();
    x = keep - h;
    double down = f();
    x = keep;
    double fwd = (up - f0) / h, bwd = (f0 - down) / h;
    central = (up - down) / (2 * h);
    if (std::abs(fwd - bwd) <= std::max(1e-4 * std::max(std::abs(fwd), std::abs(bwd)), 1e-8)) break;
  }
  return central;
}

// Biases start at zero, which parks dead pixels exactly on a ReLU kink.
inline void randomize_biases(const std::vector<nisdl::Parameter*>& params, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-0.1, 0.1);
  for (auto* p : params) {
    if (p->name.size() < 5 || p->name.compare(p->name.size() - 5, 5, ".bias") != 0) continue;
    for (auto& v : p->value.values()) v = u(rng);
  }
}

inline double dot(const nisdl::Tensor& a, const nisdl::Tensor& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Worst relative error over the input and every parameter of a layer, with
// loss = <layer(x), r> for a fixed random r. stride thins the checked entries.
inline double check_layer(nisdl::Layer& layer, nisdl::Tensor x, std::mt19937_64& rng, std::size_t stride = 1) {
  nisdl::Tensor y = layer.forward(x);
  nisdl::Tensor r = random_tensor(y.shape(), rng);
  for (auto* p : layer.parameters()) p->grad.fill(0.0);
  nisdl::Tensor gx = layer.backward(r);
  auto loss = [&] { return dot(layer.forward(x), r); };
  double worst = 0;
  for (std::size_t i = 0; i < x.size(); i += stride) worst = std::max(worst, rel_error(gx[i], numeric_derivative(loss, x[i])));
  for (auto* p : layer.parameters()) {
    for (std::size_t i = 0; i < p->value.size(); i += stride)
      worst = std::max(worst, rel_error(p->grad[i], numeric_derivative(loss, p->value[i])));
  }
  return worst;
}

// Amplitude of the f_hz component of x[start, start + n) by a single-bin DFT
// after removing the window mean. n should span whole cycles.
inline double tone_amplitude(const std::vector<double>& x, std::size_t start, std::size_t n, double f_hz,
                             double rate_hz) {
  double mean = 0;
  for (std::size_t i = 0; i < n; ++i) mean += x[start + i];
  mean /= static_cast<double>(n);
  double re = 0, im = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double ph = 2 * M_PI * f_hz * static_cast<double>(start + i) / rate_hz;
    re += (x[start + i] - mean) * std::cos(ph);
    im -= (x[start + i] - mean) * std::sin(ph);
  }
  return 2.0 * std::hypot(re, im) / static_cast<double>(n);
}

// Sample count of the longest whole-cycle window fitting in avail samples.
inline std::size_t whole_cycles(std::size_t avail, double f_hz, double rate_hz) {
  const double period = rate_hz / f_hz;
  std::size_t cycles = static_cast<std::size_t>(static_cast<double>(avail) / period);
  return static_cast<std::size_t>(std::llround(static_cast<double>(cycles) * period));
}

}  // namespace testing
