#include "nisdl/magnify.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "nisdl/error.hpp"

namespace nisdl {

void MagnifyConfig::validate() const {
  if (!(frame_rate_hz > 0.0)) fail(ErrorCode::config, "magnify.frame_rate_hz must be positive");
  if (!(low_cut_hz > 0.0 && low_cut_hz < high_cut_hz && high_cut_hz < frame_rate_hz / 2.0)) {
    fail(ErrorCode::config, "magnify band requires 0 < low_cut_hz (" + std::to_string(low_cut_hz) +
                                ") < high_cut_hz (" + std::to_string(high_cut_hz) + ") < frame_rate_hz/2 (" +
                                std::to_string(frame_rate_hz / 2.0) + ")");
  }
  if (!(xi >= 0.0)) fail(ErrorCode::config, "magnify.xi must be >= 0");
  if (pyramid_levels < 1) fail(ErrorCode::config, "magnify.pyramid_levels must be >= 1");
  if (denoise_radius < 0) fail(ErrorCode::config, "magnify.denoise_radius must be >= 0");
}

void VideoClip::validate() const {
  if (!(frame_rate_hz > 0.0)) fail(ErrorCode::domain, "clip frame rate must be positive");
  const double dt = 1.0 / frame_rate_hz;
  for (std::size_t i = 1; i < frames.size(); ++i) {
    double step = frames[i].timestamp - frames[i - 1].timestamp;
    if (!(step > 0.0)) fail(ErrorCode::domain, "clip timestamps not strictly increasing at frame " + std::to_string(i));
    if (std::abs(step - dt) > 1e-6 * std::max(1.0, dt)) {
      fail(ErrorCode::domain, "clip frame spacing at frame " + std::to_string(i) + " differs from 1/frame_rate_hz");
    }
  }
}

std::vector<double> gaussian_taps(int radius) {
  if (radius <= 0) return {1.0};
  const double sigma = radius / 2.0;
  std::vector<double> taps(2 * static_cast<std::size_t>(radius) + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    double w = std::exp(-(i * i) / (2.0 * sigma * sigma));
    taps[static_cast<std::size_t>(i + radius)] = w;
    sum += w;
  }
  for (double& w : taps) w /= sum;
  return taps;
}

namespace {

// Separable correlation with clamp-to-edge borders.
Frame separable_filter(const Frame& frame, std::span<const double> taps) {
  const int r = static_cast<int>(taps.size() / 2);
  const int h = frame.height, w = frame.width, ch = frame.channels;
  Frame tmp = frame;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < ch; ++c) {
        double acc = 0.0;
        for (int k = -r; k <= r; ++k) {
          int xx = std::clamp(x + k, 0, w - 1);
          acc += taps[static_cast<std::size_t>(k + r)] * frame.at(y, xx, c);
        }
        tmp.at(y, x, c) = acc;
      }
    }
  }
  Frame out = tmp;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < ch; ++c) {
        double acc = 0.0;
        for (int k = -r; k <= r; ++k) {
          int yy = std::clamp(y + k, 0, h - 1);
          acc += taps[static_cast<std::size_t>(k + r)] * tmp.at(yy, x, c);
        }
        out.at(y, x, c) = acc;
      }
    }
  }
  return out;
}

constexpr double kBinomial5[5] = {1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};

}  // namespace

Frame gaussian_blur(const Frame& frame, int radius) {
  if (radius <= 0) return frame;
  auto taps = gaussian_taps(radius);
  return separable_filter(frame, taps);
}

VideoClip denoise(const VideoClip& clip, int radius) {
  if (radius < 0) fail(ErrorCode::config, "denoise radius must be >= 0");
  VideoClip out;
  out.frame_rate_hz = clip.frame_rate_hz;
  out.frames.reserve(clip.frames.size());
  for (const Frame& f : clip.frames) out.frames.push_back(gaussian_blur(f, radius));
  return out;
}

double TemporalBandpass::smoothing_factor(double cutoff_hz, double rate_hz) {
  return 1.0 - std::exp(-2.0 * std::numbers::pi * cutoff_hz / rate_hz);
}

TemporalBandpass::TemporalBandpass(const MagnifyConfig& cfg, std::size_t width)
    : alpha_high_(smoothing_factor(cfg.high_cut_hz, cfg.frame_rate_hz)),
      alpha_low_(smoothing_factor(cfg.low_cut_hz, cfg.frame_rate_hz)),
      low_state_(width, 0.0),
      high_state_(width, 0.0) {}

void TemporalBandpass::step(std::span<const double> in, std::span<double> out) {
  if (in.size() != low_state_.size() || out.size() != low_state_.size()) {
    fail(ErrorCode::shape, "bandpass width " + std::to_string(low_state_.size()) + " but step got " +
                               std::to_string(in.size()));
  }
  if (!primed_) {
    std::copy(in.begin(), in.end(), low_state_.begin());
    std::copy(in.begin(), in.end(), high_state_.begin());
    std::fill(out.begin(), out.end(), 0.0);
    primed_ = true;
    return;
  }
  for (std::size_t i = 0; i < in.size(); ++i) {
    high_state_[i] += alpha_high_ * (in[i] - high_state_[i]);
    low_state_[i] += alpha_low_ * (in[i] - low_state_[i]);
    out[i] = high_state_[i] - low_state_[i];
  }
}

std::vector<double> temporal_bandpass(std::span<const double> signal, const MagnifyConfig& cfg) {
  cfg.validate();
  if (signal.size() < 2) fail(ErrorCode::insufficient_data, "temporal bandpass needs at least 2 samples");
  TemporalBandpass filter(cfg, 1);
  std::vector<double> out(signal.size());
  for (std::size_t i = 0; i < signal.size(); ++i) filter.step(signal.subspan(i, 1), std::span(&out[i], 1));
  return out;
}

Frame pyramid_down(const Frame& frame) {
  Frame blurred = separable_filter(frame, kBinomial5);
  const int h = (frame.height + 1) / 2, w = (frame.width + 1) / 2;
  Frame out = Frame::filled(h, w, 0.0, frame.channels);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < frame.channels; ++c) out.at(y, x, c) = blurred.at(2 * y, 2 * x, c);
  return out;
}

Frame pyramid_up(const Frame& frame, int height, int width) {
  // Zero insertion followed by the binomial kernel scaled by 4.
  Frame sparse = Frame::filled(height, width, 0.0, frame.channels);
  for (int y = 0; y < frame.height && 2 * y < height; ++y)
    for (int x = 0; x < frame.width && 2 * x < width; ++x)
      for (int c = 0; c < frame.channels; ++c) sparse.at(2 * y, 2 * x, c) = 4.0 * frame.at(y, x, c);
  // Zero-padded borders so the inserted samples keep their weight.
  const int ch = frame.channels;
  Frame tmp = Frame::filled(height, width, 0.0, ch);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      for (int c = 0; c < ch; ++c) {
        double acc = 0.0;
        for (int k = -2; k <= 2; ++k) {
          int xx = x + k;
          if (xx >= 0 && xx < width) acc += kBinomial5[k + 2] * sparse.at(y, xx, c);
        }
        tmp.at(y, x, c) = acc;
      }
  Frame out = Frame::filled(height, width, 0.0, ch);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      for (int c = 0; c < ch; ++c) {
        double acc = 0.0;
        for (int k = -2; k <= 2; ++k) {
          int yy = y + k;
          if (yy >= 0 && yy < height) acc += kBinomial5[k + 2] * tmp.at(yy, x, c);
        }
        out.at(y, x, c) = acc;
      }
  return out;
}

LaplacianPyramid build_laplacian_pyramid(const Frame& frame, int levels) {
  if (levels < 1) fail(ErrorCode::config, "pyramid needs at least one level");
  LaplacianPyramid pyr;
  Frame current = frame;
  for (int level = 0; level + 1 < levels && current.height >= 2 && current.width >= 2; ++level) {
    Frame down = pyramid_down(current);
    Frame up = pyramid_up(down, current.height, current.width);
    for (std::size_t i = 0; i < current.data.size(); ++i) current.data[i] -= up.data[i];
    pyr.levels.push_back(std::move(current));
    current = std::move(down);
  }
  pyr.levels.push_back(std::move(current));
  return pyr;
}

Frame reconstruct_laplacian_pyramid(const LaplacianPyramid& pyramid) {
  if (pyramid.levels.empty()) fail(ErrorCode::shape, "empty pyramid");
  Frame current = pyramid.levels.back();
  for (std::size_t i = pyramid.levels.size() - 1; i-- > 0;) {
    const Frame& band = pyramid.levels[i];
    Frame up = pyramid_up(current, band.height, band.width);
    for (std::size_t j = 0; j < up.data.size(); ++j) up.data[j] += band.data[j];
    current = std::move(up);
  }
  return current;
}

VideoClip magnify_clip(const VideoClip& clip, const MagnifyConfig& cfg) {
  cfg.validate();
  if (clip.frames.size() < 2) {
    fail(ErrorCode::insufficient_data, "magnification needs at least 2 frames, got " +
                                           std::to_string(clip.frames.size()));
  }
  VideoClip out;
  out.frame_rate_hz = clip.frame_rate_hz;
  out.frames.reserve(clip.frames.size());

  std::vector<TemporalBandpass> filters;
  std::vector<double> filtered;
  for (const Frame& frame : clip.frames) {
    LaplacianPyramid pyr = build_laplacian_pyramid(frame, cfg.pyramid_levels);
    if (filters.empty()) {
      for (const Frame& level : pyr.levels) filters.emplace_back(cfg, level.data.size());
    }
    for (std::size_t l = 0; l < pyr.levels.size(); ++l) {
      auto& coeffs = pyr.levels[l].data;
      filtered.resize(coeffs.size());
      filters[l].step(coeffs, filtered);
      for (std::size_t i = 0; i < coeffs.size(); ++i) coeffs[i] += cfg.xi * filtered[i];
    }
    Frame result = reconstruct_laplacian_pyramid(pyr);
    result.timestamp = frame.timestamp;
    if (cfg.clamp_output) {
      for (double& v : result.data) v = std::clamp(v, 0.0, 1.0);
    }
    out.frames.push_back(std::move(result));
  }
  return out;
}

}  // namespace nisdl
