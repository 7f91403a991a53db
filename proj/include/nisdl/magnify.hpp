#pragma once

#include <span>
#include <vector>

#include "nisdl/imaging.hpp"

namespace nisdl {

struct MagnifyConfig {
  double xi = 10.0;          // amplification coefficient
  int pyramid_levels = 3;    // total levels including the low-pass residual
  double low_cut_hz = 0.05;
  double high_cut_hz = 1.0;
  double frame_rate_hz = 30.0;
  int denoise_radius = 1;
  bool clamp_output = true;

  // Throws ErrorCode::config when 0 < low < high < rate/2 or the other
  // field ranges are violated.
  void validate() const;
};

struct VideoClip {
  std::vector<Frame> frames;
  double frame_rate_hz = 30.0;

  // Timestamps strictly increasing at 1/frame_rate_hz spacing.
  void validate() const;
};

/// Separable Gaussian blur, sigma = radius / 2, kernel truncated at
/// +/- radius, clamp-to-edge borders. Radius 0 returns the frame unchanged.
Frame gaussian_blur(const Frame& frame, int radius);

/// Normalized 1-D taps used by gaussian_blur (length 2 * radius + 1).
std::vector<double> gaussian_taps(int radius);

VideoClip denoise(const VideoClip& clip, int radius);

/// Difference of two first-order IIR low-pass filters (cutoffs high_cut_hz
/// and low_cut_hz). Both filter states start at the first sample, so a
/// constant input maps to exactly zero.
class TemporalBandpass {
 public:
  TemporalBandpass(const MagnifyConfig& cfg, std::size_t width);

  /// Filters one time step of `width` independent channels.
  void step(std::span<const double> in, std::span<double> out);

  static double smoothing_factor(double cutoff_hz, double rate_hz);

 private:
  double alpha_high_;
  double alpha_low_;
  bool primed_ = false;
  std::vector<double> low_state_;
  std::vector<double> high_state_;
};

std::vector<double> temporal_bandpass(std::span<const double> signal, const MagnifyConfig& cfg);

/// Laplacian decomposition: levels[0..n-2] are band-pass images at
/// decreasing resolution, levels[n-1] is the low-pass residual.
struct LaplacianPyramid {
  std::vector<Frame> levels;
};

Frame pyramid_down(const Frame& frame);
Frame pyramid_up(const Frame& frame, int height, int width);
LaplacianPyramid build_laplacian_pyramid(const Frame& frame, int levels);
Frame reconstruct_laplacian_pyramid(const LaplacianPyramid& pyramid);

/// Per pyramid coefficient: out = in + xi * bandpass(in), then reconstruct
/// and (optionally) clamp to [0, 1]. Does not denoise; callers run denoise
/// first when the raw footage needs it.
VideoClip magnify_clip(const VideoClip& clip, const MagnifyConfig& cfg);

}  // namespace nisdl
