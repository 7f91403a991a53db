#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace nisdl {

/// Interleaved raster image with values normalized to [0, 1].
/// Raw camera frames are RGB (channels == 3); the pyramid code reuses the
/// type for intermediate planes with the same layout.
struct Frame {
  int height = 0;
  int width = 0;
  int channels = 3;
  std::vector<double> data;
  double timestamp = 0.0;  // seconds from clip start

  static Frame filled(int height, int width, double value = 0.0, int channels = 3);

  double& at(int y, int x, int c) {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  double at(int y, int x, int c) const {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  std::size_t pixel_count() const {
    return static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
  }

  // Throws ErrorCode::domain on bad geometry or values outside [0, 1].
  void validate() const;
};

struct RoiSpec {
  int origin_x = 0;
  int origin_y = 0;
  int side = 150;
};

/// Single-channel height x width map of HSV saturation values.
struct SaturationMap {
  int height = 0;
  int width = 0;
  std::vector<double> values;
};

/// HSV saturation of one pixel: (max - min) / max, 0 for black.
inline double hsv_saturation(double r, double g, double b) {
  double hi = r > g ? r : g;
  hi = hi > b ? hi : b;
  if (hi <= 0.0) return 0.0;
  double lo = r < g ? r : g;
  lo = lo < b ? lo : b;
  return (hi - lo) / hi;
}

struct Rgb {
  double r, g, b;
};

/// hue in [0, 1) (fraction of a turn), saturation and value in [0, 1].
Rgb hsv_to_rgb(double hue, double saturation, double value);

SaturationMap rgb_to_hsv_saturation(const Frame& frame);

// Throws ErrorCode::bounds naming the violating coordinate.
Frame crop_roi(const Frame& frame, const RoiSpec& roi);

double mean_saturation(const Frame& roi_frame);

Frame frame_from_rgb8(std::span<const std::uint8_t> rgb, int height, int width);
std::vector<std::uint8_t> frame_to_rgb8(const Frame& frame);

}  // namespace nisdl
