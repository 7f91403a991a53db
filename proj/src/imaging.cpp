#include "nisdl/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "nisdl/error.hpp"

namespace nisdl {

Frame Frame::filled(int height, int width, double value, int channels) {
  Frame f;
  f.height = height;
  f.width = width;
  f.channels = channels;
  f.data.assign(static_cast<std::size_t>(height) * width * channels, value);
  return f;
}

void Frame::validate() const {
  if (height <= 0 || width <= 0 || channels <= 0) {
    fail(ErrorCode::domain, "frame has empty geometry " + std::to_string(height) + "x" +
                                std::to_string(width) + "x" + std::to_string(channels));
  }
  if (data.size() != pixel_count() * static_cast<std::size_t>(channels)) {
    fail(ErrorCode::domain, "frame data length does not match its geometry");
  }
  for (double v : data) {
    if (!(v >= 0.0 && v <= 1.0)) fail(ErrorCode::domain, "frame value outside [0, 1]");
  }
}

Rgb hsv_to_rgb(double hue, double saturation, double value) {
  double h = hue - std::floor(hue);
  double c = value * saturation;
  double lo = value - c;
  double sector = h * 6.0;
  int i = static_cast<int>(sector) % 6;
  double frac = sector - std::floor(sector);
  double rising = lo + c * frac;
  double falling = value - c * frac;
  switch (i) {
    case 0: return {value, rising, lo};
    case 1: return {falling, value, lo};
    case 2: return {lo, value, rising};
    case 3: return {lo, falling, value};
    case 4: return {rising, lo, value};
    default: return {value, lo, falling};
  }
}

SaturationMap rgb_to_hsv_saturation(const Frame& frame) {
  SaturationMap out{frame.height, frame.width, {}};
  out.values.resize(frame.pixel_count());
  const double* p = frame.data.data();
  for (std::size_t i = 0; i < out.values.size(); ++i, p += frame.channels) {
    out.values[i] = hsv_saturation(p[0], p[1], p[2]);
  }
  return out;
}

Frame crop_roi(const Frame& frame, const RoiSpec& roi) {
  if (roi.side <= 0) fail(ErrorCode::bounds, "ROI side must be positive, got " + std::to_string(roi.side));
  if (roi.origin_x < 0 || roi.origin_x + roi.side > frame.width) {
    fail(ErrorCode::bounds, "ROI x range [" + std::to_string(roi.origin_x) + ", " +
                                std::to_string(roi.origin_x + roi.side) + ") exceeds frame width " +
                                std::to_string(frame.width));
  }
  if (roi.origin_y < 0 || roi.origin_y + roi.side > frame.height) {
    fail(ErrorCode::bounds, "ROI y range [" + std::to_string(roi.origin_y) + ", " +
                                std::to_string(roi.origin_y + roi.side) + ") exceeds frame height " +
                                std::to_string(frame.height));
  }
  Frame out = Frame::filled(roi.side, roi.side, 0.0, frame.channels);
  out.timestamp = frame.timestamp;
  const std::size_t row = static_cast<std::size_t>(roi.side) * frame.channels;
  for (int i = 0; i < roi.side; ++i) {
    const double* src = &frame.data[(static_cast<std::size_t>(roi.origin_y + i) * frame.width + roi.origin_x) *
                                    frame.channels];
    std::copy(src, src + row, out.data.begin() + static_cast<std::ptrdiff_t>(i * row));
  }
  return out;
}

double mean_saturation(const Frame& roi_frame) {
  const std::size_t n = roi_frame.pixel_count();
  if (n == 0) return 0.0;
  double sum = 0.0;
  const double* p = roi_frame.data.data();
  for (std::size_t i = 0; i < n; ++i, p += roi_frame.channels) sum += hsv_saturation(p[0], p[1], p[2]);
  return sum / static_cast<double>(n);
}

Frame frame_from_rgb8(std::span<const std::uint8_t> rgb, int height, int width) {
  if (rgb.size() != static_cast<std::size_t>(height) * width * 3) {
    fail(ErrorCode::shape, "RGB8 buffer length " + std::to_string(rgb.size()) + " does not match " +
                               std::to_string(height) + "x" + std::to_string(width) + "x3");
  }
  Frame f = Frame::filled(height, width);
  for (std::size_t i = 0; i < rgb.size(); ++i) f.data[i] = rgb[i] / 255.0;
  return f;
}

std::vector<std::uint8_t> frame_to_rgb8(const Frame& frame) {
  std::vector<std::uint8_t> out(frame.data.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    double v = std::clamp(frame.data[i], 0.0, 1.0);
    out[i] = static_cast<std::uint8_t>(std::lround(v * 255.0));
  }
  return out;
}

}  // namespace nisdl
