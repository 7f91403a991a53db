#pragma once

#include <filesystem>
#include <vector>

namespace nisdl {

struct TemperatureSample {
  double time_s = 0.0;
  double temp_c = 0.0;
};

/// Sparse contact-sensor readings.
struct TemperatureTrace {
  std::vector<TemperatureSample> samples;
  double source_uncertainty = 0.125;

  static constexpr double kMinPlausibleC = 20.0;
  static constexpr double kMaxPlausibleC = 45.0;

  // Throws ErrorCode::domain on unordered times or implausible temperatures.
  void validate() const;
};

/// Labels on a regular grid anchored at the first sample time.
struct DenseLabels {
  std::vector<TemperatureSample> grid;
  double window_s = 5.0;

  double start() const { return grid.front().time_s; }
  double end() const { return grid.back().time_s; }
};

constexpr double kLabelWindowSeconds = 5.0;

DenseLabels interpolate(const TemperatureTrace& trace, double window_s = kLabelWindowSeconds);

/// Piecewise-constant lookup: the grid value at the start of the window
/// containing t. Throws ErrorCode::out_of_range outside [start, end].
double label_frame(const DenseLabels& labels, double t);

TemperatureTrace read_trace_csv(const std::filesystem::path& path);
void write_trace_csv(const std::filesystem::path& path, const TemperatureTrace& trace);
void write_labels_csv(const std::filesystem::path& path, const DenseLabels& labels);

}  // namespace nisdl
