#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace nisdl {

/// Elementwise |pred - truth|; length mismatch -> ErrorCode::shape.
std::vector<double> absolute_errors(std::span<const double> pred, std::span<const double> truth);

/// Fractions over [0, .25), [.25, .5), [.5, .75), [.75, 1), [1, inf).
/// Negative input -> ErrorCode::domain.
std::array<double, 5> bin_errors(std::span<const double> errors);

/// Quantile q of sorted data with midpoint interpolation: the average of the
/// order statistics at floor and ceil of q * (n - 1).
double midpoint_quantile(std::span<const double> sorted, double q);

struct Summary {
  double mean = 0.0;
  double median = 0.0;
  std::array<double, 3> quartiles{};  // q25, q50, q75
};

/// Empty input -> ErrorCode::empty_data.
Summary summarize(std::span<const double> errors);

struct FramePrediction {
  std::string frame_id;  // subject/frame index
  double t_pred = 0.0;
  double t_true = 0.0;
};

struct ErrorReport {
  std::string model_id;
  std::size_t n = 0;
  std::vector<double> per_frame_errors;
  std::array<double, 5> bins{};
  double mean = 0.0;
  double median = 0.0;
  std::array<double, 3> quartiles{};
  std::vector<FramePrediction> frames;  // optional, written to CSV

  nlohmann::json to_json() const;
  static ErrorReport from_json(const nlohmann::json& j);
};

ErrorReport make_report(const std::string& model_id, std::vector<FramePrediction> frames);
ErrorReport make_report(const std::string& model_id, std::span<const double> errors);

void write_report(const std::filesystem::path& json_path, const ErrorReport& report);
ErrorReport read_report(const std::filesystem::path& json_path);
/// Columns frame_id, t_pred, t_true, abs_error.
void write_report_csv(const std::filesystem::path& csv_path, const ErrorReport& report);

}  // namespace nisdl
