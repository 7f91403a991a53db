#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>

namespace nisdl {

/// Per-subject saturation-temperature line T = k * S + b. The slope k is the
/// skin sensitivity index.
struct SsiRecord {
  std::string subject_id;
  double k = 0.0;
  double b = 0.0;
  double residual_rmse = 0.0;
  std::size_t n_points = 0;
};

struct SaturationTemperature {
  double saturation = 0.0;
  double temperature = 0.0;
};

/// Closed-form ordinary least squares on centered data.
/// Throws insufficient_data for < 2 pairs, degenerate_design when every
/// saturation is identical.
SsiRecord fit_ssi(std::span<const SaturationTemperature> pairs, std::string subject_id = {});

inline double predict_linear(const SsiRecord& record, double saturation) {
  return record.k * saturation + record.b;
}

/// Leading ceil(fraction * n) pairs (at least 2 when available).
std::span<const SaturationTemperature> calibration_prefix(std::span<const SaturationTemperature> pairs,
                                                          double fraction);

/// Each subject stores the fit over all its labeled frames plus the fit over
/// its calibration prefix (what an unseen subject would provide).
struct SubjectSsi {
  SsiRecord full;
  SsiRecord calibration;
};

using SsiTable = std::map<std::string, SubjectSsi>;

void write_ssi_table(const std::filesystem::path& path, const SsiTable& table, double calibration_fraction);
SsiTable read_ssi_table(const std::filesystem::path& path);

}  // namespace nisdl
