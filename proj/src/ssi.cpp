#include "nisdl/ssi.hpp"

#include <cmath>
#include <fstream>

#include "json.hpp"
#include "nisdl/error.hpp"

namespace nisdl {

SsiRecord fit_ssi(std::span<const SaturationTemperature> pairs, std::string subject_id) {
  if (pairs.size() < 2) {
    fail(ErrorCode::insufficient_data, "SSI fit needs at least 2 pairs, got " + std::to_string(pairs.size()));
  }
  const double n = static_cast<double>(pairs.size());
  bool varied = false;
  double s_mean = 0.0, t_mean = 0.0;
  for (const auto& p : pairs) {
    s_mean += p.saturation;
    t_mean += p.temperature;
    varied = varied || p.saturation != pairs.front().saturation;
  }
  if (!varied) fail(ErrorCode::degenerate_design, "SSI fit: all saturations identical");
  s_mean /= n;
  t_mean /= n;

  double sxx = 0.0, sxy = 0.0;
  for (const auto& p : pairs) {
    const double ds = p.saturation - s_mean;
    sxx += ds * ds;
    sxy += ds * (p.temperature - t_mean);
  }
  if (!(sxx > 0.0)) fail(ErrorCode::degenerate_design, "SSI fit: zero saturation variance");

  SsiRecord rec;
  rec.subject_id = std::move(subject_id);
  rec.k = sxy / sxx;
  rec.b = t_mean - rec.k * s_mean;
  rec.n_points = pairs.size();
  double sse = 0.0;
  for (const auto& p : pairs) {
    const double r = p.temperature - predict_linear(rec, p.saturation);
    sse += r * r;
  }
  rec.residual_rmse = std::sqrt(sse / n);
  return rec;
}

std::span<const SaturationTemperature> calibration_prefix(std::span<const SaturationTemperature> pairs,
                                                          double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    fail(ErrorCode::config, "ssi.calibration_fraction must be in (0, 1], got " + std::to_string(fraction));
  }
  auto count = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(pairs.size()) - 1e-9));
  count = std::min(pairs.size(), std::max<std::size_t>(count, 2));
  return pairs.first(count);
}

namespace {

nlohmann::json record_json(const SsiRecord& r) {
  return {{"k", r.k}, {"b", r.b}, {"residual_rmse", r.residual_rmse}, {"n_points", r.n_points}};
}

SsiRecord record_from(const std::string& id, const nlohmann::json& j) {
  SsiRecord r;
  r.subject_id = id;
  r.k = j.at("k").get<double>();
  r.b = j.at("b").get<double>();
  r.residual_rmse = j.at("residual_rmse").get<double>();
  r.n_points = j.at("n_points").get<std::size_t>();
  return r;
}

}  // namespace

void write_ssi_table(const std::filesystem::path& path, const SsiTable& table, double calibration_fraction) {
  nlohmann::json subjects = nlohmann::json::object();
  for (const auto& [id, rec] : table) {
    nlohmann::json entry = record_json(rec.full);
    entry["calibration"] = record_json(rec.calibration);
    subjects[id] = entry;
  }
  nlohmann::json doc = {{"calibration_fraction", calibration_fraction}, {"subjects", subjects}};
  std::ofstream out(path);
  if (!out) fail(ErrorCode::io, "cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

SsiTable read_ssi_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot open " + path.string());
  SsiTable table;
  try {
    auto doc = nlohmann::json::parse(in);
    for (const auto& [id, entry] : doc.at("subjects").items()) {
      table[id] = {record_from(id, entry), record_from(id, entry.at("calibration"))};
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::io, path.string() + ": " + e.what());
  }
  return table;
}

}  // namespace nisdl
