#include "nisdl/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "nisdl/error.hpp"

namespace nisdl {

std::vector<double> absolute_errors(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size()) {
    fail(ErrorCode::shape, "prediction length " + std::to_string(pred.size()) + " != truth length " +
                               std::to_string(truth.size()));
  }
  if (pred.empty()) fail(ErrorCode::empty_data, "no predictions");
  std::vector<double> out(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) out[i] = std::abs(pred[i] - truth[i]);
  return out;
}

std::array<double, 5> bin_errors(std::span<const double> errors) {
  if (errors.empty()) fail(ErrorCode::empty_data, "no errors to bin");
  std::array<std::size_t, 5> counts{};
  for (double e : errors) {
    if (!(e >= 0.0)) fail(ErrorCode::domain, "absolute error must be non-negative");
    std::size_t bin = e < 0.25 ? 0 : e < 0.5 ? 1 : e < 0.75 ? 2 : e < 1.0 ? 3 : 4;
    ++counts[bin];
  }
  std::array<double, 5> out{};
  double n = static_cast<double>(errors.size());
  for (std::size_t i = 0; i < 5; ++i) out[i] = static_cast<double>(counts[i]) / n;
  return out;
}

double midpoint_quantile(std::span<const double> sorted, double q) {
  if (sorted.empty()) fail(ErrorCode::empty_data, "quantile of empty data");
  double h = q * static_cast<double>(sorted.size() - 1);
  auto lo = static_cast<std::size_t>(std::floor(h));
  auto hi = static_cast<std::size_t>(std::ceil(h));
  return 0.5 * (sorted[lo] + sorted[hi]);
}

Summary summarize(std::span<const double> errors) {
  if (errors.empty()) fail(ErrorCode::empty_data, "cannot summarize an empty error list");
  std::vector<double> sorted(errors.begin(), errors.end());
  std::sort(sorted.begin(), sorted.end());
  Summary s;
  double sum = 0.0;
  for (double e : errors) sum += e;
  s.mean = sum / static_cast<double>(errors.size());
  s.quartiles = {midpoint_quantile(sorted, 0.25), midpoint_quantile(sorted, 0.5), midpoint_quantile(sorted, 0.75)};
  s.median = s.quartiles[1];
  return s;
}

ErrorReport make_report(const std::string& model_id, std::span<const double> errors) {
  ErrorReport r;
  r.model_id = model_id;
  r.per_frame_errors.assign(errors.begin(), errors.end());
  r.n = errors.size();
  r.bins = bin_errors(errors);
  Summary s = summarize(errors);
  r.mean = s.mean;
  r.median = s.median;
  r.quartiles = s.quartiles;
  return r;
}

ErrorReport make_report(const std::string& model_id, std::vector<FramePrediction> frames) {
  std::vector<double> pred, truth;
  for (const auto& f : frames) {
    pred.push_back(f.t_pred);
    truth.push_back(f.t_true);
  }
  ErrorReport r = make_report(model_id, absolute_errors(pred, truth));
  r.frames = std::move(frames);
  return r;
}

nlohmann::json ErrorReport::to_json() const {
  return {{"model_id", model_id}, {"n", n},           {"mean", mean},
          {"median", median},     {"quartiles", quartiles}, {"bins", bins},
          {"bin_edges", {0.0, 0.25, 0.5, 0.75, 1.0}},       {"per_frame_errors", per_frame_errors}};
}

ErrorReport ErrorReport::from_json(const nlohmann::json& j) {
  ErrorReport r;
  try {
    r.model_id = j.at("model_id").get<std::string>();
    r.n = j.at("n").get<std::size_t>();
    r.mean = j.at("mean").get<double>();
    r.median = j.at("median").get<double>();
    r.quartiles = j.at("quartiles").get<std::array<double, 3>>();
    r.bins = j.at("bins").get<std::array<double, 5>>();
    r.per_frame_errors = j.at("per_frame_errors").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::config, std::string("malformed report: ") + e.what());
  }
  if (r.per_frame_errors.size() != r.n) fail(ErrorCode::config, "report n does not match its error list");
  return r;
}

void write_report(const std::filesystem::path& json_path, const ErrorReport& report) {
  std::ofstream os(json_path);
  if (!os) fail(ErrorCode::io, "cannot write " + json_path.string());
  os << report.to_json().dump(1) << '\n';
}

ErrorReport read_report(const std::filesystem::path& json_path) {
  std::ifstream is(json_path);
  if (!is) fail(ErrorCode::io, "cannot open report " + json_path.string());
  try {
    return ErrorReport::from_json(nlohmann::json::parse(is));
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::config, json_path.string() + ": " + e.what());
  }
}

void write_report_csv(const std::filesystem::path& csv_path, const ErrorReport& report) {
  std::ofstream os(csv_path);
  if (!os) fail(ErrorCode::io, "cannot write " + csv_path.string());
  os.precision(10);
  os << "frame_id,t_pred,t_true,abs_error\n";
  for (std::size_t i = 0; i < report.frames.size(); ++i) {
    const auto& f = report.frames[i];
    os << f.frame_id << ',' << f.t_pred << ',' << f.t_true << ',' << report.per_frame_errors[i] << '\n';
  }
}

}  // namespace nisdl
