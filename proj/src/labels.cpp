#include "nisdl/labels.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include "nisdl/error.hpp"

namespace nisdl {

void TemperatureTrace::validate() const {
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    if (!std::isfinite(s.time_s) || !std::isfinite(s.temp_c)) {
      fail(ErrorCode::domain, "trace sample " + std::to_string(i) + " is not finite");
    }
    if (s.temp_c < kMinPlausibleC || s.temp_c > kMaxPlausibleC) {
      fail(ErrorCode::domain, "trace sample " + std::to_string(i) + " temperature " + std::to_string(s.temp_c) +
                                  " outside plausibility band [20, 45] C");
    }
    if (i > 0 && !(s.time_s > samples[i - 1].time_s)) {
      fail(ErrorCode::domain, "trace times not strictly increasing at sample " + std::to_string(i));
    }
  }
}

DenseLabels interpolate(const TemperatureTrace& trace, double window_s) {
  if (trace.samples.size() < 2) {
    fail(ErrorCode::insufficient_data, "interpolation needs at least 2 samples, got " +
                                           std::to_string(trace.samples.size()));
  }
  if (!(window_s > 0.0)) fail(ErrorCode::config, "label window must be positive");
  trace.validate();

  DenseLabels labels;
  labels.window_s = window_s;
  const auto& s = trace.samples;
  const double t0 = s.front().time_s;
  const double t_end = s.back().time_s;
  // Small slack so float accumulation never drops the final grid point.
  const auto count = static_cast<std::size_t>(std::floor((t_end - t0) / window_s + 1e-9)) + 1;
  labels.grid.reserve(count);

  std::size_t seg = 0;
  for (std::size_t j = 0; j < count; ++j) {
    const double t = t0 + static_cast<double>(j) * window_s;
    while (seg + 2 < s.size() && t >= s[seg + 1].time_s) ++seg;
    const auto& a = s[seg];
    const auto& b = s[seg + 1];
    double value;
    if (t == a.time_s) {
      value = a.temp_c;
    } else if (t == b.time_s) {
      value = b.temp_c;
    } else {
      value = a.temp_c + (b.temp_c - a.temp_c) * ((t - a.time_s) / (b.time_s - a.time_s));
    }
    labels.grid.push_back({t, value});
  }
  return labels;
}

double label_frame(const DenseLabels& labels, double t) {
  if (labels.grid.empty()) fail(ErrorCode::empty_data, "empty label grid");
  if (!(t >= labels.start() && t <= labels.end())) {
    std::ostringstream msg;
    msg << "time " << t << " s outside labeled span [" << labels.start() << ", " << labels.end() << "]";
    fail(ErrorCode::out_of_range, msg.str());
  }
  auto idx = static_cast<std::size_t>(std::floor((t - labels.start()) / labels.window_s));
  if (idx >= labels.grid.size()) idx = labels.grid.size() - 1;
  return labels.grid[idx].temp_c;
}

namespace {

void write_pairs(const std::filesystem::path& path, const std::vector<TemperatureSample>& rows) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::io, "cannot write " + path.string());
  out << "time_s,temp_c\n" << std::setprecision(17);
  for (const auto& r : rows) out << r.time_s << ',' << r.temp_c << '\n';
  if (!out) fail(ErrorCode::io, "failed writing " + path.string());
}

}  // namespace

TemperatureTrace read_trace_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::io, path.string() + " is empty");
  if (line.rfind("time_s,temp_c", 0) != 0) {
    fail(ErrorCode::io, path.string() + ": expected header 'time_s,temp_c'");
  }
  TemperatureTrace trace;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    auto comma = line.find(',');
    if (comma == std::string::npos) fail(ErrorCode::io, path.string() + ":" + std::to_string(lineno) + ": missing comma");
    try {
      trace.samples.push_back({std::stod(line.substr(0, comma)), std::stod(line.substr(comma + 1))});
    } catch (const std::exception&) {
      fail(ErrorCode::io, path.string() + ":" + std::to_string(lineno) + ": not a number");
    }
  }
  trace.validate();
  return trace;
}

void write_trace_csv(const std::filesystem::path& path, const TemperatureTrace& trace) {
  write_pairs(path, trace.samples);
}

void write_labels_csv(const std::filesystem::path& path, const DenseLabels& labels) {
  write_pairs(path, labels.grid);
}

}  // namespace nisdl
