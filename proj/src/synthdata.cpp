#include "nisdl/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "json.hpp"
#include "nisdl/error.hpp"
#include "nisdl/io.hpp"

namespace nisdl {

namespace {

constexpr double kMinSaturation = 0.02;
constexpr double kMaxSaturation = 0.98;
constexpr int kLatticeCell = 8;

double uniform(std::mt19937_64& rng, const Range& r) {
  return std::uniform_real_distribution<double>(r.lo, r.hi)(rng);
}

// Smoothstep-interpolated lattice noise in [0, 1].
std::vector<double> value_noise(int height, int width, std::mt19937_64& rng) {
  int gh = height / kLatticeCell + 2;
  int gw = width / kLatticeCell + 2;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> lattice(static_cast<std::size_t>(gh) * gw);
  for (double& v : lattice) v = u(rng);
  auto smooth = [](double f) { return f * f * (3.0 - 2.0 * f); };
  std::vector<double> out(static_cast<std::size_t>(height) * width);
  for (int y = 0; y < height; ++y) {
    double fy = static_cast<double>(y) / kLatticeCell;
    int y0 = static_cast<int>(fy);
    double ty = smooth(fy - y0);
    for (int x = 0; x < width; ++x) {
      double fx = static_cast<double>(x) / kLatticeCell;
      int x0 = static_cast<int>(fx);
      double tx = smooth(fx - x0);
      auto at = [&](int yy, int xx) { return lattice[static_cast<std::size_t>(yy) * gw + xx]; };
      double top = at(y0, x0) * (1.0 - tx) + at(y0, x0 + 1) * tx;
      double bottom = at(y0 + 1, x0) * (1.0 - tx) + at(y0 + 1, x0 + 1) * tx;
      out[static_cast<std::size_t>(y) * width + x] = top * (1.0 - ty) + bottom * ty;
    }
  }
  return out;
}

bool inside_roi(const RoiSpec& roi, int y, int x) {
  return x >= roi.origin_x && x < roi.origin_x + roi.side && y >= roi.origin_y && y < roi.origin_y + roi.side;
}

// Zero mean separately inside and outside the ROI so the mean saturation is
// exact both for the full frame and for the crop.
void center_by_region(std::vector<double>& field, int side, const RoiSpec& roi) {
  double sum_in = 0.0, sum_out = 0.0;
  std::size_t n_in = 0, n_out = 0;
  for (int y = 0; y < side; ++y) {
    for (int x = 0; x < side; ++x) {
      double v = field[static_cast<std::size_t>(y) * side + x];
      if (inside_roi(roi, y, x)) {
        sum_in += v;
        ++n_in;
      } else {
        sum_out += v;
        ++n_out;
      }
    }
  }
  double mean_in = n_in ? sum_in / n_in : 0.0;
  double mean_out = n_out ? sum_out / n_out : 0.0;
  for (int y = 0; y < side; ++y) {
    for (int x = 0; x < side; ++x) {
      double& v = field[static_cast<std::size_t>(y) * side + x];
      v -= inside_roi(roi, y, x) ? mean_in : mean_out;
    }
  }
}

struct Texture {
  std::vector<double> saturation;  // zero mean per region, |v| <= 1
  std::vector<double> value;       // multiplicative, around 1
  std::vector<double> hue;         // additive, zero mean
};

Texture make_texture(const SubjectProfile& profile, const SynthDatasetSpec& spec) {
  std::mt19937_64 rng(profile.texture_seed);
  int side = spec.frame_side;
  Texture t;
  t.saturation = value_noise(side, side, rng);
  center_by_region(t.saturation, side, spec.roi);
  t.value = value_noise(side, side, rng);
  for (double& v : t.value) v = 1.0 + 0.15 * (2.0 * v - 1.0);
  t.hue = value_noise(side, side, rng);
  for (double& v : t.hue) v = 0.01 * (v - 0.5);
  return t;
}

Frame render_with(const Texture& tex, const SubjectProfile& profile, const SynthDatasetSpec& spec, double s_target,
                  double hue) {
  int side = spec.frame_side;
  Frame f = Frame::filled(side, side, 0.0);
  double amplitude = spec.texture_contrast * std::min(s_target, 1.0 - s_target);
  for (int y = 0; y < side; ++y) {
    for (int x = 0; x < side; ++x) {
      std::size_t i = static_cast<std::size_t>(y) * side + x;
      double s = s_target + amplitude * tex.saturation[i];
      double v = std::clamp(profile.skin_value * tex.value[i], 1e-3, 1.0);
      Rgb c = hsv_to_rgb(hue + tex.hue[i], s, v);
      f.at(y, x, 0) = c.r;
      f.at(y, x, 1) = c.g;
      f.at(y, x, 2) = c.b;
    }
  }
  return f;
}

std::string fixed(double v) {
  std::ostringstream os;
  os.precision(3);
  os << std::fixed << v;
  return os.str();
}

}  // namespace

std::vector<double> correlated_noise(std::size_t n, double frame_rate_hz, double correlation_s, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  double width = correlation_s * frame_rate_hz;  // kernel sigma in samples
  if (width <= 0.0) {
    std::vector<double> out(n);
    for (double& v : out) v = normal(rng);
    return out;
  }
  auto radius = static_cast<std::size_t>(std::ceil(4.0 * width));
  std::vector<double> taps(2 * radius + 1);
  double norm = 0.0;
  for (std::size_t i = 0; i < taps.size(); ++i) {
    double d = static_cast<double>(i) - static_cast<double>(radius);
    taps[i] = std::exp(-0.5 * d * d / (width * width));
    norm += taps[i] * taps[i];
  }
  for (double& w : taps) w /= std::sqrt(norm);
  std::vector<double> white(n + 2 * radius);
  for (double& v : white) v = normal(rng);
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < taps.size(); ++j) out[i] += taps[j] * white[i + j];
  }
  return out;
}

void SubjectProfile::validate() const {
  if (k_true == 0.0 || !std::isfinite(k_true)) fail(ErrorCode::profile, subject_id + ": k_true must be nonzero");
  if (!(tau_s > 0.0)) fail(ErrorCode::profile, subject_id + ": tau_s must be positive");
  if (!(delta_t > 0.0)) fail(ErrorCode::profile, subject_id + ": delta_t must be positive");
  if (!(skin_value > 0.0 && skin_value <= 1.0)) fail(ErrorCode::profile, subject_id + ": skin_value outside (0, 1]");
}

void SynthDatasetSpec::validate() const {
  if (n_subjects < 2) fail(ErrorCode::config, "synth.n_subjects must be at least 2");
  if (!(duration_s > 0.0)) fail(ErrorCode::config, "synth.duration_s must be positive");
  if (!(frame_rate_hz > 0.0)) fail(ErrorCode::config, "synth.frame_rate_hz must be positive");
  if (!(label_period_s > 0.0)) fail(ErrorCode::config, "synth.label_period_s must be positive");
  if (!(saturation_noise_sigma >= 0.0)) fail(ErrorCode::config, "synth.saturation_noise_sigma must be >= 0");
  if (!(noise_correlation_s >= 0.0)) fail(ErrorCode::config, "synth.noise_correlation_s must be >= 0");
  if (!(trace_noise_c >= 0.0)) fail(ErrorCode::config, "synth.trace_noise_c must be >= 0");
  if (roi.side <= 0 || roi.origin_x < 0 || roi.origin_y < 0 || roi.origin_x + roi.side > frame_side ||
      roi.origin_y + roi.side > frame_side) {
    fail(ErrorCode::config, "synth.roi must lie inside a frame of side " + std::to_string(frame_side));
  }
  if (!(texture_contrast >= 0.0 && texture_contrast <= 1.0)) {
    fail(ErrorCode::config, "synth.texture_contrast must be within [0, 1]");
  }
  if (k_range.lo > k_range.hi || t_base_range.lo > t_base_range.hi || delta_t_range.lo > delta_t_range.hi ||
      tau_range.lo > tau_range.hi || skin_value_range.lo > skin_value_range.hi) {
    fail(ErrorCode::config, "synth ranges must have lo <= hi");
  }
}

std::size_t SynthDatasetSpec::frames_per_subject() const {
  return static_cast<std::size_t>(std::llround(std::floor(duration_s * frame_rate_hz + 1e-9)));
}

std::size_t SynthDatasetSpec::trace_samples() const {
  return static_cast<std::size_t>(std::floor(duration_s / label_period_s + 1e-9)) + 1;
}

double temperature_curve(const SubjectProfile& profile, double t) {
  return profile.t_base + profile.delta_t * std::exp(-t / profile.tau_s);
}

double saturation_at(const SubjectProfile& profile, double t) {
  return (temperature_curve(profile, t) - profile.b_true) / profile.k_true;
}

std::vector<SubjectProfile> sample_profiles(const SynthDatasetSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::vector<SubjectProfile> out;
  out.reserve(static_cast<std::size_t>(spec.n_subjects));
  std::uniform_real_distribution<double> jitter(-spec.intercept_jitter_c, spec.intercept_jitter_c);
  for (int i = 0; i < spec.n_subjects; ++i) {
    SubjectProfile p;
    p.subject_id = "s" + std::string(i < 10 ? "0" : "") + std::to_string(i);
    bool found = false;
    for (int outer = 0; outer < 1000 && !found; ++outer) {
      p.k_true = uniform(rng, spec.k_range);
      for (int inner = 0; inner < 200; ++inner) {
        p.t_base = uniform(rng, spec.t_base_range);
        p.delta_t = uniform(rng, spec.delta_t_range);
        p.tau_s = uniform(rng, spec.tau_range);
        p.b_true = spec.reference_temp_c - p.k_true * spec.reference_saturation + jitter(rng);
        double s_start = saturation_at(p, 0.0);
        double s_end = saturation_at(p, spec.duration_s);
        double lo = std::min(s_start, s_end), hi = std::max(s_start, s_end);
        if (lo >= kMinSaturation && hi <= kMaxSaturation) {
          found = true;
          break;
        }
      }
    }
    if (!found) fail(ErrorCode::profile, "no profile for " + p.subject_id + " keeps saturation within [0.02, 0.98]");
    p.skin_value = uniform(rng, spec.skin_value_range);
    p.texture_seed = rng();
    out.push_back(p);
  }
  return out;
}

Frame render_frame(const SubjectProfile& profile, const SynthDatasetSpec& spec, double target_saturation,
                   double hue) {
  return render_with(make_texture(profile, spec), profile, spec, target_saturation, hue);
}

RenderedSubject render_clip(const SubjectProfile& profile, const SynthDatasetSpec& spec) {
  profile.validate();
  spec.validate();
  std::size_t n = spec.frames_per_subject();
  for (std::size_t i = 0; i < n; ++i) {
    double t = static_cast<double>(i) / spec.frame_rate_hz;
    double s = saturation_at(profile, t);
    if (!(s >= kMinSaturation && s <= kMaxSaturation)) {
      fail(ErrorCode::profile, profile.subject_id + ": saturation " + fixed(s) + " at t = " + fixed(t) +
                                   " s leaves [0.02, 0.98]");
    }
  }

  Texture tex = make_texture(profile, spec);
  std::mt19937_64 rng(profile.texture_seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<double> sat_noise = correlated_noise(n, spec.frame_rate_hz, spec.noise_correlation_s, rng);
  std::vector<double> tint_noise = correlated_noise(n, spec.frame_rate_hz, spec.noise_correlation_s, rng);

  RenderedSubject out;
  out.clip.frame_rate_hz = spec.frame_rate_hz;
  out.clip.frames.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    double t = static_cast<double>(i) / spec.frame_rate_hz;
    double s = saturation_at(profile, t) + spec.saturation_noise_sigma * sat_noise[i];
    s = std::clamp(s, 0.0, 1.0);
    double hue = spec.base_hue + spec.tint_per_degree * (temperature_curve(profile, t) - spec.reference_temp_c) +
                 spec.tint_noise * tint_noise[i];
    Frame f = render_with(tex, profile, spec, s, hue);
    f.timestamp = t;
    out.clip.frames.push_back(std::move(f));
  }

  std::uniform_real_distribution<double> trace_noise(-spec.trace_noise_c, spec.trace_noise_c);
  std::size_t m = spec.trace_samples();
  out.trace.samples.reserve(m);
  for (std::size_t j = 0; j < m; ++j) {
    double t = static_cast<double>(j) * spec.label_period_s;
    double noise = spec.trace_noise_c > 0.0 ? trace_noise(rng) : 0.0;
    out.trace.samples.push_back({t, temperature_curve(profile, t) + noise});
  }
  return out;
}

void write_subject(const std::filesystem::path& subject_dir, const SubjectProfile& profile,
                   const SynthDatasetSpec& spec, const RenderedSubject& rendered) {
  ensure_directory(subject_dir);
  save_clip(subject_dir, rendered.clip);
  write_trace_csv(subject_dir / "trace.csv", rendered.trace);

  nlohmann::json truth;
  truth["subject_id"] = profile.subject_id;
  truth["k_true"] = profile.k_true;
  truth["b_true"] = profile.b_true;
  truth["t_base"] = profile.t_base;
  truth["delta_t"] = profile.delta_t;
  truth["tau_s"] = profile.tau_s;
  truth["skin_value"] = profile.skin_value;
  truth["texture_seed"] = profile.texture_seed;
  nlohmann::json dense = nlohmann::json::array();
  for (const Frame& f : rendered.clip.frames) {
    dense.push_back({{"t", f.timestamp}, {"temp_c", temperature_curve(profile, f.timestamp)}});
  }
  truth["dense"] = std::move(dense);
  truth["roi"] = {{"origin_x", spec.roi.origin_x}, {"origin_y", spec.roi.origin_y}, {"side", spec.roi.side}};
  std::ofstream os(subject_dir / "truth.json");
  if (!os) fail(ErrorCode::io, "cannot write " + (subject_dir / "truth.json").string());
  os << truth.dump(1) << '\n';
}

}  // namespace nisdl
