#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "nisdl/imaging.hpp"
#include "nisdl/labels.hpp"
#include "nisdl/magnify.hpp"

namespace nisdl {

struct SubjectProfile {
  std::string subject_id;
  double k_true = 8.0;    // C per unit saturation
  double b_true = 30.0;   // C
  double t_base = 33.0;   // C, asymptotic skin temperature
  double delta_t = 3.0;   // C, post-stimulus elevation at t = 0
  double tau_s = 800.0;   // s, recovery constant
  double skin_value = 0.7;  // HSV value (brightness) of the skin tone
  std::uint64_t texture_seed = 0;

  // k != 0, tau > 0, delta > 0; throws ErrorCode::profile.
  void validate() const;
};

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

/// Simulated acquisition session. Saturation relates to temperature through
/// each subject's line T = k S + b. Lines pass near a shared reference point
/// (reference_saturation, reference_temp_c), offset by a small per-subject
/// intercept jitter. Skin hue drifts toward red linearly with temperature at a
/// rate common to every subject (tint_per_degree), with per-frame tint noise.
struct SynthDatasetSpec {
  int n_subjects = 8;
  double duration_s = 3000.0;
  double frame_rate_hz = 0.4;
  int frame_side = 40;
  RoiSpec roi{4, 4, 32};
  double saturation_noise_sigma = 0.02;
  // Per-frame noise is Gaussian-smoothed white noise with this kernel width
  // (seconds), rescaled so each frame's marginal std stays exact. 0 = white.
  double noise_correlation_s = 0.0;
  double label_period_s = 60.0;
  double trace_noise_c = 0.125;  // uniform +/- bound
  std::uint64_t seed = 7;

  Range k_range{4.0, 12.0};
  Range t_base_range{32.0, 34.0};
  Range delta_t_range{2.0, 4.0};
  Range tau_range{400.0, 1200.0};
  Range skin_value_range{0.55, 0.85};
  double reference_temp_c = 33.5;
  double reference_saturation = 0.4;
  double intercept_jitter_c = 0.1;

  double base_hue = 0.03;          // fraction of a turn (about 11 degrees)
  double tint_per_degree = 0.01;   // hue shift per C above reference_temp_c
  double tint_noise = 0.003;       // per-frame hue noise, std dev (same smoothing)
  double texture_contrast = 0.5;   // saturation modulation relative to headroom

  // n_subjects >= 2 and positive rates/durations; throws ErrorCode::config.
  void validate() const;
  std::size_t frames_per_subject() const;
  std::size_t trace_samples() const;
};

/// T(t) = t_base + delta_t * exp(-t / tau_s)
double temperature_curve(const SubjectProfile& profile, double t);

/// Saturation implied by the subject's line at time t (noise free).
double saturation_at(const SubjectProfile& profile, double t);

/// Seeded profiles whose saturation stays within [0.02, 0.98] over the session.
std::vector<SubjectProfile> sample_profiles(const SynthDatasetSpec& spec);

struct RenderedSubject {
  VideoClip clip;
  TemperatureTrace trace;
};

/// n samples of unit-variance noise smoothed over correlation_s seconds.
std::vector<double> correlated_noise(std::size_t n, double frame_rate_hz, double correlation_s, std::mt19937_64& rng);

/// Renders every frame and samples the contact-sensor trace. Throws
/// ErrorCode::profile naming the first time at which the implied saturation
/// leaves [0.02, 0.98].
RenderedSubject render_clip(const SubjectProfile& profile, const SynthDatasetSpec& spec);

/// Frame whose mean HSV saturation equals target_saturation analytically.
Frame render_frame(const SubjectProfile& profile, const SynthDatasetSpec& spec, double target_saturation,
                   double hue);

/// Writes subject_dir/{frames/, clip.json, trace.csv, truth.json}.
void write_subject(const std::filesystem::path& subject_dir, const SubjectProfile& profile,
                   const SynthDatasetSpec& spec, const RenderedSubject& rendered);

}  // namespace nisdl
