#include "nisdl/config.hpp"

#include <algorithm>
#include <exception>
#include <fstream>
#include <set>
#include <type_traits>

#include "nisdl/error.hpp"

namespace nisdl {

namespace {

using nlohmann::json;

// Reads the keys of one object, rejecting anything not claimed.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(ErrorCode::config, "config key " + label() + " must be an object");
  }
  ~Section() noexcept(false) {
    if (std::uncaught_exceptions()) return;
    for (const auto& [key, value] : j_.items()) {
      if (!claimed_.count(key)) fail(ErrorCode::config, "unknown config key " + dotted(key));
    }
  }

  template <typename T>
  void get(const char* key, T& dst) {
    claimed_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!it->is_boolean()) throw std::invalid_argument("expected boolean");
      } else if constexpr (std::is_integral_v<T>) {
        if (!it->is_number_integer()) throw std::invalid_argument("expected integer");
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!it->is_number()) throw std::invalid_argument("expected number");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!it->is_string()) throw std::invalid_argument("expected string");
      }
      dst = it->template get<T>();
    } catch (const std::exception& e) {
      fail(ErrorCode::config, "config key " + dotted(key) + ": " + e.what());
    }
  }

  const json* child(const char* key) {
    claimed_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void ignore(const char* key) { claimed_.insert(key); }
  std::string dotted(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  std::string label() const { return path_.empty() ? "<root>" : path_; }
  const json& j_;
  std::string path_;
  std::set<std::string> claimed_;
};

void read_range(Section& s, const char* key, Range& r) {
  const json* j = s.child(key);
  if (!j) return;
  if (!j->is_array() || j->size() != 2 || !(*j)[0].is_number() || !(*j)[1].is_number()) {
    fail(ErrorCode::config, "config key " + s.dotted(key) + ": expected [lo, hi]");
  }
  r.lo = (*j)[0].get<double>();
  r.hi = (*j)[1].get<double>();
}

void read_int_list(Section& s, const char* key, std::vector<int>& out) {
  const json* j = s.child(key);
  if (!j) return;
  if (!j->is_array()) fail(ErrorCode::config, "config key " + s.dotted(key) + ": expected an integer list");
  std::vector<int> v;
  for (const auto& e : *j) {
    if (!e.is_number_integer()) fail(ErrorCode::config, "config key " + s.dotted(key) + ": expected integers");
    v.push_back(e.get<int>());
  }
  out = std::move(v);
}

void merge_synth(SynthDatasetSpec& spec, const json& j, const std::string& path) {
  Section s(j, path);
  s.get("n_subjects", spec.n_subjects);
  s.get("duration_s", spec.duration_s);
  s.get("frame_rate_hz", spec.frame_rate_hz);
  s.get("frame_side", spec.frame_side);
  if (const json* roi = s.child("roi")) {
    Section r(*roi, s.dotted("roi"));
    r.get("origin_x", spec.roi.origin_x);
    r.get("origin_y", spec.roi.origin_y);
    r.get("side", spec.roi.side);
  }
  s.get("saturation_noise_sigma", spec.saturation_noise_sigma);
  s.get("noise_correlation_s", spec.noise_correlation_s);
  s.get("label_period_s", spec.label_period_s);
  s.get("trace_noise_c", spec.trace_noise_c);
  s.get("seed", spec.seed);
  read_range(s, "k_range", spec.k_range);
  read_range(s, "t_base_range", spec.t_base_range);
  read_range(s, "delta_t_range", spec.delta_t_range);
  read_range(s, "tau_range", spec.tau_range);
  read_range(s, "skin_value_range", spec.skin_value_range);
  s.get("reference_temp_c", spec.reference_temp_c);
  s.get("reference_saturation", spec.reference_saturation);
  s.get("intercept_jitter_c", spec.intercept_jitter_c);
  s.get("base_hue", spec.base_hue);
  s.get("tint_per_degree", spec.tint_per_degree);
  s.get("tint_noise", spec.tint_noise);
  s.get("texture_contrast", spec.texture_contrast);
}

void merge_magnify(MagnifyConfig& m, const json& j, const std::string& path) {
  Section s(j, path);
  s.get("xi", m.xi);
  s.get("pyramid_levels", m.pyramid_levels);
  s.get("low_cut_hz", m.low_cut_hz);
  s.get("high_cut_hz", m.high_cut_hz);
  s.get("frame_rate_hz", m.frame_rate_hz);
  s.get("denoise_radius", m.denoise_radius);
  s.get("clamp_output", m.clamp_output);
}

void merge_backbone(BackboneConfig& b, const json& j, const std::string& path) {
  Section s(j, path);
  s.get("input_side", b.input_side);
  s.get("feature_dim", b.feature_dim);
  s.get("spatial_out", b.spatial_out);
  read_int_list(s, "stage_channels", b.stage_channels);
  read_int_list(s, "fusion_channels", b.fusion_channels);
  s.get("ssi_branch_channels", b.ssi_branch_channels);
}

void merge_train(TrainConfig& t, const json& j, const std::string& path) {
  Section s(j, path);
  s.get("batch_size", t.batch_size);
  s.get("epochs", t.epochs);
  if (const json* split = s.child("split")) {
    if (!split->is_array() || split->size() != 2 || !(*split)[0].is_number_integer() ||
        !(*split)[1].is_number_integer()) {
      fail(ErrorCode::config, "config key " + s.dotted("split") + ": expected [train, test]");
    }
    t.split_train = (*split)[0].get<int>();
    t.split_test = (*split)[1].get<int>();
  }
  s.get("validation_size", t.validation_size);
  s.get("checkpoint_threshold_c", t.checkpoint_threshold_c);
  s.get("checkpoint_every_images", t.checkpoint_every_images);
  s.get("learning_rate", t.learning_rate);
  s.get("seed", t.seed);
}

ScaleProfile profile_of(const std::string& name, const std::string& key) {
  try {
    return parse_profile(name);
  } catch (const Error& e) {
    fail(ErrorCode::config, "config key " + key + ": " + e.what());
  }
}

}  // namespace

RunConfig RunConfig::defaults(ScaleProfile profile) {
  RunConfig c;
  c.profile = profile;
  // Full scale: 16 subjects, 50 minutes at 30 fps, 150 px ROI.
  c.synth.n_subjects = 16;
  c.synth.duration_s = 3000.0;
  c.synth.frame_rate_hz = 30.0;
  c.synth.frame_side = 160;
  c.synth.roi = {5, 5, 150};
  c.magnify = MagnifyConfig{};
  c.backbone = BackboneConfig::paper();
  c.train = TrainConfig{};
  if (profile == ScaleProfile::desk) {
    c.synth.n_subjects = 8;
    c.synth.frame_rate_hz = 0.4;
    c.synth.frame_side = 40;
    c.synth.roi = {4, 4, 32};
    c.synth.noise_correlation_s = 60.0;
    c.synth.tint_noise = 0.002;
    c.magnify.frame_rate_hz = 0.4;
    c.magnify.low_cut_hz = 0.05;
    c.magnify.high_cut_hz = 0.19;
    c.backbone = BackboneConfig::desk();
    c.train.checkpoint_every_images = 3000;
  }
  c.apply_seed(c.seed);
  return c;
}

void RunConfig::apply_seed(std::uint64_t s) {
  seed = s;
  synth.seed = s;
  train.seed = s;
}

void RunConfig::validate() const {
  synth.validate();
  magnify.validate();
  if (!(calibration_fraction > 0.0 && calibration_fraction <= 1.0)) {
    fail(ErrorCode::config, "ssi.calibration_fraction must be within (0, 1]");
  }
  backbone.validate();
  if (backbone.input_side != synth.roi.side) {
    fail(ErrorCode::config, "model.backbone.input_side (" + std::to_string(backbone.input_side) +
                                ") must equal synth.roi.side (" + std::to_string(synth.roi.side) + ")");
  }
  train.validate();
}

std::vector<std::string> desk_overrides() {
  json paper = to_json(RunConfig::defaults(ScaleProfile::paper));
  json desk = to_json(RunConfig::defaults(ScaleProfile::desk));
  std::vector<std::string> keys;
  for (const auto& op : json::diff(paper, desk)) {
    std::string p = op["path"].get<std::string>();
    if (p == "/profile" || p.rfind("/desk_overrides", 0) == 0) continue;
    // JSON pointer -> dotted key, collapsing array indices.
    std::string dotted;
    std::size_t pos = 1;
    while (pos <= p.size()) {
      std::size_t next = p.find('/', pos);
      std::string part = p.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
      bool index = !part.empty() && part.find_first_not_of("0123456789") == std::string::npos;
      if (!index) dotted += (dotted.empty() ? "" : ".") + part;
      if (next == std::string::npos) break;
      pos = next + 1;
    }
    if (std::find(keys.begin(), keys.end(), dotted) == keys.end()) keys.push_back(dotted);
  }
  return keys;
}

json synth_spec_to_json(const SynthDatasetSpec& s) {
  return {{"n_subjects", s.n_subjects},
          {"duration_s", s.duration_s},
          {"frame_rate_hz", s.frame_rate_hz},
          {"frame_side", s.frame_side},
          {"roi", {{"origin_x", s.roi.origin_x}, {"origin_y", s.roi.origin_y}, {"side", s.roi.side}}},
          {"saturation_noise_sigma", s.saturation_noise_sigma},
          {"noise_correlation_s", s.noise_correlation_s},
          {"label_period_s", s.label_period_s},
          {"trace_noise_c", s.trace_noise_c},
          {"seed", s.seed},
          {"k_range", {s.k_range.lo, s.k_range.hi}},
          {"t_base_range", {s.t_base_range.lo, s.t_base_range.hi}},
          {"delta_t_range", {s.delta_t_range.lo, s.delta_t_range.hi}},
          {"tau_range", {s.tau_range.lo, s.tau_range.hi}},
          {"skin_value_range", {s.skin_value_range.lo, s.skin_value_range.hi}},
          {"reference_temp_c", s.reference_temp_c},
          {"reference_saturation", s.reference_saturation},
          {"intercept_jitter_c", s.intercept_jitter_c},
          {"base_hue", s.base_hue},
          {"tint_per_degree", s.tint_per_degree},
          {"tint_noise", s.tint_noise},
          {"texture_contrast", s.texture_contrast}};
}

SynthDatasetSpec synth_spec_from_json(const json& j) {
  SynthDatasetSpec s;
  merge_synth(s, j, "synth");
  return s;
}

json magnify_config_to_json(const MagnifyConfig& m) {
  return {{"xi", m.xi},
          {"pyramid_levels", m.pyramid_levels},
          {"low_cut_hz", m.low_cut_hz},
          {"high_cut_hz", m.high_cut_hz},
          {"frame_rate_hz", m.frame_rate_hz},
          {"denoise_radius", m.denoise_radius},
          {"clamp_output", m.clamp_output}};
}

json backbone_to_json(const BackboneConfig& b) {
  return {{"input_side", b.input_side},
          {"feature_dim", b.feature_dim},
          {"spatial_out", b.spatial_out},
          {"stage_channels", b.stage_channels},
          {"fusion_channels", b.fusion_channels},
          {"ssi_branch_channels", b.ssi_branch_channels}};
}

BackboneConfig backbone_from_json(const json& j) {
  BackboneConfig b;
  merge_backbone(b, j, "backbone");
  b.scale_profile = b.input_side == 150 ? ScaleProfile::paper : ScaleProfile::desk;
  return b;
}

json train_config_to_json(const TrainConfig& t) {
  return {{"batch_size", t.batch_size},
          {"epochs", t.epochs},
          {"split", {t.split_train, t.split_test}},
          {"validation_size", t.validation_size},
          {"checkpoint_threshold_c", t.checkpoint_threshold_c},
          {"checkpoint_every_images", t.checkpoint_every_images},
          {"learning_rate", t.learning_rate},
          {"seed", t.seed}};
}

json to_json(const RunConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["profile"] = profile_name(c.profile);
  j["synth"] = synth_spec_to_json(c.synth);
  j["magnify"] = magnify_config_to_json(c.magnify);
  j["ssi"] = {{"calibration_fraction", c.calibration_fraction}};
  j["model"] = {{"variant", variant_name(c.variant)},
                {"profile", profile_name(c.backbone.scale_profile)},
                {"backbone", backbone_to_json(c.backbone)}};
  j["train"] = train_config_to_json(c.train);
  j["evaluate"] = {{"report_dir", c.evaluate.report_dir}, {"write_csv", c.evaluate.write_csv}};
  return j;
}

void merge_json(RunConfig& c, const json& doc) {
  Section root(doc, "");
  root.ignore("profile");
  root.ignore("desk_overrides");
  if (const json* seed = root.child("seed")) {
    if (!seed->is_number_unsigned()) fail(ErrorCode::config, "config key seed: expected a non-negative integer");
    c.apply_seed(seed->get<std::uint64_t>());
  }
  if (const json* j = root.child("synth")) merge_synth(c.synth, *j, "synth");
  if (const json* j = root.child("magnify")) merge_magnify(c.magnify, *j, "magnify");
  if (const json* j = root.child("ssi")) {
    Section s(*j, "ssi");
    s.get("calibration_fraction", c.calibration_fraction);
  }
  if (const json* j = root.child("model")) {
    Section s(*j, "model");
    std::string variant = variant_name(c.variant);
    s.get("variant", variant);
    try {
      c.variant = parse_variant(variant);
    } catch (const Error& e) {
      fail(ErrorCode::config, std::string("config key model.variant: ") + e.what());
    }
    if (const json* p = s.child("profile")) {
      if (!p->is_string()) fail(ErrorCode::config, "config key model.profile: expected string");
      ScaleProfile prof = profile_of(p->get<std::string>(), "model.profile");
      if (prof != c.backbone.scale_profile) {
        c.backbone = prof == ScaleProfile::paper ? BackboneConfig::paper() : BackboneConfig::desk();
      }
    }
    if (const json* b = s.child("backbone")) merge_backbone(c.backbone, *b, "model.backbone");
  }
  if (const json* j = root.child("train")) merge_train(c.train, *j, "train");
  if (const json* j = root.child("evaluate")) {
    Section s(*j, "evaluate");
    s.get("report_dir", c.evaluate.report_dir);
    s.get("write_csv", c.evaluate.write_csv);
  }
}

RunConfig load_run_config(const std::filesystem::path& path, const std::string& profile_override) {
  json doc = json::object();
  if (!path.empty()) {
    std::ifstream is(path);
    if (!is) fail(ErrorCode::io, "cannot open config " + path.string());
    try {
      doc = json::parse(is);
    } catch (const json::exception& e) {
      fail(ErrorCode::config, "config " + path.string() + " is not valid JSON: " + e.what());
    }
  }
  ScaleProfile profile = ScaleProfile::desk;
  if (!profile_override.empty()) {
    profile = profile_of(profile_override, "--profile");
  } else if (doc.is_object() && doc.contains("profile")) {
    if (!doc["profile"].is_string()) fail(ErrorCode::config, "config key profile: expected string");
    profile = profile_of(doc["profile"].get<std::string>(), "profile");
  }
  RunConfig cfg = RunConfig::defaults(profile);
  merge_json(cfg, doc);
  return cfg;
}

}  // namespace nisdl
