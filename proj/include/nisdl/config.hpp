#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "nisdl/magnify.hpp"
#include "nisdl/models.hpp"
#include "nisdl/synthdata.hpp"
#include "nisdl/training.hpp"

namespace nisdl {

struct EvaluateConfig {
  std::string report_dir = "reports";
  bool write_csv = true;
};

/// One document drives every stage. Defaults are the full-scale values; the
/// desk profile replaces the keys listed by desk_overrides().
struct RunConfig {
  std::uint64_t seed = 7;
  ScaleProfile profile = ScaleProfile::paper;
  SynthDatasetSpec synth;
  MagnifyConfig magnify;
  double calibration_fraction = 0.2;
  Variant variant = Variant::nisdl2;
  BackboneConfig backbone = BackboneConfig::paper();
  TrainConfig train;
  EvaluateConfig evaluate;

  static RunConfig defaults(ScaleProfile profile);
  /// Seed propagated into synth, train and model initialization.
  void apply_seed(std::uint64_t s);
  void validate() const;
};

/// Dotted key paths whose desk value differs from the paper-profile value.
std::vector<std::string> desk_overrides();

nlohmann::json to_json(const RunConfig& cfg);

/// Overlays a (possibly partial) document onto cfg. Unknown keys and type
/// mismatches throw ErrorCode::config naming the dotted key.
void merge_json(RunConfig& cfg, const nlohmann::json& doc);

/// defaults(profile) < file < caller-applied flags. The profile is taken from
/// profile_override when given, else from the file's "profile" key, else desk.
RunConfig load_run_config(const std::filesystem::path& path, const std::string& profile_override = {});

nlohmann::json backbone_to_json(const BackboneConfig& cfg);
BackboneConfig backbone_from_json(const nlohmann::json& j);
nlohmann::json train_config_to_json(const TrainConfig& cfg);
nlohmann::json synth_spec_to_json(const SynthDatasetSpec& spec);
SynthDatasetSpec synth_spec_from_json(const nlohmann::json& j);
nlohmann::json magnify_config_to_json(const MagnifyConfig& cfg);

}  // namespace nisdl
