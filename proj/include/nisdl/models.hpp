#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nisdl/nn.hpp"
#include "nisdl/ssi.hpp"

namespace nisdl {

enum class Variant { nisdl1, nisdl2, dl, nipst };

std::string variant_name(Variant v);
// Accepts nisdl1 | nisdl2 | dl | nipst; throws ErrorCode::config otherwise.
Variant parse_variant(const std::string& name);

enum class ScaleProfile { paper, desk };

std::string profile_name(ScaleProfile p);
ScaleProfile parse_profile(const std::string& name);

/// Compact stand-in for the pretrained feature extractor: stages of
/// 3x3 conv + ReLU + 2x2 average pool until the map is spatial_out wide, then
/// a 1x1 conv + ReLU lifting to feature_dim channels.
struct BackboneConfig {
  int input_side = 32;
  int feature_dim = 192;
  int spatial_out = 4;
  ScaleProfile scale_profile = ScaleProfile::desk;
  std::vector<int> stage_channels = {6, 12, 24};
  // Channel widths of the 1x1 reduction stack in the early-fusion model.
  std::vector<int> fusion_channels = {16, 16, 8, 3};
  int ssi_branch_channels = 4;

  static BackboneConfig paper();  // 150 input, F = 1920
  static BackboneConfig desk();   // 32 input, F = 192

  // Throws ErrorCode::config (F % 3, unreachable spatial_out, ...).
  void validate() const;
  int stage_count() const;
};

/// One of the three neural regressors. Inputs are an NHWC image batch with
/// three channels and one SSI scalar per image; output is N x 1.
class FusionModel {
 public:
  FusionModel(Variant variant, const BackboneConfig& cfg, std::uint64_t seed);
  FusionModel(FusionModel&&) = default;
  FusionModel& operator=(FusionModel&&) = default;

  Variant variant() const { return variant_; }
  const BackboneConfig& config() const { return cfg_; }
  std::uint64_t seed() const { return seed_; }

  Tensor forward(const Tensor& images, std::span<const double> ssi);
  // Accumulates parameter gradients; returns d output / d ssi per sample
  // (all zero for the SSI-free model).
  std::vector<double> backward(const Tensor& grad_output);

  ModelParams params();
  std::size_t parameter_count();

  /// Named activation shapes computed without running any arithmetic.
  std::map<std::string, Shape> propagate_shapes(std::size_t batch) const;
  /// (in, out) of each dense layer in the regression head, in order.
  std::vector<std::pair<std::size_t, std::size_t>> head_dims() const;

 private:
  void build();

  Variant variant_;
  BackboneConfig cfg_;
  std::uint64_t seed_;

  std::optional<Sequential> fusion_;  // early fusion 1x1 stack
  Sequential backbone_;
  Sequential image_pool_;
  std::optional<Sequential> ssi_branch_;
  Concat concat_;
  Sequential head_;
  std::size_t ssi_width_ = 0;
  std::size_t last_batch_ = 0;
};

FusionModel build_nisdl1(const BackboneConfig& cfg, std::uint64_t seed = 0);
FusionModel build_nisdl2(const BackboneConfig& cfg, std::uint64_t seed = 0);
FusionModel build_dl(const BackboneConfig& cfg, std::uint64_t seed = 0);

/// Linear saturation-temperature baseline: fit on the calibration pairs,
/// evaluate the line at each query saturation.
std::vector<double> nipst_predict(std::span<const SaturationTemperature> calibration,
                                  std::span<const double> query_saturation);

}  // namespace nisdl
