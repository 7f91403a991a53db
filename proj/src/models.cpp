#include "nisdl/models.hpp"

#include <cmath>

#include "nisdl/error.hpp"

namespace nisdl {

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::nisdl1: return "nisdl1";
    case Variant::nisdl2: return "nisdl2";
    case Variant::dl: return "dl";
    case Variant::nipst: return "nipst";
  }
  return "unknown";
}

Variant parse_variant(const std::string& name) {
  if (name == "nisdl1") return Variant::nisdl1;
  if (name == "nisdl2") return Variant::nisdl2;
  if (name == "dl") return Variant::dl;
  if (name == "nipst") return Variant::nipst;
  fail(ErrorCode::config, "model.variant: unknown variant '" + name + "' (expected nisdl1|nisdl2|dl|nipst)");
}

std::string profile_name(ScaleProfile p) { return p == ScaleProfile::paper ? "paper" : "desk"; }

ScaleProfile parse_profile(const std::string& name) {
  if (name == "paper") return ScaleProfile::paper;
  if (name == "desk") return ScaleProfile::desk;
  fail(ErrorCode::config, "model.profile: unknown profile '" + name + "' (expected paper|desk)");
}

BackboneConfig BackboneConfig::paper() {
  BackboneConfig c;
  c.input_side = 150;
  c.feature_dim = 1920;
  c.spatial_out = 4;
  c.scale_profile = ScaleProfile::paper;
  c.stage_channels = {16, 32, 64, 128, 256};  // 150 -> 75 -> 37 -> 18 -> 9 -> 4
  return c;
}

BackboneConfig BackboneConfig::desk() { return BackboneConfig{}; }

int BackboneConfig::stage_count() const {
  int side = input_side, stages = 0;
  while (side > spatial_out) {
    side /= 2;
    ++stages;
  }
  return side == spatial_out ? stages : -1;
}

void BackboneConfig::validate() const {
  if (input_side <= 0 || spatial_out <= 0) fail(ErrorCode::config, "model: input_side and spatial_out must be positive");
  if (feature_dim <= 0 || feature_dim % 3 != 0) {
    fail(ErrorCode::config, "model.feature_dim must be a positive multiple of 3, got " + std::to_string(feature_dim));
  }
  const int stages = stage_count();
  if (stages < 0) {
    fail(ErrorCode::config, "model: input_side " + std::to_string(input_side) +
                                " does not halve down to spatial_out " + std::to_string(spatial_out));
  }
  if (static_cast<int>(stage_channels.size()) != stages) {
    fail(ErrorCode::config, "model.stage_channels needs " + std::to_string(stages) + " entries for input_side " +
                                std::to_string(input_side));
  }
  if (fusion_channels.empty() || fusion_channels.back() != 3) {
    fail(ErrorCode::config, "model.fusion_channels must end with 3 channels feeding the backbone");
  }
  for (int c : stage_channels)
    if (c <= 0) fail(ErrorCode::config, "model.stage_channels entries must be positive");
  for (int c : fusion_channels)
    if (c <= 0) fail(ErrorCode::config, "model.fusion_channels entries must be positive");
  if (ssi_branch_channels <= 0) fail(ErrorCode::config, "model.ssi_branch_channels must be positive");
}

namespace {

// Head widths keep the 2560 : 1024 : 512 proportions of the full-scale head.
std::pair<std::size_t, std::size_t> head_widths(std::size_t in) {
  auto first = static_cast<std::size_t>(std::lround(0.4 * static_cast<double>(in)));
  return {first, first / 2};
}

}  // namespace

FusionModel::FusionModel(Variant variant, const BackboneConfig& cfg, std::uint64_t seed)
    : variant_(variant), cfg_(cfg), seed_(seed) {
  if (variant == Variant::nipst) fail(ErrorCode::config, "nipst is a linear baseline, not a neural model");
  cfg_.validate();
  build();
}

void FusionModel::build() {
  const auto f = static_cast<std::size_t>(cfg_.feature_dim);
  std::mt19937_64 rng(seed_);

  std::size_t channels = 3;
  if (variant_ == Variant::nisdl1) {
    fusion_.emplace();
    std::size_t in = 4;
    for (std::size_t i = 0; i < cfg_.fusion_channels.size(); ++i) {
      auto out = static_cast<std::size_t>(cfg_.fusion_channels[i]);
      fusion_->add<Conv2d>("fusion.conv" + std::to_string(i), in, out, 1);
      fusion_->add<Relu>("fusion.relu" + std::to_string(i));
      in = out;
    }
    channels = in;
  }

  for (std::size_t i = 0; i < cfg_.stage_channels.size(); ++i) {
    auto out = static_cast<std::size_t>(cfg_.stage_channels[i]);
    auto& conv = backbone_.add<Conv2d>("backbone.conv" + std::to_string(i), channels, out, 3);
    if (i == 0 && variant_ != Variant::nisdl1) conv.set_input_grad(false);
    backbone_.add<Relu>("backbone.relu" + std::to_string(i));
    backbone_.add<AvgPool2d>("backbone.pool" + std::to_string(i), 2);
    channels = out;
  }
  backbone_.add<Conv2d>("backbone.lift", channels, f, 1);
  backbone_.add<Relu>("backbone.lift_relu");

  image_pool_.add<AvgPool2d>("pool", static_cast<std::size_t>(cfg_.spatial_out));
  image_pool_.add<Flatten>("pool.flatten");

  std::size_t head_in = f;
  if (variant_ == Variant::nisdl2) {
    ssi_branch_.emplace();
    const auto c = static_cast<std::size_t>(cfg_.ssi_branch_channels);
    ssi_branch_->add<Conv1d>("ssi.conv0", 1, c, 3);
    ssi_branch_->add<Relu>("ssi.relu0");
    ssi_branch_->add<Conv1d>("ssi.conv1", c, 1, 3);
    ssi_branch_->add<AvgPool1d>("ssi.pool", 3);
    ssi_branch_->add<Flatten>("ssi.flatten");
    ssi_width_ = f / 3;
    head_in = f + ssi_width_;
  }

  if (variant_ == Variant::nisdl1) {
    head_.add<Dense>("head.dense0", head_in, 1);
  } else {
    auto [w1, w2] = head_widths(head_in);
    head_.add<Dense>("head.dense0", head_in, w1);
    head_.add<Relu>("head.relu0");
    head_.add<Dense>("head.dense1", w1, w2);
    head_.add<Relu>("head.relu1");
    head_.add<Dense>("head.dense2", w2, 1);
  }

  // Fixed initialization order: fusion, backbone, ssi branch, head.
  if (fusion_) fusion_->initialize(rng);
  backbone_.initialize(rng);
  if (ssi_branch_) ssi_branch_->initialize(rng);
  head_.initialize(rng);
}

Tensor FusionModel::forward(const Tensor& images, std::span<const double> ssi) {
  if (images.rank() != 4 || images.dim(3) != 3) {
    fail(ErrorCode::shape, "model input: expected N x H x W x 3 images, got " + shape_string(images.shape()));
  }
  const std::size_t n = images.dim(0);
  const auto side = static_cast<std::size_t>(cfg_.input_side);
  if (images.dim(1) != side || images.dim(2) != side) {
    fail(ErrorCode::shape, "model input: expected " + std::to_string(side) + "x" + std::to_string(side) +
                               " images, got " + shape_string(images.shape()));
  }
  if (ssi.size() != n) {
    fail(ErrorCode::shape, "model input: " + std::to_string(n) + " images but " + std::to_string(ssi.size()) +
                               " SSI values");
  }
  last_batch_ = n;

  Tensor features;
  if (variant_ == Variant::nisdl1) {
    // Broadcast each SSI scalar to a full plane appended as channel 4.
    Tensor fused({n, side, side, 4});
    const std::size_t pixels = side * side;
    for (std::size_t s = 0; s < n; ++s)
      for (std::size_t p = 0; p < pixels; ++p) {
        const double* src = images.data() + (s * pixels + p) * 3;
        double* dst = fused.data() + (s * pixels + p) * 4;
        dst[0] = src[0];
        dst[1] = src[1];
        dst[2] = src[2];
        dst[3] = ssi[s];
      }
    features = image_pool_.forward(backbone_.forward(fusion_->forward(fused)));
  } else {
    features = image_pool_.forward(backbone_.forward(images));
  }

  if (variant_ == Variant::nisdl2) {
    const auto f = static_cast<std::size_t>(cfg_.feature_dim);
    Tensor expanded({n, f, 1});
    for (std::size_t s = 0; s < n; ++s) std::fill_n(expanded.data() + s * f, f, ssi[s]);
    Tensor ssi_features = ssi_branch_->forward(expanded);
    features = concat_.forward(features, ssi_features);
  }
  return head_.forward(features);
}

std::vector<double> FusionModel::backward(const Tensor& grad_output) {
  std::vector<double> ssi_grad(last_batch_, 0.0);
  Tensor g = head_.backward(grad_output);
  if (variant_ == Variant::nisdl2) {
    auto [g_image, g_ssi] = concat_.backward(g);
    Tensor g_expanded = ssi_branch_->backward(g_ssi);
    const auto f = static_cast<std::size_t>(cfg_.feature_dim);
    for (std::size_t s = 0; s < last_batch_; ++s) {
      double acc = 0.0;
      for (std::size_t i = 0; i < f; ++i) acc += g_expanded[s * f + i];
      ssi_grad[s] = acc;
    }
    g = std::move(g_image);
  }
  Tensor g_backbone_in = backbone_.backward(image_pool_.backward(g));
  if (variant_ == Variant::nisdl1) {
    Tensor g_fused = fusion_->backward(g_backbone_in);
    const std::size_t pixels = g_fused.size() / (last_batch_ * 4);
    for (std::size_t s = 0; s < last_batch_; ++s) {
      double acc = 0.0;
      for (std::size_t p = 0; p < pixels; ++p) acc += g_fused[(s * pixels + p) * 4 + 3];
      ssi_grad[s] = acc;
    }
  }
  return ssi_grad;
}

ModelParams FusionModel::params() {
  ModelParams p;
  p.rng_seed = seed_;
  auto append = [&](Sequential& s) {
    auto v = s.parameters();
    p.tensors.insert(p.tensors.end(), v.begin(), v.end());
  };
  if (fusion_) append(*fusion_);
  append(backbone_);
  if (ssi_branch_) append(*ssi_branch_);
  append(head_);
  return p;
}

std::size_t FusionModel::parameter_count() { return params().count(); }

std::map<std::string, Shape> FusionModel::propagate_shapes(std::size_t batch) const {
  std::map<std::string, Shape> shapes;
  const auto side = static_cast<std::size_t>(cfg_.input_side);
  Shape image{batch, side, side, 3};
  shapes["input_images"] = image;
  Shape x = image;
  if (variant_ == Variant::nisdl1) {
    x = {batch, side, side, 4};
    shapes["fusion_input"] = x;
    x = fusion_->output_shape(x);
    shapes["fusion_output"] = x;
  }
  x = backbone_.output_shape(x);
  shapes["backbone_output"] = x;
  x = image_pool_.output_shape(x);
  shapes["image_features"] = x;
  if (variant_ == Variant::nisdl2) {
    const auto f = static_cast<std::size_t>(cfg_.feature_dim);
    Shape expanded{batch, f, 1};
    shapes["ssi_expanded"] = expanded;
    Shape ssi = ssi_branch_->output_shape(expanded);
    shapes["ssi_features"] = ssi;
    x = Concat::output_shape(x, ssi);
    shapes["concat_features"] = x;
  }
  x = head_.output_shape(x);
  shapes["output"] = x;
  return shapes;
}

std::vector<std::pair<std::size_t, std::size_t>> FusionModel::head_dims() const {
  std::vector<std::pair<std::size_t, std::size_t>> dims;
  for (std::size_t i = 0; i < head_.size(); ++i) {
    if (const auto* d = dynamic_cast<const Dense*>(&head_.layer(i))) dims.emplace_back(d->in_features(), d->out_features());
  }
  return dims;
}

FusionModel build_nisdl1(const BackboneConfig& cfg, std::uint64_t seed) { return FusionModel(Variant::nisdl1, cfg, seed); }
FusionModel build_nisdl2(const BackboneConfig& cfg, std::uint64_t seed) { return FusionModel(Variant::nisdl2, cfg, seed); }
FusionModel build_dl(const BackboneConfig& cfg, std::uint64_t seed) { return FusionModel(Variant::dl, cfg, seed); }

std::vector<double> nipst_predict(std::span<const SaturationTemperature> calibration,
                                  std::span<const double> query_saturation) {
  const SsiRecord line = fit_ssi(calibration, "nipst");
  std::vector<double> out;
  out.reserve(query_saturation.size());
  for (double s : query_saturation) out.push_back(predict_linear(line, s));
  return out;
}

}  // namespace nisdl
