#include <cmath>
#include <random>

#include "doctest.h"
#include "nisdl/error.hpp"
#include "nisdl/models.hpp"
#include "support.hpp"

using namespace nisdl;
using testing::random_tensor;

namespace {

// Worst relative error over the SSI inputs and up to `per_tensor` evenly
// spaced entries of every parameter tensor.
double check_model(FusionModel& m, std::size_t batch, std::uint64_t seed, std::size_t per_tensor = 48) {
  std::mt19937_64 rng(seed);
  const auto side = static_cast<std::size_t>(m.config().input_side);
  Tensor x = random_tensor({batch, side, side, 3}, rng);
  std::vector<double> ssi(batch);
  for (auto& s : ssi) s = std::uniform_real_distribution<double>(-1, 1)(rng);

  ModelParams params = m.params();
  testing::randomize_biases(params.tensors, rng);
  Tensor y = m.forward(x, ssi);
  Tensor r = random_tensor(y.shape(), rng);
  params.zero_grad();
  std::vector<double> g_ssi = m.backward(r);

  auto loss = [&] { return testing::dot(m.forward(x, ssi), r); };
  double worst = 0;
  if (m.variant() != Variant::dl) {
    for (std::size_t i = 0; i < batch; ++i)
      worst = std::max(worst, testing::rel_error(g_ssi[i], testing::kink_safe_derivative(loss, ssi[i])));
  }
  for (auto* p : params.tensors) {
    const std::size_t n = p->value.size();
    const std::size_t stride = std::max<std::size_t>(1, n / per_tensor);
    for (std::size_t i = 0; i < n; i += stride) {
      double e = testing::rel_error(p->grad[i], testing::kink_safe_derivative(loss, p->value[i]));
      if (e > worst) {
        worst = e;
        if (e >= 1e-4) MESSAGE(p->name << "[" << i << "] analytic " << p->grad[i] << " rel error " << e);
      }
    }
  }
  return worst;
}

std::vector<FusionModel> neural_models(const BackboneConfig& cfg, std::uint64_t seed = 0) {
  std::vector<FusionModel> v;
  v.push_back(build_nisdl1(cfg, seed));
  v.push_back(build_nisdl2(cfg, seed));
  v.push_back(build_dl(cfg, seed));
  return v;
}

}  // namespace

TEST_CASE("variant and profile names") {
  for (Variant v : {Variant::nisdl1, Variant::nisdl2, Variant::dl, Variant::nipst})
    CHECK(parse_variant(variant_name(v)) == v);
  CHECK_THROWS_AS(parse_variant("resnet"), Error);
  CHECK(parse_profile("desk") == ScaleProfile::desk);
  CHECK_THROWS_AS(parse_profile("huge"), Error);
  CHECK_THROWS_AS(FusionModel(Variant::nipst, BackboneConfig::desk(), 0), Error);
}

TEST_CASE("paper profile shapes") {
  BackboneConfig paper = BackboneConfig::paper();
  for (std::size_t n : {1u, 2u, 32u}) {
    auto s1 = build_nisdl1(paper).propagate_shapes(n);
    CHECK(s1.at("fusion_input") == Shape{n, 150, 150, 4});
    CHECK(s1.at("fusion_output") == Shape{n, 150, 150, 3});
    CHECK(s1.at("backbone_output") == Shape{n, 4, 4, 1920});

    auto s2 = build_nisdl2(paper).propagate_shapes(n);
    CHECK(s2.at("backbone_output") == Shape{n, 4, 4, 1920});
    CHECK(s2.at("image_features") == Shape{n, 1920});
    CHECK(s2.at("ssi_features") == Shape{n, 640});
    CHECK(s2.at("concat_features") == Shape{n, 2560});
    CHECK(s2.at("output") == Shape{n, 1});

    auto sd = build_dl(paper).propagate_shapes(n);
    CHECK(sd.count("ssi_features") == 0u);
    CHECK(sd.at("output") == Shape{n, 1});
  }
  auto head = build_nisdl2(paper).head_dims();
  REQUIRE(head.size() == 3u);
  CHECK(head[0] == std::pair<std::size_t, std::size_t>{2560, 1024});
  CHECK(head[1] == std::pair<std::size_t, std::size_t>{1024, 512});
  CHECK(head[2] == std::pair<std::size_t, std::size_t>{512, 1});
  CHECK(build_dl(paper).head_dims().front().first == 1920u);
}

TEST_CASE("desk profile shapes") {
  BackboneConfig desk = BackboneConfig::desk();
  auto s = build_nisdl2(desk).propagate_shapes(1);
  CHECK(s.at("backbone_output") == Shape{1, 4, 4, 192});
  CHECK(s.at("image_features") == Shape{1, 192});
  CHECK(s.at("ssi_features") == Shape{1, 64});
  CHECK(s.at("concat_features") == Shape{1, 256});
  CHECK(build_dl(desk).head_dims().front().first == 192u);

  // real forward passes agree with the propagated shapes
  std::mt19937_64 rng(1);
  for (std::size_t n : {1u, 2u}) {
    Tensor x = random_tensor({n, 32, 32, 3}, rng, 0, 1);
    std::vector<double> ssi(n, 0.5);
    for (auto& m : neural_models(desk))
      CHECK(m.forward(x, ssi).shape() == m.propagate_shapes(n).at("output"));
  }
}

TEST_CASE("bad configs and inputs") {
  BackboneConfig c = BackboneConfig::desk();
  c.feature_dim = 100;
  CHECK_THROWS_AS(c.validate(), Error);
  c = BackboneConfig::desk();
  c.input_side = 30;
  CHECK_THROWS_AS(c.validate(), Error);
  FusionModel m = build_nisdl2(BackboneConfig::desk());
  std::vector<double> ssi(2, 1.0);
  CHECK_THROWS_AS(m.forward(Tensor({2, 16, 16, 3}), ssi), Error);
  CHECK_THROWS_AS(m.forward(Tensor({3, 32, 32, 3}), ssi), Error);
}

TEST_CASE("ssi behaviour") {
  std::mt19937_64 rng(2);
  BackboneConfig desk = BackboneConfig::desk();
  Tensor x = random_tensor({1, 32, 32, 3}, rng, 0, 1);

  SUBCASE("zero ssi gives finite outputs") {
    std::vector<double> zero{0.0};
    for (auto& m : neural_models(desk, 3))
      CHECK(std::isfinite(m.forward(x, zero)[0]));
  }
  SUBCASE("nisdl2 responds to ssi") {
    FusionModel m = build_nisdl2(desk, 5);
    double a = m.forward(x, std::vector<double>{2.0})[0];
    double b = m.forward(x, std::vector<double>{8.0})[0];
    CHECK(a != b);
    std::vector<double> s{3.0};
    auto f = [&] { return m.forward(x, s)[0]; };
    CHECK(std::abs(testing::numeric_derivative(f, s[0])) > 0.0);
  }
  SUBCASE("dl ignores ssi") {
    FusionModel m = build_dl(desk, 5);
    CHECK(m.forward(x, std::vector<double>{2.0})[0] == m.forward(x, std::vector<double>{8.0})[0]);
  }
  SUBCASE("zeroed ssi channel weights equal a zero ssi plane") {
    FusionModel m = build_nisdl1(desk, 6);
    double zero_plane = m.forward(x, std::vector<double>{0.0})[0];
    Parameter* w = m.params().find("fusion.conv0.weight");
    REQUIRE(w != nullptr);
    const std::size_t out = w->value.dim(3);
    for (std::size_t o = 0; o < out; ++o) w->value[3 * out + o] = 0.0;
    CHECK(m.forward(x, std::vector<double>{7.0})[0] == zero_plane);
  }
}

TEST_CASE("desk models stay small") {
  for (auto& m : neural_models(BackboneConfig::desk()))
    CHECK(m.parameter_count() <= 50000u);
}

TEST_CASE("full model gradient checks") {
  BackboneConfig desk = BackboneConfig::desk();
  SUBCASE("nisdl1") {
    FusionModel m = build_nisdl1(desk, 11);
    CHECK(check_model(m, 2, 101) < 1e-4);
  }
  SUBCASE("nisdl2") {
    FusionModel m = build_nisdl2(desk, 12);
    CHECK(check_model(m, 2, 102) < 1e-4);
  }
  SUBCASE("dl") {
    FusionModel m = build_dl(desk, 13);
    CHECK(check_model(m, 2, 103) < 1e-4);
  }
}

TEST_CASE("initialization depends only on the seed") {
  auto weights = [](std::uint64_t seed) {
    FusionModel m = build_nisdl2(BackboneConfig::desk(), seed);
    std::vector<double> all;
    for (auto* p : m.params().tensors) all.insert(all.end(), p->value.values().begin(), p->value.values().end());
    return all;
  };
  CHECK(weights(4) == weights(4));
  CHECK(weights(4) != weights(5));
}
