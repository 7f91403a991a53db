#include <random>

#include "doctest.h"
#include "nisdl/error.hpp"
#include "nisdl/imaging.hpp"

using namespace nisdl;

namespace {

Frame uniform(int h, int w, double r, double g, double b) {
  Frame f = Frame::filled(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      f.at(y, x, 0) = r;
      f.at(y, x, 1) = g;
      f.at(y, x, 2) = b;
    }
  return f;
}

Frame random_frame(int h, int w, std::mt19937_64& rng) {
  Frame f = Frame::filled(h, w);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto& v : f.data) v = u(rng);
  return f;
}

}  // namespace

TEST_CASE("hsv saturation of single pixels") {
  CHECK(hsv_saturation(1.0, 0.0, 0.0) == 1.0);
  CHECK(hsv_saturation(0.5, 0.5, 0.5) == 0.0);
  CHECK(hsv_saturation(0.8, 0.4, 0.4) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(hsv_saturation(0.0, 0.0, 0.0) == 0.0);
}

TEST_CASE("saturation ignores brightness scaling") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  for (int i = 0; i < 200; ++i) {
    double r = u(rng), g = u(rng), b = u(rng), c = u(rng);
    CHECK(hsv_saturation(c * r, c * g, c * b) == doctest::Approx(hsv_saturation(r, g, b)).epsilon(1e-12));
  }
}

TEST_CASE("hsv_to_rgb round trip through saturation") {
  for (double h : {0.0, 0.03, 0.3, 0.7})
    for (double s : {0.0, 0.25, 0.9}) {
      Rgb c = hsv_to_rgb(h, s, 0.8);
      CHECK(hsv_saturation(c.r, c.g, c.b) == doctest::Approx(s).epsilon(1e-12));
      CHECK(std::max({c.r, c.g, c.b}) == doctest::Approx(0.8));
    }
}

TEST_CASE("saturation map stays in the unit interval") {
  std::mt19937_64 rng(5);
  Frame f = random_frame(9, 7, rng);
  SaturationMap m = rgb_to_hsv_saturation(f);
  REQUIRE(m.values.size() == 63u);
  for (double v : m.values) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("crop_roi index arithmetic") {
  Frame f = Frame::filled(4, 4);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x)
      for (int c = 0; c < 3; ++c) f.at(y, x, c) = (y * 4 + x) / 16.0 + c * 0.01;

  Frame same = crop_roi(f, RoiSpec{0, 0, 4});
  CHECK(same.data == f.data);

  Frame corner = crop_roi(f, RoiSpec{2, 2, 2});
  REQUIRE(corner.height == 2);
  REQUIRE(corner.width == 2);
  for (int y = 0; y < 2; ++y)
    for (int x = 0; x < 2; ++x)
      for (int c = 0; c < 3; ++c) CHECK(corner.at(y, x, c) == f.at(y + 2, x + 2, c));

  Frame small = Frame::filled(100, 100);
  try {
    crop_roi(small, RoiSpec{0, 0, 150});
    FAIL("expected bounds error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::bounds);
  }
}

TEST_CASE("mean saturation") {
  CHECK(mean_saturation(uniform(5, 5, 0.8, 0.4, 0.4)) == doctest::Approx(0.5).epsilon(1e-15));

  Frame half = Frame::filled(2, 2);
  half.at(0, 0, 0) = half.at(0, 1, 0) = 1.0;  // pure red, S = 1; the rest black, S = 0
  CHECK(mean_saturation(half) == doctest::Approx(0.5));

  std::mt19937_64 rng(11);
  Frame f = random_frame(8, 8, rng);
  double oracle = 0.0;
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) {
      double r = f.at(y, x, 0), g = f.at(y, x, 1), b = f.at(y, x, 2);
      double hi = std::max({r, g, b}), lo = std::min({r, g, b});
      oracle += hi > 0 ? (hi - lo) / hi : 0.0;
    }
  oracle /= 64.0;
  CHECK(std::abs(mean_saturation(f) - oracle) < 1e-12);
  CHECK(mean_saturation(crop_roi(f, RoiSpec{0, 0, 8})) == mean_saturation(f));
}

TEST_CASE("frame validation") {
  Frame f = Frame::filled(2, 2, 0.5);
  CHECK_NOTHROW(f.validate());
  f.data[3] = 1.5;
  CHECK_THROWS_AS(f.validate(), Error);
}

TEST_CASE("rgb8 conversion rounds") {
  Frame f = Frame::filled(1, 2);
  f.data = {0.0, 0.5, 1.0, 0.2, 0.4, 0.6};
  auto bytes = frame_to_rgb8(f);
  CHECK(bytes == std::vector<std::uint8_t>{0, 128, 255, 51, 102, 153});
  Frame back = frame_from_rgb8(bytes, 1, 2);
  CHECK(back.data[2] == 1.0);
  CHECK(back.data[3] == doctest::Approx(51.0 / 255.0));
}
