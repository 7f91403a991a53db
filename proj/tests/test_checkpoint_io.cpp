#include <cstring>
#include <fstream>
#include <random>

#include "doctest.h"
#include "nisdl/checkpoint.hpp"
#include "nisdl/error.hpp"
#include "nisdl/io.hpp"
#include "nisdl/models.hpp"
#include "support.hpp"

using namespace nisdl;

TEST_CASE("checkpoint layout and round trip") {
  testing::TempDir dir("ckpt");
  FusionModel m = build_nisdl2(BackboneConfig::desk(), 21);
  ModelParams params = m.params();
  Checkpoint ck = snapshot("nisdl2", params, {{"note", "x"}});
  ck.seed = 21;
  write_checkpoint(dir.path / "a.bin", ck);

  std::string bytes = testing::slurp(dir.path / "a.bin");
  REQUIRE(bytes.size() > 16);
  CHECK(bytes.substr(0, 8) == "NISDLCK1");
  std::uint64_t header_len = 0;
  for (int i = 7; i >= 0; --i) header_len = (header_len << 8) | static_cast<unsigned char>(bytes[8 + i]);
  auto header = nlohmann::json::parse(bytes.substr(16, header_len));
  CHECK(header.at("model_id") == "nisdl2");
  CHECK(bytes.size() == 16 + header_len + params.count() * sizeof(double));

  // first payload double is the first tensor's first element
  const auto& first = header.at("tensors").at(0);
  double v = 0;
  std::memcpy(&v, bytes.data() + 16 + header_len + first.at("offset").get<std::size_t>(), sizeof v);
  CHECK(v == params.find(first.at("name").get<std::string>())->value[0]);

  Checkpoint back = read_checkpoint(dir.path / "a.bin");
  CHECK(back.model_id == "nisdl2");
  CHECK(back.seed == 21u);
  CHECK(back.config.at("note") == "x");
  FusionModel other = build_nisdl2(BackboneConfig::desk(), 99);
  ModelParams op = other.params();
  restore(back, op);
  for (std::size_t t = 0; t < params.tensors.size(); ++t)
    CHECK(std::equal(params.tensors[t]->value.values().begin(), params.tensors[t]->value.values().end(),
                     op.tensors[t]->value.values().begin()));

  write_checkpoint(dir.path / "b.bin", back);
  CHECK(testing::slurp(dir.path / "a.bin") == testing::slurp(dir.path / "b.bin"));
}

TEST_CASE("checkpoint errors") {
  testing::TempDir dir("ckpt_err");
  CHECK_THROWS_AS(read_checkpoint(dir.path / "none.bin"), Error);
  {
    std::ofstream out(dir.path / "bad.bin", std::ios::binary);
    out << "NOTACKPT00000000";
  }
  CHECK_THROWS_AS(read_checkpoint(dir.path / "bad.bin"), Error);

  FusionModel a = build_nisdl2(BackboneConfig::desk(), 1);
  FusionModel b = build_dl(BackboneConfig::desk(), 1);
  ModelParams bp = b.params();
  try {
    restore(snapshot("nisdl2", a.params(), {}), bp);
    FAIL("expected shape error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::shape);
  }
}

TEST_CASE("png and clip round trip") {
  testing::TempDir dir("io");
  VideoClip clip;
  clip.frame_rate_hz = 2.0;
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> u(0, 255);
  for (int i = 0; i < 3; ++i) {
    Frame f = Frame::filled(5, 7);
    for (auto& v : f.data) v = u(rng) / 255.0;
    f.timestamp = i * 0.5;
    clip.frames.push_back(f);
  }
  auto manifest = save_clip(dir.path / "clip", clip);
  VideoClip back = load_clip(manifest);
  CHECK(back.frame_rate_hz == 2.0);
  REQUIRE(back.frames.size() == 3u);
  for (int i = 0; i < 3; ++i) {
    CHECK(back.frames[i].timestamp == clip.frames[i].timestamp);
    for (std::size_t k = 0; k < clip.frames[i].data.size(); ++k)
      CHECK(std::abs(back.frames[i].data[k] - clip.frames[i].data[k]) < 1e-12);
  }
  CHECK_THROWS_AS(load_clip(dir.path / "missing" / "clip.json"), Error);
}
