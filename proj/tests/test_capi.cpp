#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstring>
#include <string>
#include <vector>

#include "doctest.h"
#include "nisdl/nisdl.h"
#include "support.hpp"

TEST_CASE("status names and version") {
  CHECK(std::string(nisdl_version()).size() > 0);
  CHECK(std::string(nisdl_status_name(NISDL_OK)) == "ok");
  CHECK(std::string(nisdl_status_name(NISDL_ERR_IO)) == "io");
}

TEST_CASE("config handles") {
  nisdl_config* cfg = nullptr;
  REQUIRE(nisdl_config_default("desk", &cfg) == NISDL_OK);
  CHECK(nisdl_config_validate(cfg) == NISDL_OK);
  CHECK(nisdl_config_set_seed(cfg, 11) == NISDL_OK);
  CHECK(nisdl_config_set_variant(cfg, "dl") == NISDL_OK);
  CHECK(nisdl_config_set_variant(cfg, "vgg") == NISDL_ERR_CONFIG);
  CHECK(std::string(nisdl_last_error()).find("vgg") != std::string::npos);

  CHECK(nisdl_config_merge_json(cfg, R"({"train": {"epochs": 3}})") == NISDL_OK);
  CHECK(nisdl_config_merge_json(cfg, R"({"train": {"epochz": 3}})") == NISDL_ERR_CONFIG);
  CHECK(nisdl_config_merge_json(cfg, "{not json") == NISDL_ERR_CONFIG);

  size_t needed = 0;
  REQUIRE(nisdl_config_to_json(cfg, nullptr, 0, &needed) == NISDL_OK);
  std::vector<char> buf(needed);
  REQUIRE(nisdl_config_to_json(cfg, buf.data(), buf.size(), &needed) == NISDL_OK);
  std::string text(buf.data());
  CHECK(text.find("\"epochs\": 3") != std::string::npos);
  CHECK(text.find("\"variant\": \"dl\"") != std::string::npos);
  CHECK(nisdl_config_to_json(cfg, buf.data(), 4, &needed) == NISDL_ERR_BOUNDS);
  nisdl_config_free(cfg);

  CHECK(nisdl_config_default("huge", &cfg) == NISDL_ERR_CONFIG);
  CHECK(nisdl_config_default("desk", nullptr) == NISDL_ERR_INVALID_ARGUMENT);
  CHECK(nisdl_config_load("/nonexistent/cfg.json", nullptr, &cfg) == NISDL_ERR_IO);
  nisdl_config_free(nullptr);
}

TEST_CASE("numeric helpers") {
  double s[] = {0.1, 0.2, 0.3}, t[] = {30.2, 30.4, 30.6};
  double k = 0, b = 0;
  REQUIRE(nisdl_ssi_fit(s, t, 3, &k, &b) == NISDL_OK);
  CHECK(k == doctest::Approx(2.0));
  CHECK(b == doctest::Approx(30.0));
  double same[] = {0.5, 0.5};
  CHECK(nisdl_ssi_fit(same, t, 2, &k, &b) == NISDL_ERR_DEGENERATE_DESIGN);

  double e[] = {0.1, 0.3, 0.6, 0.9, 1.5}, bins[5];
  REQUIRE(nisdl_bin_errors(e, 5, bins) == NISDL_OK);
  for (double f : bins) CHECK(f == 0.2);
  double neg[] = {-1.0};
  CHECK(nisdl_bin_errors(neg, 1, bins) == NISDL_ERR_DOMAIN);

  double mean = 0, median = 0, q[3];
  double v[] = {1, 2, 3, 4};
  REQUIRE(nisdl_summarize(v, 4, &mean, &median, q) == NISDL_OK);
  CHECK(mean == 2.5);
  CHECK(median == 2.5);
  CHECK(nisdl_summarize(v, 0, &mean, &median, q) == NISDL_ERR_EMPTY_DATA);
}

TEST_CASE("stage errors name their inputs") {
  nisdl_config* cfg = nullptr;
  REQUIRE(nisdl_config_default("desk", &cfg) == NISDL_OK);
  nisdl_report* report = nullptr;
  CHECK(nisdl_evaluate(cfg, "/nonexistent/final.bin", "/nonexistent/data", "/nonexistent/mag", "/nonexistent/ssi.json",
                       nullptr, "/tmp/unused.json", nullptr, &report) == NISDL_ERR_IO);
  CHECK(std::string(nisdl_last_error()).find("/nonexistent") != std::string::npos);
  CHECK(nisdl_report_read("/nonexistent/r.json", &report) == NISDL_ERR_IO);
  CHECK(nisdl_ssi_read("/nonexistent/ssi.json", nullptr) == NISDL_ERR_INVALID_ARGUMENT);
  nisdl_config_free(cfg);
}

TEST_CASE("small end to end run through the C interface") {
  testing::TempDir dir("capi");
  nisdl_config* cfg = nullptr;
  REQUIRE(nisdl_config_default("desk", &cfg) == NISDL_OK);
  REQUIRE(nisdl_config_merge_json(cfg, R"({"synth": {"n_subjects": 4, "duration_s": 400},
      "train": {"epochs": 1, "validation_size": 20, "checkpoint_every_images": 100}})") == NISDL_OK);
  std::string data = (dir.path / "data").string(), mag = (dir.path / "magnified").string(),
              ssi = (dir.path / "ssi.json").string(), models = (dir.path / "models" / "nisdl2").string();

  REQUIRE(nisdl_synth(cfg, data.c_str()) == NISDL_OK);
  REQUIRE(nisdl_magnify_dataset(cfg, data.c_str(), mag.c_str()) == NISDL_OK);
  nisdl_ssi_table* table = nullptr;
  REQUIRE(nisdl_fit_ssi(cfg, data.c_str(), ssi.c_str(), &table) == NISDL_OK);
  REQUIRE(nisdl_ssi_count(table) == 4u);
  const char* id = nullptr;
  double k = 0;
  size_t n = 0;
  REQUIRE(nisdl_ssi_get(table, 0, &id, &k, nullptr, nullptr, &n) == NISDL_OK);
  CHECK(std::string(id) == "s00");
  CHECK(k > 0);
  CHECK(nisdl_ssi_get(table, 4, &id, &k, nullptr, nullptr, &n) == NISDL_ERR_BOUNDS);
  nisdl_ssi_free(table);

  REQUIRE(nisdl_train(cfg, "nisdl2", data.c_str(), mag.c_str(), ssi.c_str(), models.c_str()) == NISDL_OK);
  std::string ckpt = models + "/final.bin", json = (dir.path / "r.json").string();
  nisdl_report* report = nullptr;
  REQUIRE(nisdl_evaluate(cfg, ckpt.c_str(), data.c_str(), mag.c_str(), ssi.c_str(), nullptr, json.c_str(), nullptr,
                         &report) == NISDL_OK);
  CHECK(std::string(nisdl_report_model_id(report)) == "nisdl2");
  double mean = 0, median = 0, q[3], bins[5];
  size_t count = 0;
  REQUIRE(nisdl_report_summary(report, &mean, &median, q, &count) == NISDL_OK);
  REQUIRE(nisdl_report_bins(report, bins) == NISDL_OK);
  CHECK(count > 0);
  CHECK(mean > 0);
  CHECK(bins[0] + bins[1] + bins[2] + bins[3] + bins[4] == doctest::Approx(1.0));
  nisdl_report_free(report);

  nisdl_report* again = nullptr;
  REQUIRE(nisdl_report_read(json.c_str(), &again) == NISDL_OK);
  double mean2 = 0;
  nisdl_report_summary(again, &mean2, nullptr, nullptr, nullptr);
  CHECK(mean2 == mean);
  nisdl_report_free(again);
  nisdl_config_free(cfg);
}
