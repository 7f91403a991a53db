#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "nisdl/nisdl.h"

namespace fs = std::filesystem;

namespace {

struct Options {
  std::string config;
  std::string out = "run";
  std::optional<std::uint64_t> seed;
  std::string model;
  std::string profile;
  std::string data;
  std::string magnified;
  std::string ssi;
  std::string manifest;
  std::string checkpoint;
  std::string split;
  std::vector<int> roi;
};

int report_failure(nisdl_status status) {
  std::cerr << "error [" << nisdl_status_name(status) << "]: " << nisdl_last_error() << "\n";
  return static_cast<int>(status) == 0 ? 1 : static_cast<int>(status);
}

#define CHECK(call)                                 \
  do {                                              \
    nisdl_status st_ = (call);                      \
    if (st_ != NISDL_OK) return report_failure(st_); \
  } while (0)

std::string or_default(const std::string& v, const fs::path& fallback) { return v.empty() ? fallback.string() : v; }

int print_report(const char* label, nisdl_report* report) {
  double mean = 0, median = 0, q[3] = {0, 0, 0}, bins[5] = {0, 0, 0, 0, 0};
  size_t n = 0;
  nisdl_report_summary(report, &mean, &median, q, &n);
  nisdl_report_bins(report, bins);
  std::printf("%-7s n=%zu mean=%.4f median=%.4f q25=%.4f q75=%.4f bins=[%.3f %.3f %.3f %.3f %.3f]\n", label, n, mean,
              median, q[0], q[2], bins[0], bins[1], bins[2], bins[3], bins[4]);
  return 0;
}

int run(const std::string& command, const Options& o) {
  nisdl_config* cfg = nullptr;
  CHECK(nisdl_config_load(o.config.empty() ? nullptr : o.config.c_str(),
                          o.profile.empty() ? nullptr : o.profile.c_str(), &cfg));
  std::unique_ptr<nisdl_config, decltype(&nisdl_config_free)> guard(cfg, nisdl_config_free);
  if (o.seed) CHECK(nisdl_config_set_seed(cfg, *o.seed));
  if (!o.model.empty()) CHECK(nisdl_config_set_variant(cfg, o.model.c_str()));
  CHECK(nisdl_config_validate(cfg));

  const fs::path root(o.out);
  const std::string data = or_default(o.data, root / "data");
  const std::string magnified = or_default(o.magnified, root / "magnified");
  const std::string ssi = or_default(o.ssi, root / "ssi.json");

  if (command == "show-config") {
    size_t needed = 0;
    CHECK(nisdl_config_to_json(cfg, nullptr, 0, &needed));
    std::string text(needed, '\0');
    CHECK(nisdl_config_to_json(cfg, text.data(), text.size(), &needed));
    std::cout << text.c_str() << "\n";
    return 0;
  }
  if (command == "synth") {
    CHECK(nisdl_synth(cfg, data.c_str()));
    std::cout << "synthetic subjects written to " << data << "\n";
    return 0;
  }
  if (command == "magnify") {
    if (!o.manifest.empty()) {
      int x = 0, y = 0, side = 0;
      if (o.roi.size() == 3) {
        x = o.roi[0];
        y = o.roi[1];
        side = o.roi[2];
      }
      CHECK(nisdl_magnify_clip(cfg, o.manifest.c_str(), x, y, side, o.out.c_str()));
      std::cout << "magnified clip written to " << o.out << "\n";
    } else {
      CHECK(nisdl_magnify_dataset(cfg, data.c_str(), magnified.c_str()));
      std::cout << "magnified dataset written to " << magnified << "\n";
    }
    return 0;
  }
  if (command == "fit-ssi") {
    nisdl_ssi_table* table = nullptr;
    CHECK(nisdl_fit_ssi(cfg, data.c_str(), ssi.c_str(), &table));
    for (size_t i = 0; i < nisdl_ssi_count(table); ++i) {
      const char* id = nullptr;
      double k = 0, b = 0, rmse = 0;
      size_t n = 0;
      nisdl_ssi_get(table, i, &id, &k, &b, &rmse, &n);
      std::printf("%s k=%.4f b=%.4f rmse=%.4f n=%zu\n", id, k, b, rmse, n);
    }
    nisdl_ssi_free(table);
    return 0;
  }
  if (command == "train") {
    std::string variant = o.model.empty() ? "nisdl2" : o.model;
    fs::path out_dir = root / "models" / variant;
    CHECK(nisdl_train(cfg, o.model.empty() ? nullptr : o.model.c_str(), data.c_str(), magnified.c_str(), ssi.c_str(),
                      out_dir.string().c_str()));
    std::cout << "checkpoints written to " << out_dir.string() << "\n";
    return 0;
  }
  if (command == "evaluate") {
    std::string variant = o.model.empty() ? "nisdl2" : o.model;
    std::string ckpt = or_default(o.checkpoint, root / "models" / variant / "final.bin");
    fs::path reports = root / "reports";
    fs::path json_path = reports / (variant + ".json");
    fs::path csv_path = reports / (variant + ".csv");
    nisdl_report* report = nullptr;
    CHECK(nisdl_evaluate(cfg, ckpt.c_str(), data.c_str(), magnified.c_str(), ssi.c_str(),
                         o.split.empty() ? nullptr : o.split.c_str(), json_path.string().c_str(),
                         csv_path.string().c_str(), &report));
    print_report(nisdl_report_model_id(report), report);
    nisdl_report_free(report);
    return 0;
  }
  if (command == "pipeline") {
    CHECK(nisdl_pipeline(cfg, o.out.c_str()));
    for (const char* v : {"nisdl1", "nisdl2", "dl", "nipst"}) {
      nisdl_report* report = nullptr;
      fs::path p = root / "reports" / (std::string(v) + ".json");
      if (nisdl_report_read(p.string().c_str(), &report) != NISDL_OK) continue;
      print_report(v, report);
      nisdl_report_free(report);
    }
    return 0;
  }
  std::cerr << "unknown command " << command << "\n";
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Skin temperature estimation from skin video: synthesis, magnification, SSI fitting, training, "
               "evaluation"};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  app.add_option("--config", o.config, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--out", o.out, "run directory (or output directory for clip magnification)");
  app.add_option("--seed", o.seed, "global seed, overrides the config");
  app.add_option("--model", o.model, "model variant")->check(CLI::IsMember({"nisdl1", "nisdl2", "dl", "nipst"}));
  app.add_option("--profile", o.profile, "default profile")->check(CLI::IsMember({"paper", "desk"}));
  app.add_option("--data", o.data, "synthetic or recorded subjects (default <out>/data)");
  app.add_option("--magnified", o.magnified, "magnified ROI clips (default <out>/magnified)");
  app.add_option("--ssi", o.ssi, "SSI table (default <out>/ssi.json)");

  std::string command;
  app.add_subcommand("show-config", "print the effective configuration")->callback([&] { command = "show-config"; });
  app.add_subcommand("synth", "generate synthetic subjects")->callback([&] { command = "synth"; });
  auto* magnify = app.add_subcommand("magnify", "denoise and magnify a clip or every subject");
  magnify->add_option("--manifest", o.manifest, "single clip manifest");
  magnify->add_option("--roi", o.roi, "crop x y side before magnifying")->expected(3);
  magnify->callback([&] { command = "magnify"; });
  app.add_subcommand("fit-ssi", "fit per-subject saturation-temperature lines")->callback([&] { command = "fit-ssi"; });
  app.add_subcommand("train", "train one model variant")->callback([&] { command = "train"; });
  auto* evaluate = app.add_subcommand("evaluate", "score a checkpoint on its test subjects");
  evaluate->add_option("--checkpoint", o.checkpoint, "checkpoint file (default <out>/models/<model>/final.bin)");
  evaluate->add_option("--split", o.split, "split JSON overriding the checkpoint's own");
  evaluate->callback([&] { command = "evaluate"; });
  app.add_subcommand("pipeline", "synth, magnify, fit-ssi, train all models, evaluate")->callback([&] {
    command = "pipeline";
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  return run(command, o);
}
