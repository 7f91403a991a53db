#include "nisdl/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

#include "nisdl/checkpoint.hpp"
#include "nisdl/error.hpp"
#include "nisdl/io.hpp"
#include "nisdl/labels.hpp"

namespace nisdl {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kDatasetIndex = "dataset.json";

// Runs fn(i) for i in [0, n) on up to thread_count() workers. The exception
// from the lowest failing index is rethrown.
template <typename Fn>
void parallel_for(std::size_t n, Fn fn) {
  unsigned workers = std::min<unsigned>(thread_count(), static_cast<unsigned>(std::max<std::size_t>(n, 1)));
  std::vector<std::exception_ptr> errors(n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

json read_json(const fs::path& path) {
  std::ifstream is(path);
  if (!is) fail(ErrorCode::io, "cannot open " + path.string());
  try {
    return json::parse(is);
  } catch (const json::exception& e) {
    fail(ErrorCode::io, path.string() + " is not valid JSON: " + e.what());
  }
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream os(path);
  if (!os) fail(ErrorCode::io, "cannot write " + path.string());
  os << j.dump(1) << '\n';
}

RoiSpec dataset_roi(const fs::path& data_root, const RoiSpec& fallback) {
  fs::path index = data_root / kDatasetIndex;
  if (!fs::exists(index)) return fallback;
  json j = read_json(index);
  if (!j.contains("roi")) return fallback;
  return {j["roi"].at("origin_x").get<int>(), j["roi"].at("origin_y").get<int>(), j["roi"].at("side").get<int>()};
}

std::vector<std::string> json_strings(const json& j, const char* key) {
  try {
    return j.at(key).get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    fail(ErrorCode::config, std::string("missing or malformed ") + key + ": " + e.what());
  }
}

std::string frame_id(const SubjectFrames& s, std::size_t frame) {
  return s.subject_id + "/" + std::to_string(frame);
}

}  // namespace

unsigned thread_count() {
  if (const char* env = std::getenv("NISDL_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw ? hw : 1;
}

std::vector<std::string> run_synth(const RunConfig& cfg, const fs::path& data_root) {
  cfg.synth.validate();
  std::vector<SubjectProfile> profiles = sample_profiles(cfg.synth);
  ensure_directory(data_root);
  parallel_for(profiles.size(), [&](std::size_t i) {
    RenderedSubject r = render_clip(profiles[i], cfg.synth);
    write_subject(data_root / profiles[i].subject_id, profiles[i], cfg.synth, r);
  });
  std::vector<std::string> ids;
  for (const auto& p : profiles) ids.push_back(p.subject_id);
  json index = {{"subjects", ids},
                {"roi", {{"origin_x", cfg.synth.roi.origin_x},
                         {"origin_y", cfg.synth.roi.origin_y},
                         {"side", cfg.synth.roi.side}}},
                {"synth", synth_spec_to_json(cfg.synth)}};
  write_json(data_root / kDatasetIndex, index);
  return ids;
}

std::vector<std::string> list_subjects(const fs::path& data_root) {
  return json_strings(read_json(data_root / kDatasetIndex), "subjects");
}

fs::path run_magnify_clip(const fs::path& manifest, const MagnifyConfig& cfg, const RoiSpec* roi,
                          const fs::path& out_dir) {
  VideoClip clip = load_clip(manifest);
  if (roi) {
    for (auto& f : clip.frames) {
      double t = f.timestamp;
      f = crop_roi(f, *roi);
      f.timestamp = t;
    }
  }
  MagnifyConfig m = cfg;
  m.frame_rate_hz = clip.frame_rate_hz;
  m.validate();
  VideoClip out = magnify_clip(denoise(clip, m.denoise_radius), m);
  return save_clip(out_dir, out);
}

void run_magnify_dataset(const RunConfig& cfg, const fs::path& data_root, const fs::path& magnified_root) {
  std::vector<std::string> ids = list_subjects(data_root);
  RoiSpec roi = dataset_roi(data_root, cfg.synth.roi);
  ensure_directory(magnified_root);
  parallel_for(ids.size(), [&](std::size_t i) {
    run_magnify_clip(data_root / ids[i] / kManifestName, cfg.magnify, &roi, magnified_root / ids[i]);
  });
  write_json(magnified_root / kDatasetIndex,
             {{"subjects", ids},
              {"roi", {{"origin_x", 0}, {"origin_y", 0}, {"side", roi.side}}},
              {"magnify", magnify_config_to_json(cfg.magnify)}});
}

namespace {

struct LabeledClip {
  std::vector<std::size_t> frame_index;  // into the clip
  std::vector<double> timestamps;
  std::vector<double> labels;
  std::vector<double> saturation;
};

LabeledClip label_clip(const fs::path& subject_dir, const RoiSpec& roi) {
  VideoClip clip = load_clip(subject_dir / kManifestName);
  DenseLabels labels = interpolate(read_trace_csv(subject_dir / "trace.csv"));
  LabeledClip out;
  for (std::size_t i = 0; i < clip.frames.size(); ++i) {
    double t = clip.frames[i].timestamp;
    if (t < labels.start() || t > labels.end()) continue;
    out.frame_index.push_back(i);
    out.timestamps.push_back(t);
    out.labels.push_back(label_frame(labels, t));
    out.saturation.push_back(mean_saturation(crop_roi(clip.frames[i], roi)));
  }
  if (out.labels.empty()) fail(ErrorCode::empty_data, subject_dir.string() + " has no frames inside its labeled span");
  return out;
}

}  // namespace

std::vector<SaturationTemperature> subject_pairs(const fs::path& subject_dir, const RoiSpec& roi) {
  LabeledClip lc = label_clip(subject_dir, roi);
  std::vector<SaturationTemperature> pairs(lc.labels.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) pairs[i] = {lc.saturation[i], lc.labels[i]};
  return pairs;
}

SsiTable run_fit_ssi(const RunConfig& cfg, const fs::path& data_root, const fs::path& ssi_path) {
  std::vector<std::string> ids = list_subjects(data_root);
  RoiSpec roi = dataset_roi(data_root, cfg.synth.roi);
  std::vector<SubjectSsi> fits(ids.size());
  parallel_for(ids.size(), [&](std::size_t i) {
    std::vector<SaturationTemperature> pairs = subject_pairs(data_root / ids[i], roi);
    fits[i].full = fit_ssi(pairs, ids[i]);
    fits[i].calibration = fit_ssi(calibration_prefix(pairs, cfg.calibration_fraction), ids[i]);
  });
  SsiTable table;
  for (std::size_t i = 0; i < ids.size(); ++i) table[ids[i]] = fits[i];
  if (ssi_path.has_parent_path()) ensure_directory(ssi_path.parent_path());
  write_ssi_table(ssi_path, table, cfg.calibration_fraction);
  return table;
}

Dataset load_dataset(const RunConfig& cfg, const fs::path& data_root, const fs::path& magnified_root,
                     const fs::path& ssi_path) {
  std::vector<std::string> ids = list_subjects(data_root);
  RoiSpec roi = dataset_roi(data_root, cfg.synth.roi);
  SsiTable table = read_ssi_table(ssi_path);
  Dataset data;
  data.subjects.resize(ids.size());
  parallel_for(ids.size(), [&](std::size_t i) {
    auto it = table.find(ids[i]);
    if (it == table.end()) fail(ErrorCode::io, ssi_path.string() + " has no entry for " + ids[i]);
    LabeledClip lc = label_clip(data_root / ids[i], roi);
    VideoClip mag = load_clip(magnified_root / ids[i] / kManifestName);
    SubjectFrames& s = data.subjects[i];
    s.subject_id = ids[i];
    s.side = roi.side;
    s.ssi = it->second;
    s.timestamps = lc.timestamps;
    s.labels = lc.labels;
    s.raw_saturation = lc.saturation;
    std::size_t per = static_cast<std::size_t>(roi.side) * roi.side * 3;
    s.images.resize(lc.frame_index.size() * per);
    for (std::size_t j = 0; j < lc.frame_index.size(); ++j) {
      std::size_t src = lc.frame_index[j];
      if (src >= mag.frames.size()) fail(ErrorCode::io, "magnified clip for " + ids[i] + " is shorter than the raw clip");
      const Frame& f = mag.frames[src];
      if (f.height != roi.side || f.width != roi.side) {
        fail(ErrorCode::shape, "magnified frame for " + ids[i] + " is not " + std::to_string(roi.side) + " square");
      }
      std::copy(f.data.begin(), f.data.end(), s.images.begin() + static_cast<std::ptrdiff_t>(j * per));
    }
    std::vector<SaturationTemperature> pairs(s.labels.size());
    s.calibration_count = calibration_prefix(pairs, cfg.calibration_fraction).size();
  });
  return data;
}

fs::path run_train(const RunConfig& cfg, Variant variant, const Dataset& data, const fs::path& out_dir) {
  SplitResult split = split_dataset(data, cfg.train);
  ensure_directory(out_dir);
  json split_doc = split.to_json();
  write_json(out_dir / "split.json", split_doc);
  json run_config = {{"run", to_json(cfg)}};

  if (variant == Variant::nipst) {
    Checkpoint ckpt;
    ckpt.model_id = variant_name(variant);
    ckpt.seed = cfg.seed;
    ckpt.config = run_config;
    ckpt.config["variant"] = ckpt.model_id;
    ckpt.config["train"] = train_config_to_json(cfg.train);
    ckpt.config["split"] = {{"train_subjects", split.train_subjects}, {"test_subjects", split.test_subjects}};
    // One calibration line per test subject.
    for (const auto& id : split.test_subjects) {
      const SubjectFrames& s = data.subject(id);
      std::vector<SaturationTemperature> pairs(s.calibration_count);
      for (std::size_t i = 0; i < pairs.size(); ++i) pairs[i] = {s.raw_saturation[i], s.labels[i]};
      SsiRecord line = fit_ssi(pairs, id);
      ckpt.tensors.push_back({id + ".k", Tensor({1}, line.k)});
      ckpt.tensors.push_back({id + ".b", Tensor({1}, line.b)});
    }
    fs::path path = out_dir / "final.bin";
    write_checkpoint(path, ckpt);
    return path;
  }

  BackboneConfig backbone = cfg.backbone;
  FusionModel model(variant, backbone, cfg.seed);
  TrainOutput output{out_dir, run_config};
  TrainResult result = train(model, data, split, cfg.train, output);
  return result.final_checkpoint;
}

ErrorReport run_evaluate(const fs::path& checkpoint, const Dataset& data, const fs::path& split_path) {
  if (!fs::exists(checkpoint)) fail(ErrorCode::io, "checkpoint not found: " + checkpoint.string());
  Checkpoint ckpt = read_checkpoint(checkpoint);
  json split_doc;
  if (!split_path.empty()) {
    split_doc = read_json(split_path);
  } else if (ckpt.config.contains("split")) {
    split_doc = ckpt.config["split"];
  } else {
    fail(ErrorCode::config, checkpoint.string() + " carries no split; pass one explicitly");
  }
  TrainConfig tcfg;
  if (ckpt.config.contains("train")) {
    const json& t = ckpt.config["train"];
    tcfg.validation_size = t.value("validation_size", tcfg.validation_size);
    tcfg.seed = t.value("seed", tcfg.seed);
  }
  SplitResult split = split_from_subjects(data, tcfg, json_strings(split_doc, "train_subjects"),
                                          json_strings(split_doc, "test_subjects"));
  if (split.test.empty()) fail(ErrorCode::empty_data, "split has no test frames");

  std::vector<double> pred;
  Variant variant = parse_variant(ckpt.model_id);
  if (variant == Variant::nipst) {
    for (const auto& ref : split.test) {
      const SubjectFrames& s = data.subjects[ref.subject];
      const Tensor* k = ckpt.find(s.subject_id + ".k");
      const Tensor* b = ckpt.find(s.subject_id + ".b");
      if (!k || !b) fail(ErrorCode::shape, "nipst checkpoint has no line for " + s.subject_id);
      pred.push_back((*k)[0] * s.raw_saturation[ref.frame] + (*b)[0]);
    }
  } else {
    BackboneConfig backbone = backbone_from_json(ckpt.config.at("backbone"));
    FusionModel model(variant, backbone, ckpt.seed);
    ModelParams params = model.params();
    restore(ckpt, params);
    Normalization norm = Normalization::from_json(ckpt.config.at("normalization"));
    pred = predict(model, data, split.test, norm);
  }

  std::vector<FramePrediction> frames;
  frames.reserve(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const auto& ref = split.test[i];
    const SubjectFrames& s = data.subjects[ref.subject];
    frames.push_back({frame_id(s, ref.frame), pred[i], s.labels[ref.frame]});
  }
  return make_report(ckpt.model_id, std::move(frames));
}

std::vector<ErrorReport> run_pipeline(const RunConfig& cfg, const fs::path& out_root) {
  cfg.validate();
  RunLayout layout{out_root};
  ensure_directory(out_root);
  write_json(out_root / "config.json", to_json(cfg));
  run_synth(cfg, layout.data());
  run_magnify_dataset(cfg, layout.data(), layout.magnified());
  run_fit_ssi(cfg, layout.data(), layout.ssi());
  Dataset data = load_dataset(cfg, layout.data(), layout.magnified(), layout.ssi());

  const std::vector<Variant> variants = {Variant::nisdl1, Variant::nisdl2, Variant::dl, Variant::nipst};
  std::vector<fs::path> checkpoints(variants.size());
  parallel_for(variants.size(), [&](std::size_t i) {
    checkpoints[i] = run_train(cfg, variants[i], data, layout.model_dir(variants[i]));
  });

  fs::path reports_dir = out_root / cfg.evaluate.report_dir;
  ensure_directory(reports_dir);
  std::vector<ErrorReport> reports;
  json summary = json::object();
  for (std::size_t i = 0; i < variants.size(); ++i) {
    ErrorReport r = run_evaluate(checkpoints[i], data);
    std::string name = variant_name(variants[i]);
    write_report(reports_dir / (name + ".json"), r);
    if (cfg.evaluate.write_csv) write_report_csv(reports_dir / (name + ".csv"), r);
    summary[name] = {{"mean", r.mean}, {"median", r.median}, {"n", r.n}};
    reports.push_back(std::move(r));
  }
  write_json(reports_dir / "summary.json", summary);
  return reports;
}

}  // namespace nisdl
