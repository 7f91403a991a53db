#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "nisdl/config.hpp"
#include "nisdl/evaluate.hpp"
#include "nisdl/training.hpp"

namespace nisdl {

/// Run directory layout:
///   data/dataset.json, data/<subject>/{frames/, clip.json, trace.csv, truth.json}
///   magnified/<subject>/{frames/, clip.json}   ROI crops after denoise + EVM
///   ssi.json
///   models/<variant>/{final.bin, ckpt_<n>.bin, run_log.csv, split.json}
///   <report_dir>/<variant>.{json,csv}, <report_dir>/summary.json
struct RunLayout {
  std::filesystem::path root;
  std::filesystem::path data() const { return root / "data"; }
  std::filesystem::path magnified() const { return root / "magnified"; }
  std::filesystem::path ssi() const { return root / "ssi.json"; }
  std::filesystem::path model_dir(Variant v) const { return root / "models" / variant_name(v); }
};

/// NISDL_THREADS when set to a positive integer, else hardware concurrency.
unsigned thread_count();

/// Writes the synthetic subjects; returns their ids.
std::vector<std::string> run_synth(const RunConfig& cfg, const std::filesystem::path& data_root);

std::vector<std::string> list_subjects(const std::filesystem::path& data_root);

/// Denoise then magnify one clip, optionally cropping an ROI first. The clip's
/// own frame rate replaces cfg.frame_rate_hz. Returns the new manifest path.
std::filesystem::path run_magnify_clip(const std::filesystem::path& manifest, const MagnifyConfig& cfg,
                                       const RoiSpec* roi, const std::filesystem::path& out_dir);

/// ROI crop + denoise + magnify for every subject under data_root.
void run_magnify_dataset(const RunConfig& cfg, const std::filesystem::path& data_root,
                         const std::filesystem::path& magnified_root);

/// Labeled (raw ROI mean saturation, dense label) pairs for one subject.
std::vector<SaturationTemperature> subject_pairs(const std::filesystem::path& subject_dir, const RoiSpec& roi);

SsiTable run_fit_ssi(const RunConfig& cfg, const std::filesystem::path& data_root,
                     const std::filesystem::path& ssi_path);

Dataset load_dataset(const RunConfig& cfg, const std::filesystem::path& data_root,
                     const std::filesystem::path& magnified_root, const std::filesystem::path& ssi_path);

/// Trains one variant (NIPST stores its calibration lines) into out_dir.
/// Returns the final checkpoint path.
std::filesystem::path run_train(const RunConfig& cfg, Variant variant, const Dataset& data,
                                const std::filesystem::path& out_dir);

/// Evaluates a checkpoint on the test frames of its stored split (or of
/// split_path when given).
ErrorReport run_evaluate(const std::filesystem::path& checkpoint, const Dataset& data,
                         const std::filesystem::path& split_path = {});

/// synth -> magnify -> fit-ssi -> train all four -> evaluate. Returns the
/// reports in variant order nisdl1, nisdl2, dl, nipst.
std::vector<ErrorReport> run_pipeline(const RunConfig& cfg, const std::filesystem::path& out_root);

}  // namespace nisdl
