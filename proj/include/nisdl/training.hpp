#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "nisdl/models.hpp"
#include "nisdl/ssi.hpp"

namespace nisdl {

struct TrainConfig {
  int batch_size = 32;
  int epochs = 8;
  int split_train = 12;
  int split_test = 4;
  int validation_size = 500;
  double checkpoint_threshold_c = 0.46;
  long long checkpoint_every_images = 30000;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Every frame of one subject that falls inside its labeled span.
/// images: n x side x side x 3, magnified ROI crops.
struct SubjectFrames {
  std::string subject_id;
  int side = 0;
  std::vector<float> images;
  std::vector<double> timestamps;
  std::vector<double> labels;           // dense label per frame
  std::vector<double> raw_saturation;   // mean S of the unmagnified ROI
  SubjectSsi ssi;
  std::size_t calibration_count = 0;    // leading frames used for calibration

  std::size_t size() const { return timestamps.size(); }
  const float* image(std::size_t i) const {
    return images.data() + i * static_cast<std::size_t>(side) * side * 3;
  }
};

struct Dataset {
  std::vector<SubjectFrames> subjects;
  std::size_t frame_count() const;
  const SubjectFrames& subject(const std::string& id) const;
};

enum class Provenance { train, validation, test };

struct FrameRef {
  std::size_t subject = 0;
  std::size_t frame = 0;
  Provenance role = Provenance::train;
};

/// Subject-level partition plus frame lists. Test frames exclude each test
/// subject's calibration prefix.
struct SplitResult {
  std::vector<std::string> train_subjects;
  std::vector<std::string> test_subjects;
  std::vector<FrameRef> train;
  std::vector<FrameRef> validation;
  std::vector<FrameRef> test;

  nlohmann::json to_json() const;
};

/// Seeded subject permutation; the first n * test / (train + test) subjects
/// (at least one) are held out. Fewer than 4 subjects -> ErrorCode::split.
void split_subjects(const std::vector<std::string>& ids, const TrainConfig& cfg, std::vector<std::string>& train,
                    std::vector<std::string>& test);

SplitResult split_dataset(const Dataset& data, const TrainConfig& cfg);

/// Rebuilds the frame lists for a stored subject partition.
SplitResult split_from_subjects(const Dataset& data, const TrainConfig& cfg,
                                const std::vector<std::string>& train_subjects,
                                const std::vector<std::string>& test_subjects);

/// Affine maps applied to model inputs and targets, fitted on training frames.
struct Normalization {
  double target_mean = 0.0;
  double target_scale = 1.0;
  double ssi_mean = 0.0;
  double ssi_scale = 1.0;
  double channel_mean[3] = {0.0, 0.0, 0.0};
  double channel_scale[3] = {1.0, 1.0, 1.0};

  nlohmann::json to_json() const;
  static Normalization from_json(const nlohmann::json& j);
};

Normalization fit_normalization(const Dataset& data, const std::vector<FrameRef>& train_frames);

/// SSI fed to the models: the calibration-prefix slope for every subject, so
/// training and inference see the same estimator.
double model_ssi(const SubjectFrames& subject, Provenance role);

/// Batch tensors for a list of frames.
void assemble_batch(const Dataset& data, std::span<const FrameRef> refs, const Normalization& norm, Tensor& images,
                    std::vector<double>& ssi, Tensor& targets);

/// Predictions in C for each ref, evaluated in batches.
std::vector<double> predict(FusionModel& model, const Dataset& data, std::span<const FrameRef> refs,
                            const Normalization& norm, int batch_size = 64);

struct CheckpointEvent {
  long long images_seen = 0;
  double val_mae = 0.0;
  double wall_time_s = 0.0;
  bool saved = false;
};

struct TrainResult {
  std::vector<CheckpointEvent> log;
  std::vector<double> epoch_loss;  // mean normalized batch loss per epoch
  Normalization norm;
  std::filesystem::path final_checkpoint;
  std::vector<std::filesystem::path> saved_checkpoints;
};

/// Optional artifacts; an empty output_dir keeps everything in memory.
struct TrainOutput {
  std::filesystem::path output_dir;
  nlohmann::json run_config = nlohmann::json::object();
};

/// Seeded shuffled mini-batch SGD on MSE of the normalized target.
/// Throws ErrorCode::divergence naming the batch on a non-finite loss, and
/// ErrorCode::internal if a test frame reaches a gradient step or validation.
TrainResult train(FusionModel& model, const Dataset& data, const SplitResult& split, const TrainConfig& cfg,
                  const TrainOutput& output = {});

void write_run_log(const std::filesystem::path& path, const std::vector<CheckpointEvent>& log);

}  // namespace nisdl
