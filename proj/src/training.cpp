#include "nisdl/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>

#include "nisdl/checkpoint.hpp"
#include "nisdl/config.hpp"
#include "nisdl/error.hpp"
#include "nisdl/io.hpp"

namespace nisdl {

namespace {

// Portable Fisher-Yates; std::shuffle's draw pattern varies by library.
template <typename T>
void seeded_shuffle(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(v[i - 1], v[j]);
  }
}

std::size_t subject_index(const Dataset& data, const std::string& id) {
  for (std::size_t i = 0; i < data.subjects.size(); ++i) {
    if (data.subjects[i].subject_id == id) return i;
  }
  fail(ErrorCode::split, "subject " + id + " is not in the dataset");
}

double stddev_or_one(double sum, double sum_sq, double n) {
  double mean = sum / n;
  double var = sum_sq / n - mean * mean;
  return var > 1e-12 ? std::sqrt(var) : 1.0;
}

}  // namespace

void TrainConfig::validate() const {
  if (batch_size < 1) fail(ErrorCode::config, "train.batch_size must be >= 1");
  if (epochs < 0) fail(ErrorCode::config, "train.epochs must be >= 0");
  if (split_train < 1 || split_test < 1) fail(ErrorCode::config, "train.split ratio terms must be >= 1");
  if (validation_size < 0) fail(ErrorCode::config, "train.validation_size must be >= 0");
  if (checkpoint_every_images < 1) fail(ErrorCode::config, "train.checkpoint_every_images must be >= 1");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    fail(ErrorCode::config, "train.learning_rate must be finite and >= 0");
  }
}

std::size_t Dataset::frame_count() const {
  std::size_t n = 0;
  for (const auto& s : subjects) n += s.size();
  return n;
}

const SubjectFrames& Dataset::subject(const std::string& id) const { return subjects[subject_index(*this, id)]; }

nlohmann::json SplitResult::to_json() const {
  return {{"train_subjects", train_subjects},
          {"test_subjects", test_subjects},
          {"n_train_frames", train.size()},
          {"n_validation_frames", validation.size()},
          {"n_test_frames", test.size()}};
}

void split_subjects(const std::vector<std::string>& ids, const TrainConfig& cfg, std::vector<std::string>& train,
                    std::vector<std::string>& test) {
  cfg.validate();
  if (ids.size() < 4) {
    fail(ErrorCode::split, "need at least 4 subjects for a subject-level split, got " + std::to_string(ids.size()));
  }
  std::vector<std::string> order = ids;
  std::sort(order.begin(), order.end());
  std::mt19937_64 rng(cfg.seed);
  seeded_shuffle(order, rng);
  std::size_t n_test = std::max<std::size_t>(1, order.size() * cfg.split_test / (cfg.split_train + cfg.split_test));
  test.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
  train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
  std::sort(test.begin(), test.end());
  std::sort(train.begin(), train.end());
}

SplitResult split_from_subjects(const Dataset& data, const TrainConfig& cfg,
                                const std::vector<std::string>& train_subjects,
                                const std::vector<std::string>& test_subjects) {
  for (const auto& t : test_subjects) {
    if (std::find(train_subjects.begin(), train_subjects.end(), t) != train_subjects.end()) {
      fail(ErrorCode::split, "subject " + t + " is in both train and test sets");
    }
  }
  SplitResult r;
  r.train_subjects = train_subjects;
  r.test_subjects = test_subjects;

  std::vector<FrameRef> pool;
  for (const auto& id : train_subjects) {
    std::size_t s = subject_index(data, id);
    for (std::size_t f = 0; f < data.subjects[s].size(); ++f) pool.push_back({s, f, Provenance::train});
  }
  if (pool.empty()) fail(ErrorCode::split, "training subjects contribute no frames");
  std::size_t n_val = static_cast<std::size_t>(cfg.validation_size);
  if (n_val >= pool.size()) {
    fail(ErrorCode::split, "validation_size " + std::to_string(n_val) + " leaves no training frames out of " +
                               std::to_string(pool.size()));
  }
  std::mt19937_64 rng(cfg.seed ^ 0x5bd1e995ULL);
  std::vector<std::size_t> idx(pool.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  seeded_shuffle(idx, rng);
  std::vector<char> is_val(pool.size(), 0);
  for (std::size_t i = 0; i < n_val; ++i) is_val[idx[i]] = 1;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    FrameRef ref = pool[i];
    if (is_val[i]) {
      ref.role = Provenance::validation;
      r.validation.push_back(ref);
    } else {
      r.train.push_back(ref);
    }
  }

  for (const auto& id : test_subjects) {
    std::size_t s = subject_index(data, id);
    const auto& sub = data.subjects[s];
    for (std::size_t f = sub.calibration_count; f < sub.size(); ++f) r.test.push_back({s, f, Provenance::test});
  }
  return r;
}

SplitResult split_dataset(const Dataset& data, const TrainConfig& cfg) {
  std::vector<std::string> ids;
  for (const auto& s : data.subjects) ids.push_back(s.subject_id);
  std::vector<std::string> train_ids, test_ids;
  split_subjects(ids, cfg, train_ids, test_ids);
  return split_from_subjects(data, cfg, train_ids, test_ids);
}

nlohmann::json Normalization::to_json() const {
  return {{"target_mean", target_mean},
          {"target_scale", target_scale},
          {"ssi_mean", ssi_mean},
          {"ssi_scale", ssi_scale},
          {"channel_mean", {channel_mean[0], channel_mean[1], channel_mean[2]}},
          {"channel_scale", {channel_scale[0], channel_scale[1], channel_scale[2]}}};
}

Normalization Normalization::from_json(const nlohmann::json& j) {
  Normalization n;
  try {
    n.target_mean = j.at("target_mean").get<double>();
    n.target_scale = j.at("target_scale").get<double>();
    n.ssi_mean = j.at("ssi_mean").get<double>();
    n.ssi_scale = j.at("ssi_scale").get<double>();
    for (int c = 0; c < 3; ++c) {
      n.channel_mean[c] = j.at("channel_mean").at(c).get<double>();
      n.channel_scale[c] = j.at("channel_scale").at(c).get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::config, std::string("normalization block: ") + e.what());
  }
  return n;
}

double model_ssi(const SubjectFrames& subject, Provenance) { return subject.ssi.calibration.k; }

Normalization fit_normalization(const Dataset& data, const std::vector<FrameRef>& train_frames) {
  if (train_frames.empty()) fail(ErrorCode::empty_data, "no training frames to normalize");
  Normalization n;
  double t_sum = 0.0, t_sq = 0.0;
  double c_sum[3] = {0, 0, 0}, c_sq[3] = {0, 0, 0};
  double pixels = 0.0;
  for (const auto& ref : train_frames) {
    const auto& sub = data.subjects[ref.subject];
    double y = sub.labels[ref.frame];
    t_sum += y;
    t_sq += y * y;
    const float* img = sub.image(ref.frame);
    std::size_t n_px = static_cast<std::size_t>(sub.side) * sub.side;
    for (std::size_t p = 0; p < n_px; ++p) {
      for (int c = 0; c < 3; ++c) {
        double v = img[p * 3 + c];
        c_sum[c] += v;
        c_sq[c] += v * v;
      }
    }
    pixels += static_cast<double>(n_px);
  }
  double nf = static_cast<double>(train_frames.size());
  n.target_mean = t_sum / nf;
  n.target_scale = stddev_or_one(t_sum, t_sq, nf);
  for (int c = 0; c < 3; ++c) {
    n.channel_mean[c] = c_sum[c] / pixels;
    n.channel_scale[c] = stddev_or_one(c_sum[c], c_sq[c], pixels);
  }

  // One SSI value per training subject, not per frame.
  std::vector<std::size_t> seen;
  double s_sum = 0.0, s_sq = 0.0;
  for (const auto& ref : train_frames) {
    if (std::find(seen.begin(), seen.end(), ref.subject) != seen.end()) continue;
    seen.push_back(ref.subject);
    double k = model_ssi(data.subjects[ref.subject], Provenance::train);
    s_sum += k;
    s_sq += k * k;
  }
  double ns = static_cast<double>(seen.size());
  n.ssi_mean = s_sum / ns;
  n.ssi_scale = stddev_or_one(s_sum, s_sq, ns);
  return n;
}

void assemble_batch(const Dataset& data, std::span<const FrameRef> refs, const Normalization& norm, Tensor& images,
                    std::vector<double>& ssi, Tensor& targets) {
  if (refs.empty()) fail(ErrorCode::empty_data, "empty batch");
  std::size_t side = static_cast<std::size_t>(data.subjects[refs[0].subject].side);
  std::size_t per = side * side * 3;
  images = Tensor({refs.size(), side, side, 3});
  targets = Tensor({refs.size(), 1});
  ssi.assign(refs.size(), 0.0);
  double inv_scale[3];
  for (int c = 0; c < 3; ++c) inv_scale[c] = 1.0 / norm.channel_scale[c];
  for (std::size_t i = 0; i < refs.size(); ++i) {
    const auto& sub = data.subjects[refs[i].subject];
    if (static_cast<std::size_t>(sub.side) != side) fail(ErrorCode::shape, "mixed ROI sizes in one batch");
    const float* src = sub.image(refs[i].frame);
    double* dst = images.data() + i * per;
    for (std::size_t p = 0; p < per; p += 3) {
      for (int c = 0; c < 3; ++c) dst[p + c] = (src[p + c] - norm.channel_mean[c]) * inv_scale[c];
    }
    ssi[i] = (model_ssi(sub, refs[i].role) - norm.ssi_mean) / norm.ssi_scale;
    targets[i] = (sub.labels[refs[i].frame] - norm.target_mean) / norm.target_scale;
  }
}

std::vector<double> predict(FusionModel& model, const Dataset& data, std::span<const FrameRef> refs,
                            const Normalization& norm, int batch_size) {
  std::vector<double> out;
  out.reserve(refs.size());
  Tensor images, targets;
  std::vector<double> ssi;
  std::size_t step = static_cast<std::size_t>(std::max(1, batch_size));
  for (std::size_t start = 0; start < refs.size(); start += step) {
    auto chunk = refs.subspan(start, std::min(step, refs.size() - start));
    assemble_batch(data, chunk, norm, images, ssi, targets);
    Tensor pred = model.forward(images, ssi);
    for (std::size_t i = 0; i < chunk.size(); ++i) out.push_back(pred[i] * norm.target_scale + norm.target_mean);
  }
  return out;
}

void write_run_log(const std::filesystem::path& path, const std::vector<CheckpointEvent>& log) {
  std::ofstream os(path);
  if (!os) fail(ErrorCode::io, "cannot write " + path.string());
  os.precision(10);
  os << "images_seen,val_mae,wall_time_s\n";
  for (const auto& e : log) os << e.images_seen << ',' << e.val_mae << ',' << e.wall_time_s << '\n';
}

TrainResult train(FusionModel& model, const Dataset& data, const SplitResult& split, const TrainConfig& cfg,
                  const TrainOutput& output) {
  cfg.validate();
  if (split.train.empty()) fail(ErrorCode::empty_data, "training set is empty");
  for (const auto& ref : split.train) {
    if (ref.role != Provenance::train) fail(ErrorCode::internal, "non-training frame in the training list");
  }
  for (const auto& ref : split.validation) {
    if (ref.role != Provenance::validation) fail(ErrorCode::internal, "non-validation frame in the validation list");
  }

  for (const auto& id : split.test_subjects) {
    std::size_t s = subject_index(data, id);
    for (const auto* list : {&split.train, &split.validation}) {
      for (const auto& ref : *list) {
        if (ref.subject == s) fail(ErrorCode::internal, "test subject " + id + " leaked into training data");
      }
    }
  }

  TrainResult result;
  result.norm = fit_normalization(data, split.train);
  if (!output.output_dir.empty()) ensure_directory(output.output_dir);

  const std::string model_id = variant_name(model.variant());
  auto checkpoint_config = [&](long long images_seen) {
    nlohmann::json c = output.run_config;
    c["variant"] = model_id;
    c["backbone"] = backbone_to_json(model.config());
    c["normalization"] = result.norm.to_json();
    c["train"] = train_config_to_json(cfg);
    c["split"] = {{"train_subjects", split.train_subjects}, {"test_subjects", split.test_subjects}};
    c["images_seen"] = images_seen;
    return c;
  };

  ModelParams params = model.params();
  params.zero_grad();
  std::mt19937_64 rng(cfg.seed ^ 0x2545f4914f6cdd1dULL);
  std::vector<FrameRef> order = split.train;
  auto t0 = std::chrono::steady_clock::now();
  long long images_seen = 0;
  long long next_validation = cfg.checkpoint_every_images;
  std::size_t batch_index = 0;
  Tensor images, targets;
  std::vector<double> ssi;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    seeded_shuffle(order, rng);
    double loss_sum = 0.0;
    std::size_t n_batches = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      std::size_t len = std::min(static_cast<std::size_t>(cfg.batch_size), order.size() - start);
      std::span<const FrameRef> batch(order.data() + start, len);
      assemble_batch(data, batch, result.norm, images, ssi, targets);
      Tensor pred = model.forward(images, ssi);
      LossResult loss = mse_loss(pred, targets);
      if (!std::isfinite(loss.loss)) {
        fail(ErrorCode::divergence, "non-finite loss at batch " + std::to_string(batch_index) + " (epoch " +
                                        std::to_string(epoch) + ")");
      }
      model.backward(loss.grad);
      sgd_step(params, cfg.learning_rate);
      loss_sum += loss.loss;
      ++n_batches;
      ++batch_index;
      images_seen += static_cast<long long>(len);

      while (images_seen >= next_validation) {
        CheckpointEvent ev;
        ev.images_seen = next_validation;
        if (!split.validation.empty()) {
          std::vector<double> p = predict(model, data, split.validation, result.norm);
          double mae = 0.0;
          for (std::size_t i = 0; i < p.size(); ++i) {
            const auto& ref = split.validation[i];
            mae += std::abs(p[i] - data.subjects[ref.subject].labels[ref.frame]);
          }
          ev.val_mae = mae / static_cast<double>(p.size());
        } else {
          ev.val_mae = std::numeric_limits<double>::infinity();
        }
        ev.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (ev.val_mae < cfg.checkpoint_threshold_c) {
          ev.saved = true;
          if (!output.output_dir.empty()) {
            auto path = output.output_dir / ("ckpt_" + std::to_string(ev.images_seen) + ".bin");
            write_checkpoint(path, snapshot(model_id, params, checkpoint_config(ev.images_seen)));
            result.saved_checkpoints.push_back(path);
          }
        }
        result.log.push_back(ev);
        next_validation += cfg.checkpoint_every_images;
      }
    }
    result.epoch_loss.push_back(n_batches ? loss_sum / static_cast<double>(n_batches) : 0.0);
  }

  if (!output.output_dir.empty()) {
    result.final_checkpoint = output.output_dir / "final.bin";
    write_checkpoint(result.final_checkpoint, snapshot(model_id, params, checkpoint_config(images_seen)));
    write_run_log(output.output_dir / "run_log.csv", result.log);
  }
  return result;
}

}  // namespace nisdl
