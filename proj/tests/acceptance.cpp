// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.
//   nisdl_acceptance --readme README.md --work DIR [--only 1,2,...]
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "nisdl/config.hpp"
#include "nisdl/evaluate.hpp"
#include "nisdl/labels.hpp"
#include "nisdl/magnify.hpp"
#include "nisdl/models.hpp"
#include "nisdl/pipeline.hpp"
#include "nisdl/ssi.hpp"
#include "nisdl/synthdata.hpp"
#include "support.hpp"

using namespace nisdl;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

Outcome reproducibility(const fs::path& readme) {
  std::string text = testing::slurp(readme);
  std::string lower = text;
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  bool stated = lower.find("not reproduc") != std::string::npos && lower.find("0.2647") != std::string::npos;
  return {stated, stated ? "README states that the original human-subject figures (NISDL-II mean 0.2647 C) "
                           "depend on a private dataset and are not reproduced; acceptance rests on the checks below"
                         : "README lacks the reproducibility statement (" + readme.string() + ")"};
}

Outcome magnification() {
  auto t0 = Clock::now();
  MagnifyConfig cfg;  // defaults: xi 10, 30 fps
  cfg.clamp_output = false;
  const double rate = cfg.frame_rate_hz;
  const double f = std::sqrt(cfg.low_cut_hz * cfg.high_cut_hz);
  const double a = 0.01;
  const int n = 1800, side = 24;

  // bandpass gain at f, from the filter alone
  std::vector<double> tone(n);
  for (int i = 0; i < n; ++i) tone[i] = std::sin(2 * M_PI * f * i / rate);
  std::vector<double> filtered = temporal_bandpass(tone, cfg);
  const std::size_t w = testing::whole_cycles(n / 2, f, rate);
  const double g = testing::tone_amplitude(filtered, n - w, w, f, rate);

  VideoClip clip;
  clip.frame_rate_hz = rate;
  for (int i = 0; i < n; ++i) {
    Frame fr = Frame::filled(side, side);
    fr.timestamp = i / rate;
    for (int y = 0; y < side; ++y)
      for (int x = 0; x < side; ++x)
        for (int c = 0; c < 3; ++c)
          fr.at(y, x, c) = 0.3 + 0.3 * x / (side - 1) + 0.1 * c + 0.02 * ((x + y) % 2) + tone[i] * a;
    clip.frames.push_back(std::move(fr));
  }
  VideoClip out = magnify_clip(clip, cfg);
  const double lo = 0.5 * (1 + cfg.xi) * g * a, hi = 1.1 * (1 + cfg.xi) * a;
  double amin = 1e9, amax = 0;
  std::vector<double> series(n);
  for (std::size_t k = 0; k < clip.frames[0].data.size(); ++k) {
    for (int i = 0; i < n; ++i) series[i] = out.frames[i].data[k];
    double amp = testing::tone_amplitude(series, n - w, w, f, rate);
    amin = std::min(amin, amp);
    amax = std::max(amax, amp);
  }

  MagnifyConfig zero = cfg;
  zero.xi = 0.0;
  VideoClip same = magnify_clip(clip, zero);
  double worst = 0;
  for (int i = 0; i < n; ++i)
    for (std::size_t k = 0; k < clip.frames[i].data.size(); ++k)
      worst = std::max(worst, std::abs(same.frames[i].data[k] - clip.frames[i].data[k]));

  const double secs = seconds_since(t0);
  bool pass = amin >= lo && amax <= hi && worst < 1e-6 && secs < 30;
  std::ostringstream d;
  d << "f=" << fmt("%.4f", f) << " Hz, bandpass gain g=" << fmt("%.4f", g) << ", output amplitude/a in ["
    << fmt("%.3f", amin / a) << ", " << fmt("%.3f", amax / a) << "] within [" << fmt("%.3f", lo / a) << ", "
    << fmt("%.3f", hi / a) << "]; xi=0 max deviation " << fmt("%.2e", worst) << "; " << fmt("%.1f", secs) << " s";
  return {pass, d.str()};
}

// (ROI mean saturation, label) pairs as the pipeline builds them, with frames
// passed through 8-bit storage but kept in memory.
std::vector<SaturationTemperature> rendered_pairs(const RenderedSubject& subject, const RoiSpec& roi) {
  DenseLabels labels = interpolate(subject.trace);
  std::vector<SaturationTemperature> pairs;
  for (const Frame& f : subject.clip.frames) {
    if (f.timestamp < labels.start() || f.timestamp > labels.end()) continue;
    Frame stored = frame_from_rgb8(frame_to_rgb8(f), f.height, f.width);
    pairs.push_back({mean_saturation(crop_roi(stored, roi)), label_frame(labels, f.timestamp)});
  }
  return pairs;
}

Outcome ssi_recovery() {
  auto t0 = Clock::now();
  SynthDatasetSpec spec = RunConfig::defaults(ScaleProfile::desk).synth;
  spec.trace_noise_c = 0.0;
  spec.tint_noise = 0.0;
  double worst_clean = 0, worst_noisy = 0;
  for (double sigma : {0.0, 0.01}) {
    spec.saturation_noise_sigma = sigma;
    for (const auto& p : sample_profiles(spec)) {
      SsiRecord r = fit_ssi(rendered_pairs(render_clip(p, spec), spec.roi), p.subject_id);
      double rel = std::abs(r.k - p.k_true) / p.k_true;
      (sigma == 0.0 ? worst_clean : worst_noisy) = std::max(sigma == 0.0 ? worst_clean : worst_noisy, rel);
    }
  }
  const double secs = seconds_since(t0);
  bool pass = worst_clean < 0.01 && worst_noisy < 0.10 && secs < 10;
  return {pass, "worst relative k error " + fmt("%.4f", worst_clean) + " noise-free, " + fmt("%.4f", worst_noisy) +
                    " with sigma 0.01 (" + std::to_string(spec.n_subjects) + " subjects each); " +
                    fmt("%.1f", secs) + " s"};
}

double check_full_model(FusionModel& m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Tensor x = testing::random_tensor({2, 32, 32, 3}, rng);
  std::vector<double> ssi = {0.3, -0.7};
  ModelParams params = m.params();
  testing::randomize_biases(params.tensors, rng);
  Tensor y = m.forward(x, ssi);
  Tensor r = testing::random_tensor(y.shape(), rng);
  params.zero_grad();
  std::vector<double> g_ssi = m.backward(r);
  auto loss = [&] { return testing::dot(m.forward(x, ssi), r); };
  double worst = 0;
  if (m.variant() != Variant::dl)
    for (int i = 0; i < 2; ++i)
      worst = std::max(worst, testing::rel_error(g_ssi[i], testing::kink_safe_derivative(loss, ssi[i])));
  for (auto* p : params.tensors) {
    const std::size_t stride = std::max<std::size_t>(1, p->value.size() / 48);
    for (std::size_t i = 0; i < p->value.size(); i += stride)
      worst = std::max(worst, testing::rel_error(p->grad[i], testing::kink_safe_derivative(loss, p->value[i])));
  }
  return worst;
}

Outcome gradients() {
  auto t0 = Clock::now();
  std::mt19937_64 rng(2024);
  std::map<std::string, double> worst;
  {
    Conv2d c("conv2d", 3, 4, 3);
    c.initialize(rng);
    worst["conv2d"] = testing::check_layer(c, testing::random_tensor({2, 5, 6, 3}, rng), rng);
    Conv1d c1("conv1d", 2, 3, 3);
    c1.initialize(rng);
    worst["conv1d"] = testing::check_layer(c1, testing::random_tensor({2, 7, 2}, rng), rng);
    Dense d("dense", 6, 4);
    d.initialize(rng);
    worst["dense"] = testing::check_layer(d, testing::random_tensor({3, 6}, rng), rng);
    Relu relu("relu");
    worst["relu"] = testing::check_layer(relu, testing::random_tensor({4, 9}, rng), rng);
    AvgPool2d p2("avgpool2d", 2);
    worst["avgpool2d"] = testing::check_layer(p2, testing::random_tensor({2, 5, 4, 3}, rng), rng);
    AvgPool1d p1("avgpool1d", 3);
    worst["avgpool1d"] = testing::check_layer(p1, testing::random_tensor({2, 9, 2}, rng), rng);
    Flatten fl("flatten");
    worst["flatten"] = testing::check_layer(fl, testing::random_tensor({2, 3, 2, 2}, rng), rng);
  }
  BackboneConfig desk = BackboneConfig::desk();
  std::size_t max_params = 0;
  for (Variant v : {Variant::nisdl1, Variant::nisdl2, Variant::dl}) {
    FusionModel m(v, desk, 31);
    max_params = std::max(max_params, m.parameter_count());
    worst[variant_name(v)] = check_full_model(m, 77);
  }
  const double secs = seconds_since(t0);
  double overall = 0;
  std::ostringstream d;
  for (const auto& [k, v] : worst) {
    overall = std::max(overall, v);
    d << k << " " << fmt("%.1e", v) << ", ";
  }
  d << "largest desk model " << max_params << " params; " << fmt("%.1f", secs) << " s";
  return {overall < 1e-4 && max_params <= 50000 && secs < 120, d.str()};
}

Outcome shapes() {
  auto t0 = Clock::now();
  BackboneConfig paper = BackboneConfig::paper();
  bool ok = true;
  std::ostringstream d;
  for (std::size_t n : {1u, 2u, 32u}) {
    auto s1 = build_nisdl1(paper).propagate_shapes(n);
    auto s2 = build_nisdl2(paper).propagate_shapes(n);
    ok = ok && s1.at("fusion_input") == Shape{n, 150, 150, 4};
    ok = ok && s2.at("backbone_output") == Shape{n, 4, 4, 1920};
    ok = ok && s2.at("ssi_features") == Shape{n, 640};
    ok = ok && s2.at("concat_features") == Shape{n, 2560};
    if (n == 2)
      d << "fused input " << shape_string(s1.at("fusion_input")) << ", backbone "
        << shape_string(s2.at("backbone_output")) << ", SSI features " << shape_string(s2.at("ssi_features"))
        << ", head ";
  }
  auto head = build_nisdl2(paper).head_dims();
  std::vector<std::pair<std::size_t, std::size_t>> expect = {{2560, 1024}, {1024, 512}, {512, 1}};
  ok = ok && head == expect;
  for (std::size_t i = 0; i < head.size(); ++i) d << (i ? "->" : "") << head[i].first;
  if (!head.empty()) d << "->" << head.back().second;
  const double secs = seconds_since(t0);
  d << "; " << fmt("%.2f", secs) << " s";
  return {ok && secs < 10, d.str()};
}

Outcome evaluation() {
  auto bins = bin_errors(std::vector<double>{0.1, 0.3, 0.6, 0.9, 1.5});
  bool ok = std::all_of(bins.begin(), bins.end(), [](double b) { return b == 0.2; });

  std::mt19937_64 rng(99);
  std::gamma_distribution<double> g(2.0, 0.15);
  std::vector<double> e(1000);
  for (auto& v : e) v = g(rng);
  Summary s = summarize(e);
  std::vector<double> sorted = e;
  std::sort(sorted.begin(), sorted.end());
  long double sum = 0;
  for (double v : sorted) sum += v;
  const double mean = static_cast<double>(sum / 1000.0L);
  const double median = 0.5 * (sorted[499] + sorted[500]);
  const double dm = std::abs(s.mean - mean), dmed = std::abs(s.median - median);
  ok = ok && dm < 1e-12 && dmed < 1e-12;
  return {ok, "bins (" + fmt("%.1f", bins[0]) + ", " + fmt("%.1f", bins[1]) + ", " + fmt("%.1f", bins[2]) + ", " +
                  fmt("%.1f", bins[3]) + ", " + fmt("%.1f", bins[4]) + "); |mean - oracle| " + fmt("%.1e", dm) +
                  ", |median - oracle| " + fmt("%.1e", dmed)};
}

Outcome labels() {
  TemperatureTrace tr;
  tr.samples = {{0, 30.0}, {60, 31.2}};
  DenseLabels d = interpolate(tr);
  bool ok = d.grid.size() == 13;
  double worst = 0;
  for (std::size_t i = 0; ok && i < 13; ++i) {
    worst = std::max(worst, std::abs(d.grid[i].temp_c - (30.0 + 0.1 * i)));
    worst = std::max(worst, std::abs(d.grid[i].time_s - 5.0 * i));
  }
  bool constant = true;
  for (int k = 0; k < 12; ++k) {
    double v = label_frame(d, 5.0 * k);
    for (double off = 0.0; off < 5.0; off += 0.25) constant = constant && label_frame(d, 5.0 * k + off) == v;
  }
  ok = ok && worst < 1e-12 && constant;
  return {ok, std::to_string(d.grid.size()) + " grid points, max deviation from 30.0 + 0.1 i " + fmt("%.1e", worst) +
                  (constant ? ", constant on every 5 s window" : ", NOT constant within windows")};
}

struct PipelineRun {
  std::map<std::string, double> mae;
  double seconds = 0;
};

PipelineRun run_once(const RunConfig& cfg, const fs::path& dir) {
  fs::remove_all(dir);
  auto t0 = Clock::now();
  auto reports = run_pipeline(cfg, dir);
  PipelineRun r;
  r.seconds = seconds_since(t0);
  for (const auto& rep : reports) r.mae[rep.model_id] = rep.mean;
  std::cout << "  pipeline seed " << cfg.seed << ": ";
  for (const auto& [k, v] : r.mae) std::cout << k << " " << fmt("%.4f", v) << "  ";
  std::cout << fmt("(%.0f s)", r.seconds) << std::endl;
  return r;
}

bool ordered(const std::map<std::string, double>& m) {
  return m.at("nisdl2") < m.at("dl") && m.at("nisdl2") < m.at("nipst") && m.at("dl") < m.at("nipst");
}

std::string describe(const std::map<std::string, double>& m) {
  return "NISDL-II " + fmt("%.4f", m.at("nisdl2")) + ", DL " + fmt("%.4f", m.at("dl")) + ", NIPST " +
         fmt("%.4f", m.at("nipst")) + " (NISDL-I " + fmt("%.4f", m.at("nisdl1")) + ")";
}

// Files whose bytes must agree between runs; run_log.csv carries wall times.
std::vector<fs::path> comparable_files(const fs::path& root) {
  std::vector<fs::path> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    fs::path rel = fs::relative(e.path(), root);
    auto top = *rel.begin();
    if (top != "models" && top != "reports") continue;
    if (rel.filename() == "run_log.csv") continue;
    out.push_back(rel);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  fs::path readme, work = fs::temp_directory_path() / "nisdl_acceptance";
  std::string only;
  app.add_option("--readme", readme)->required();
  app.add_option("--work", work);
  app.add_option("--only", only, "comma-separated criteria to run");
  CLI11_PARSE(app, argc, argv);

  std::set<int> selected;
  for (std::stringstream ss(only); ss.good();) {
    std::string tok;
    std::getline(ss, tok, ',');
    if (!tok.empty()) selected.insert(std::stoi(tok));
  }
  auto wanted = [&](int c) { return selected.empty() || selected.count(c) > 0; };
  fs::create_directories(work);

  int failures = 0;
  auto report = [&](int id, const std::string& title, const Outcome& o) {
    std::cout << "criterion " << id << " [" << (o.pass ? "PASS" : "FAIL") << "] " << title << ": " << o.detail
              << std::endl;
    if (!o.pass) ++failures;
  };
  auto guarded = [&](int id, const std::string& title, auto&& fn) {
    if (!wanted(id)) return;
    try {
      report(id, title, fn());
    } catch (const std::exception& e) {
      report(id, title, Outcome{false, std::string("error: ") + e.what()});
    }
  };

  guarded(1, "reproducibility statement", [&] { return reproducibility(readme); });
  guarded(2, "magnification factor", [] { return magnification(); });
  guarded(3, "SSI recovery", [] { return ssi_recovery(); });
  guarded(4, "gradient correctness", [] { return gradients(); });
  guarded(5, "full-scale shapes", [] { return shapes(); });
  guarded(6, "evaluation exactness", [] { return evaluation(); });

  if (wanted(7) || wanted(8)) {
    try {
      RunConfig cfg = RunConfig::defaults(ScaleProfile::desk);
      PipelineRun first = run_once(cfg, work / "run_a");

      if (wanted(7)) {
        const bool fast = first.seconds < 900;
        const std::size_t frames = cfg.synth.frames_per_subject() * static_cast<std::size_t>(cfg.synth.n_subjects);
        std::string head = std::to_string(cfg.synth.n_subjects) + " subjects, " + std::to_string(frames) +
                           " frames, " + fmt("%.0f s", first.seconds) + "; ";
        if (ordered(first.mae)) {
          report(7, "end-to-end synthetic trend", {fast, head + "seed " + std::to_string(cfg.seed) + ": " + describe(first.mae)});
        } else {
          std::map<std::string, std::vector<double>> runs;
          for (const auto& [k, v] : first.mae) runs[k].push_back(v);
          for (std::uint64_t seed : {1, 2, 3, 4}) {
            RunConfig c = cfg;
            c.apply_seed(seed);
            auto r = run_once(c, work / ("run_seed" + std::to_string(seed)));
            for (const auto& [k, v] : r.mae) runs[k].push_back(v);
            fs::remove_all(work / ("run_seed" + std::to_string(seed)));
          }
          std::map<std::string, double> median;
          for (auto& [k, v] : runs) {
            std::sort(v.begin(), v.end());
            median[k] = midpoint_quantile(v, 0.5);
          }
          report(7, "end-to-end synthetic trend",
                 {fast && ordered(median), head + "seed " + std::to_string(cfg.seed) + " out of order (" +
                                               describe(first.mae) + "); median over 5 seeds: " + describe(median)});
        }
      }

      if (wanted(8)) {
        run_once(cfg, work / "run_b");
        auto files_a = comparable_files(work / "run_a"), files_b = comparable_files(work / "run_b");
        std::size_t differing = 0;
        std::string first_diff;
        for (const auto& f : files_a) {
          if (testing::slurp(work / "run_a" / f) != testing::slurp(work / "run_b" / f)) {
            if (differing++ == 0) first_diff = f.string();
          }
        }
        std::size_t checkpoints = std::count_if(files_a.begin(), files_a.end(),
                                                [](const fs::path& p) { return p.extension() == ".bin"; });
        bool pass = files_a == files_b && differing == 0 && checkpoints > 0;
        report(8, "determinism",
               {pass, std::to_string(files_a.size()) + " files compared (" + std::to_string(checkpoints) +
                          " checkpoints, reports), " + std::to_string(differing) + " differ" +
                          (first_diff.empty() ? "" : " first: " + first_diff) +
                          (files_a == files_b ? "" : "; file sets differ")});
        fs::remove_all(work / "run_b");
      }
      fs::remove_all(work / "run_a");
    } catch (const std::exception& e) {
      if (wanted(7)) report(7, "end-to-end synthetic trend", {false, std::string("error: ") + e.what()});
      if (wanted(8)) report(8, "determinism", {false, std::string("error: ") + e.what()});
    }
  }

  guarded(9, "label math", [] { return labels(); });
  std::cout << (failures ? std::to_string(failures) + " criteria failed" : std::string("all criteria passed"))
            << std::endl;
  return failures ? 1 : 0;
}
