#include "nisdl/nisdl.h"

#include <cstring>
#include <exception>
#include <string>
#include <vector>

#include "nisdl/config.hpp"
#include "nisdl/error.hpp"
#include "nisdl/evaluate.hpp"
#include "nisdl/pipeline.hpp"
#include "nisdl/ssi.hpp"

struct nisdl_config {
  nisdl::RunConfig cfg;
};

struct nisdl_ssi_table {
  std::vector<std::string> ids;
  std::vector<nisdl::SsiRecord> records;
};

struct nisdl_report {
  nisdl::ErrorReport report;
};

namespace {

thread_local std::string g_last_error;

nisdl_status set_error(nisdl_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

template <typename Fn>
nisdl_status guarded(Fn fn) {
  try {
    fn();
    g_last_error.clear();
    return NISDL_OK;
  } catch (const nisdl::Error& e) {
    return set_error(static_cast<nisdl_status>(static_cast<int>(e.code())), e.what());
  } catch (const std::exception& e) {
    return set_error(NISDL_ERR_INTERNAL, e.what());
  } catch (...) {
    return set_error(NISDL_ERR_INTERNAL, "unknown failure");
  }
}

std::string str_or_empty(const char* s) { return s ? std::string(s) : std::string(); }

nisdl_ssi_table* make_table(const nisdl::SsiTable& table) {
  auto* out = new nisdl_ssi_table;
  for (const auto& [id, subject] : table) {
    out->ids.push_back(id);
    out->records.push_back(subject.calibration);
  }
  return out;
}

nisdl::Dataset dataset_from(const nisdl_config* cfg, const char* data_root, const char* magnified_root,
                            const char* ssi_path) {
  return nisdl::load_dataset(cfg->cfg, data_root, magnified_root, ssi_path);
}

#define REQUIRE(cond, what)                                                  \
  do {                                                                       \
    if (!(cond)) return set_error(NISDL_ERR_INVALID_ARGUMENT, what);         \
  } while (0)

}  // namespace

extern "C" {

const char* nisdl_version(void) { return "1.0.0"; }

const char* nisdl_last_error(void) { return g_last_error.c_str(); }

const char* nisdl_status_name(nisdl_status status) {
  switch (status) {
    case NISDL_OK: return "ok";
    case NISDL_ERR_CONFIG: return "config";
    case NISDL_ERR_IO: return "io";
    case NISDL_ERR_SHAPE: return "shape";
    case NISDL_ERR_BOUNDS: return "bounds";
    case NISDL_ERR_INSUFFICIENT_DATA: return "insufficient_data";
    case NISDL_ERR_DEGENERATE_DESIGN: return "degenerate_design";
    case NISDL_ERR_OUT_OF_RANGE: return "out_of_range";
    case NISDL_ERR_DOMAIN: return "domain";
    case NISDL_ERR_STATE: return "state";
    case NISDL_ERR_DIVERGENCE: return "divergence";
    case NISDL_ERR_SPLIT: return "split";
    case NISDL_ERR_PROFILE: return "profile";
    case NISDL_ERR_EMPTY_DATA: return "empty_data";
    case NISDL_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case NISDL_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

nisdl_status nisdl_config_default(const char* profile, nisdl_config** out) {
  REQUIRE(out, "out is NULL");
  *out = nullptr;
  return guarded([&] {
    auto p = nisdl::parse_profile(profile ? profile : "desk");
    *out = new nisdl_config{nisdl::RunConfig::defaults(p)};
  });
}

nisdl_status nisdl_config_load(const char* path, const char* profile, nisdl_config** out) {
  REQUIRE(out, "out is NULL");
  *out = nullptr;
  return guarded([&] { *out = new nisdl_config{nisdl::load_run_config(str_or_empty(path), str_or_empty(profile))}; });
}

nisdl_status nisdl_config_merge_json(nisdl_config* cfg, const char* json_text) {
  REQUIRE(cfg && json_text, "config or json text is NULL");
  return guarded([&] {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
      nisdl::fail(nisdl::ErrorCode::config, std::string("invalid JSON: ") + e.what());
    }
    nisdl::RunConfig copy = cfg->cfg;
    nisdl::merge_json(copy, doc);
    cfg->cfg = copy;
  });
}

nisdl_status nisdl_config_set_seed(nisdl_config* cfg, uint64_t seed) {
  REQUIRE(cfg, "config is NULL");
  return guarded([&] { cfg->cfg.apply_seed(seed); });
}

nisdl_status nisdl_config_set_variant(nisdl_config* cfg, const char* variant) {
  REQUIRE(cfg && variant, "config or variant is NULL");
  return guarded([&] {
    try {
      cfg->cfg.variant = nisdl::parse_variant(variant);
    } catch (const nisdl::Error& e) {
      nisdl::fail(nisdl::ErrorCode::config, e.what());
    }
  });
}

nisdl_status nisdl_config_validate(const nisdl_config* cfg) {
  REQUIRE(cfg, "config is NULL");
  return guarded([&] { cfg->cfg.validate(); });
}

nisdl_status nisdl_config_to_json(const nisdl_config* cfg, char* buf, size_t capacity, size_t* needed) {
  REQUIRE(cfg, "config is NULL");
  return guarded([&] {
    std::string text = nisdl::to_json(cfg->cfg).dump(2);
    if (needed) *needed = text.size() + 1;
    if (buf) {
      if (capacity < text.size() + 1) nisdl::fail(nisdl::ErrorCode::bounds, "buffer too small for config JSON");
      std::memcpy(buf, text.c_str(), text.size() + 1);
    }
  });
}

void nisdl_config_free(nisdl_config* cfg) { delete cfg; }

nisdl_status nisdl_synth(const nisdl_config* cfg, const char* data_root) {
  REQUIRE(cfg && data_root, "config or data_root is NULL");
  return guarded([&] { nisdl::run_synth(cfg->cfg, data_root); });
}

nisdl_status nisdl_magnify_clip(const nisdl_config* cfg, const char* manifest, int roi_x, int roi_y, int roi_side,
                                const char* out_dir) {
  REQUIRE(cfg && manifest && out_dir, "config, manifest or out_dir is NULL");
  return guarded([&] {
    nisdl::RoiSpec roi{roi_x, roi_y, roi_side};
    nisdl::run_magnify_clip(manifest, cfg->cfg.magnify, roi_side > 0 ? &roi : nullptr, out_dir);
  });
}

nisdl_status nisdl_magnify_dataset(const nisdl_config* cfg, const char* data_root, const char* magnified_root) {
  REQUIRE(cfg && data_root && magnified_root, "config, data_root or magnified_root is NULL");
  return guarded([&] { nisdl::run_magnify_dataset(cfg->cfg, data_root, magnified_root); });
}

nisdl_status nisdl_fit_ssi(const nisdl_config* cfg, const char* data_root, const char* ssi_path,
                           nisdl_ssi_table** out) {
  REQUIRE(cfg && data_root && ssi_path, "config, data_root or ssi_path is NULL");
  if (out) *out = nullptr;
  return guarded([&] {
    nisdl::SsiTable table = nisdl::run_fit_ssi(cfg->cfg, data_root, ssi_path);
    if (out) *out = make_table(table);
  });
}

nisdl_status nisdl_train(const nisdl_config* cfg, const char* variant, const char* data_root,
                         const char* magnified_root, const char* ssi_path, const char* out_dir) {
  REQUIRE(cfg && data_root && magnified_root && ssi_path && out_dir, "a required argument is NULL");
  return guarded([&] {
    nisdl::Variant v = variant ? nisdl::parse_variant(variant) : cfg->cfg.variant;
    cfg->cfg.validate();
    nisdl::Dataset data = dataset_from(cfg, data_root, magnified_root, ssi_path);
    nisdl::run_train(cfg->cfg, v, data, out_dir);
  });
}

nisdl_status nisdl_evaluate(const nisdl_config* cfg, const char* checkpoint, const char* data_root,
                            const char* magnified_root, const char* ssi_path, const char* split_path,
                            const char* json_path, const char* csv_path, nisdl_report** out) {
  REQUIRE(cfg && checkpoint && data_root && magnified_root && ssi_path && json_path, "a required argument is NULL");
  if (out) *out = nullptr;
  return guarded([&] {
    if (!std::filesystem::exists(checkpoint)) {
      nisdl::fail(nisdl::ErrorCode::io, std::string("checkpoint not found: ") + checkpoint);
    }
    nisdl::Dataset data = dataset_from(cfg, data_root, magnified_root, ssi_path);
    nisdl::ErrorReport r = nisdl::run_evaluate(checkpoint, data, str_or_empty(split_path));
    std::filesystem::path jp(json_path);
    if (jp.has_parent_path()) std::filesystem::create_directories(jp.parent_path());
    nisdl::write_report(jp, r);
    if (csv_path) nisdl::write_report_csv(csv_path, r);
    if (out) *out = new nisdl_report{std::move(r)};
  });
}

nisdl_status nisdl_pipeline(const nisdl_config* cfg, const char* out_root) {
  REQUIRE(cfg && out_root, "config or out_root is NULL");
  return guarded([&] { nisdl::run_pipeline(cfg->cfg, out_root); });
}

nisdl_status nisdl_ssi_read(const char* path, nisdl_ssi_table** out) {
  REQUIRE(path && out, "path or out is NULL");
  *out = nullptr;
  return guarded([&] { *out = make_table(nisdl::read_ssi_table(path)); });
}

size_t nisdl_ssi_count(const nisdl_ssi_table* table) { return table ? table->records.size() : 0; }

nisdl_status nisdl_ssi_get(const nisdl_ssi_table* table, size_t index, const char** subject_id, double* k, double* b,
                           double* residual_rmse, size_t* n_points) {
  REQUIRE(table, "table is NULL");
  if (index >= table->records.size()) return set_error(NISDL_ERR_BOUNDS, "SSI index out of range");
  const auto& r = table->records[index];
  if (subject_id) *subject_id = table->ids[index].c_str();
  if (k) *k = r.k;
  if (b) *b = r.b;
  if (residual_rmse) *residual_rmse = r.residual_rmse;
  if (n_points) *n_points = r.n_points;
  return NISDL_OK;
}

void nisdl_ssi_free(nisdl_ssi_table* table) { delete table; }

nisdl_status nisdl_ssi_fit(const double* saturation, const double* temperature, size_t n, double* k, double* b) {
  REQUIRE((saturation && temperature) || n == 0, "input arrays are NULL");
  return guarded([&] {
    std::vector<nisdl::SaturationTemperature> pairs(n);
    for (size_t i = 0; i < n; ++i) pairs[i] = {saturation[i], temperature[i]};
    nisdl::SsiRecord r = nisdl::fit_ssi(pairs);
    if (k) *k = r.k;
    if (b) *b = r.b;
  });
}

nisdl_status nisdl_report_read(const char* path, nisdl_report** out) {
  REQUIRE(path && out, "path or out is NULL");
  *out = nullptr;
  return guarded([&] { *out = new nisdl_report{nisdl::read_report(path)}; });
}

const char* nisdl_report_model_id(const nisdl_report* report) { return report ? report->report.model_id.c_str() : ""; }

nisdl_status nisdl_report_summary(const nisdl_report* report, double* mean, double* median, double quartiles[3],
                                  size_t* n) {
  REQUIRE(report, "report is NULL");
  const auto& r = report->report;
  if (mean) *mean = r.mean;
  if (median) *median = r.median;
  if (quartiles) {
    for (int i = 0; i < 3; ++i) quartiles[i] = r.quartiles[i];
  }
  if (n) *n = r.n;
  return NISDL_OK;
}

nisdl_status nisdl_report_bins(const nisdl_report* report, double bins[5]) {
  REQUIRE(report && bins, "report or bins is NULL");
  for (int i = 0; i < 5; ++i) bins[i] = report->report.bins[i];
  return NISDL_OK;
}

void nisdl_report_free(nisdl_report* report) { delete report; }

nisdl_status nisdl_bin_errors(const double* errors, size_t n, double bins[5]) {
  REQUIRE((errors || n == 0) && bins, "errors or bins is NULL");
  return guarded([&] {
    auto out = nisdl::bin_errors(std::span<const double>(errors, n));
    for (int i = 0; i < 5; ++i) bins[i] = out[i];
  });
}

nisdl_status nisdl_summarize(const double* errors, size_t n, double* mean, double* median, double quartiles[3]) {
  REQUIRE(errors || n == 0, "errors is NULL");
  return guarded([&] {
    nisdl::Summary s = nisdl::summarize(std::span<const double>(errors, n));
    if (mean) *mean = s.mean;
    if (median) *median = s.median;
    if (quartiles) {
      for (int i = 0; i < 3; ++i) quartiles[i] = s.quartiles[i];
    }
  });
}

}  // extern "C"
