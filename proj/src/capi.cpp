#include "l2t/l2t.h"

#include <exception>
#include <fstream>
#include <new>
#include <string>

#include "config.hpp"
#include "errors.hpp"
#include "metrics.hpp"
#include "pipeline.hpp"

namespace {

thread_local std::string g_last_error;

void set_error(const std::string& message) { g_last_error = message; }

template <typename Fn>
l2t_status guarded(Fn&& fn) {
  try {
    g_last_error.clear();
    return fn();
  } catch (const l2t::ConfigError& e) {
    set_error(e.what());
    return L2T_ERR_CONFIG;
  } catch (const l2t::IoError& e) {
    set_error(e.what());
    return L2T_ERR_IO;
  } catch (const std::bad_alloc&) {
    set_error("out of memory");
    return L2T_ERR_IO;
  } catch (const std::exception& e) {
    set_error(e.what());
    return L2T_ERR_IO;
  }
}

}  // namespace

struct l2t_config {
  l2t::BuildConfig cfg;
};

struct l2t_report {
  std::string json_text;
};

extern "C" {

const char* l2t_version(void) { return "1.0.0"; }

const char* l2t_last_error(void) { return g_last_error.c_str(); }

l2t_status l2t_config_create(l2t_config** out) {
  return guarded([&]() {
    if (!out) throw l2t::ConfigError("l2t_config_create: out is null");
    *out = new l2t_config();
    return L2T_OK;
  });
}

l2t_status l2t_config_load_file(l2t_config* cfg, const char* path) {
  return guarded([&]() {
    if (!cfg || !path) throw l2t::ConfigError("l2t_config_load_file: null argument");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw l2t::IoError(std::string("cannot open config file: ") + path);
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded())
      throw l2t::ConfigError(std::string("config file is not valid JSON: ") + path);
    cfg->cfg.apply_json(j);
    return L2T_OK;
  });
}

l2t_status l2t_config_load_json(l2t_config* cfg, const char* json_text) {
  return guarded([&]() {
    if (!cfg || !json_text)
      throw l2t::ConfigError("l2t_config_load_json: null argument");
    nlohmann::json j = nlohmann::json::parse(json_text, nullptr, false);
    if (j.is_discarded()) throw l2t::ConfigError("config: not valid JSON");
    cfg->cfg.apply_json(j);
    return L2T_OK;
  });
}

l2t_status l2t_config_set(l2t_config* cfg, const char* dotted_key, const char* value) {
  return guarded([&]() {
    if (!cfg || !dotted_key || !value)
      throw l2t::ConfigError("l2t_config_set: null argument");
    cfg->cfg.set_key(dotted_key, value);
    return L2T_OK;
  });
}

void l2t_config_destroy(l2t_config* cfg) { delete cfg; }

const char* l2t_report_json(const l2t_report* report) {
  return report ? report->json_text.c_str() : "";
}

void l2t_report_destroy(l2t_report* report) { delete report; }

l2t_status l2t_run_transform(const l2t_config* cfg, l2t_report** manifest_out) {
  return guarded([&]() {
    if (!cfg) throw l2t::ConfigError("l2t_run_transform: cfg is null");
    const l2t::ScenarioManifest manifest = l2t::run_transform(cfg->cfg);
    if (manifest_out) {
      *manifest_out = new l2t_report{manifest.to_json().dump(2)};
    }
    return L2T_OK;
  });
}

l2t_status l2t_run_mix(const l2t_config* cfg, l2t_report** manifest_out) {
  return guarded([&]() {
    if (!cfg) throw l2t::ConfigError("l2t_run_mix: cfg is null");
    const l2t::ScenarioManifest manifest = l2t::run_mix(cfg->cfg);
    if (manifest_out) {
      *manifest_out = new l2t_report{manifest.to_json().dump(2)};
    }
    return L2T_OK;
  });
}

l2t_status l2t_run_pack(const l2t_config* cfg, const char* samples_path,
                        const char* packed_path, int shuffle,
                        l2t_report** report_out) {
  return guarded([&]() {
    if (!cfg || !samples_path || !packed_path)
      throw l2t::ConfigError("l2t_run_pack: null argument");
    const l2t::PackReport report =
        l2t::run_pack(cfg->cfg, samples_path, packed_path, shuffle != 0);
    if (report_out) {
      nlohmann::json j{{"samples", report.samples},
                       {"sequences", report.sequences},
                       {"mean_fill_nonfinal", report.mean_fill_nonfinal},
                       {"oversize_truncated", report.oversize_truncated},
                       {"max_sequence_tokens", report.max_sequence_tokens},
                       {"total_tokens", report.total_tokens}};
      *report_out = new l2t_report{j.dump(2)};
    }
    return L2T_OK;
  });
}

l2t_status l2t_dataset_stats(const char* samples_path, l2t_report** report_out) {
  return guarded([&]() {
    if (!samples_path) throw l2t::ConfigError("l2t_dataset_stats: path is null");
    const l2t::DatasetStats stats = l2t::dataset_stats(samples_path);
    if (report_out) {
      *report_out = new l2t_report{stats.to_json().dump(2)};
    }
    return L2T_OK;
  });
}

l2t_status l2t_validate(const char* build_dir, const l2t_config* expected_config,
                        l2t_report** report_out) {
  l2t::ValidationReport report;
  const l2t_status status = guarded([&]() {
    if (!build_dir) throw l2t::ConfigError("l2t_validate: build_dir is null");
    std::optional<l2t::BuildConfig> expected;
    if (expected_config) expected = expected_config->cfg;
    report = l2t::validate_build(build_dir, expected);
    return L2T_OK;
  });
  if (status != L2T_OK) return status;
  if (report_out) {
    *report_out = new l2t_report{report.to_json().dump(2)};
  }
  if (!report.ok()) {
    set_error("validation failures: " + std::to_string(report.total_failures));
    return L2T_ERR_VALIDATION;
  }
  return L2T_OK;
}

}  // extern "C"
