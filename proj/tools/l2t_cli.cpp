// Operator entry point. Links the C API only; everything flows through the
// config handle. Logs go to stderr, reports to stdout, data to files.

#include <cstdio>
#include <cstdlib>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "l2t/l2t.h"

namespace {

using json = nlohmann::json;

struct ConfigDeleter {
  void operator()(l2t_config* c) const { l2t_config_destroy(c); }
};
struct ReportDeleter {
  void operator()(l2t_report* r) const { l2t_report_destroy(r); }
};
using ConfigPtr = std::unique_ptr<l2t_config, ConfigDeleter>;
using ReportPtr = std::unique_ptr<l2t_report, ReportDeleter>;

int fail(l2t_status status, const char* what) {
  std::fprintf(stderr, "l2t: %s: %s\n", what, l2t_last_error());
  return static_cast<int>(status);
}

struct CommonOpts {
  std::string config_path;
  std::string input;
  std::string output_dir;
  std::string format;
  std::string seed;
  int workers = 0;
  bool strict = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool wants_output) {
  cmd->add_option("-c,--config", opts.config_path, "JSON config file");
  cmd->add_option("-i,--input", opts.input, "input corpus (jsonl file or directory)");
  if (wants_output)
    cmd->add_option("-o,--output-dir", opts.output_dir, "output directory");
  cmd->add_option("--format", opts.format, "input format: jsonl | plain_dir");
  cmd->add_option("--seed", opts.seed, "build seed (overrides config and L2T_SEED)");
  cmd->add_option("-w,--workers", opts.workers, "worker threads");
  cmd->add_flag("--strict", opts.strict, "fail on malformed corpus records");
}

// Precedence: flag > L2T_SEED > config file > default.
int apply_common(l2t_config* cfg, const CommonOpts& opts) {
  if (!opts.config_path.empty()) {
    if (auto s = l2t_config_load_file(cfg, opts.config_path.c_str()); s != L2T_OK)
      return fail(s, "config");
  }
  const char* env_seed = std::getenv("L2T_SEED");
  if (env_seed && *env_seed) {
    if (auto s = l2t_config_set(cfg, "seed", env_seed); s != L2T_OK)
      return fail(s, "L2T_SEED");
  }
  if (!opts.seed.empty()) {
    if (auto s = l2t_config_set(cfg, "seed", opts.seed.c_str()); s != L2T_OK)
      return fail(s, "--seed");
  }
  if (!opts.input.empty()) {
    if (auto s = l2t_config_set(cfg, "input.path", opts.input.c_str()); s != L2T_OK)
      return fail(s, "--input");
  }
  if (!opts.output_dir.empty()) {
    if (auto s = l2t_config_set(cfg, "output_dir", opts.output_dir.c_str()); s != L2T_OK)
      return fail(s, "--output-dir");
  }
  if (!opts.format.empty()) {
    if (auto s = l2t_config_set(cfg, "input.format", opts.format.c_str()); s != L2T_OK)
      return fail(s, "--format");
  }
  if (opts.workers > 0) {
    if (auto s = l2t_config_set(cfg, "workers", std::to_string(opts.workers).c_str());
        s != L2T_OK)
      return fail(s, "--workers");
  }
  if (opts.strict) {
    if (auto s = l2t_config_set(cfg, "input.mode", "strict"); s != L2T_OK)
      return fail(s, "--strict");
  }
  return 0;
}

void print_report(const l2t_report* report) {
  if (report) std::printf("%s\n", l2t_report_json(report));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"l2t: deterministic L2T pretraining dataset builder"};
  app.require_subcommand(1);
  app.set_version_flag("--version", l2t_version());

  CommonOpts transform_opts, mix_opts, pack_opts, validate_opts;
  std::string stats_input, pack_samples, pack_out, validate_build_dir;
  bool pack_shuffle = false;

  auto* transform = app.add_subcommand(
      "transform", "segment + transform the corpus into L2T samples");
  add_common(transform, transform_opts, true);

  auto* mix = app.add_subcommand(
      "mix", "build a full raw/L2T mixture under the token budget");
  add_common(mix, mix_opts, true);

  auto* pack = app.add_subcommand("pack", "pack a sample file into sequences");
  pack->add_option("-c,--config", pack_opts.config_path, "JSON config file");
  pack->add_option("--seed", pack_opts.seed, "build seed");
  pack->add_option("-i,--samples", pack_samples, "sample jsonl to pack")->required();
  pack->add_option("-o,--out", pack_out, "packed jsonl output")->required();
  pack->add_flag("--shuffle", pack_shuffle, "shuffle packed sequences");

  auto* stats = app.add_subcommand("stats", "streaming stats over a sample file");
  stats->add_option("-i,--samples", stats_input, "sample jsonl")->required();

  auto* validate = app.add_subcommand(
      "validate", "regenerate a build from provenance and verify byte equality");
  validate->add_option("-c,--config", validate_opts.config_path,
                       "config that must match the manifest echo");
  validate->add_option("--build", validate_build_dir, "build output directory")
      ->required();

  CLI11_PARSE(app, argc, argv);

  l2t_config* raw_cfg = nullptr;
  if (auto s = l2t_config_create(&raw_cfg); s != L2T_OK) return fail(s, "init");
  ConfigPtr cfg(raw_cfg);

  if (transform->parsed()) {
    if (int rc = apply_common(cfg.get(), transform_opts)) return rc;
    std::fprintf(stderr, "l2t: transform starting\n");
    l2t_report* report = nullptr;
    const auto status = l2t_run_transform(cfg.get(), &report);
    ReportPtr guard(report);
    if (status != L2T_OK) return fail(status, "transform");
    print_report(report);
    std::fprintf(stderr, "l2t: transform done\n");
    return 0;
  }

  if (mix->parsed()) {
    if (int rc = apply_common(cfg.get(), mix_opts)) return rc;
    std::fprintf(stderr, "l2t: mix starting\n");
    l2t_report* report = nullptr;
    const auto status = l2t_run_mix(cfg.get(), &report);
    ReportPtr guard(report);
    if (status != L2T_OK) return fail(status, "mix");
    print_report(report);
    std::fprintf(stderr, "l2t: mix done\n");
    return 0;
  }

  if (pack->parsed()) {
    if (int rc = apply_common(cfg.get(), pack_opts)) return rc;
    if (pack_samples.empty() || pack_out.empty()) {
      std::fprintf(stderr, "l2t: pack: --samples and --out are required\n");
      return static_cast<int>(L2T_ERR_CONFIG);
    }
    l2t_report* report = nullptr;
    const auto status = l2t_run_pack(cfg.get(), pack_samples.c_str(), pack_out.c_str(),
                                     pack_shuffle ? 1 : 0, &report);
    ReportPtr guard(report);
    if (status != L2T_OK) return fail(status, "pack");
    print_report(report);
    return 0;
  }

  if (stats->parsed()) {
    l2t_report* report = nullptr;
    const auto status = l2t_dataset_stats(stats_input.c_str(), &report);
    ReportPtr guard(report);
    if (status != L2T_OK) return fail(status, "stats");
    print_report(report);
    return 0;
  }

  if (validate->parsed()) {
    // A config is optional here; when given it must match the manifest echo.
    l2t_config* expected = nullptr;
    ConfigPtr expected_guard;
    if (!validate_opts.config_path.empty()) {
      if (auto s = l2t_config_create(&expected); s != L2T_OK) return fail(s, "init");
      expected_guard.reset(expected);
      if (auto s = l2t_config_load_file(expected, validate_opts.config_path.c_str());
          s != L2T_OK)
        return fail(s, "config");
    }
    l2t_report* report = nullptr;
    const auto status = l2t_validate(validate_build_dir.c_str(), expected, &report);
    ReportPtr guard(report);
    if (status != L2T_OK && status != L2T_ERR_VALIDATION) return fail(status, "validate");
    print_report(report);
    if (status == L2T_ERR_VALIDATION)
      std::fprintf(stderr, "l2t: validate: %s\n", l2t_last_error());
    return static_cast<int>(status);
  }

  return static_cast<int>(L2T_ERR_CONFIG);
}
