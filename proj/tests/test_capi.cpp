#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "l2t/l2t.h"
#include "synth_corpus.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct ConfigGuard {
  l2t_config* cfg = nullptr;
  ConfigGuard() { REQUIRE(l2t_config_create(&cfg) == L2T_OK); }
  ~ConfigGuard() { l2t_config_destroy(cfg); }
};

struct ReportGuard {
  l2t_report* report = nullptr;
  ~ReportGuard() { l2t_report_destroy(report); }
  json parsed() const {
    REQUIRE(report != nullptr);
    return json::parse(l2t_report_json(report));
  }
};

}  // namespace

TEST_CASE("version and error strings are always available") {
  CHECK(std::string(l2t_version()) == "1.0.0");
  CHECK(l2t_last_error() != nullptr);
}

TEST_CASE("config handles load json, files, and dotted keys") {
  ConfigGuard cfg;
  CHECK(l2t_config_load_json(cfg.cfg, R"({"seed": 7, "chunk_target": 64})") ==
        L2T_OK);
  CHECK(l2t_config_set(cfg.cfg, "l2t_fraction", "0.25") == L2T_OK);
  CHECK(l2t_config_set(cfg.cfg, "input.path", "corpus.jsonl") == L2T_OK);

  CHECK(l2t_config_set(cfg.cfg, "bogus", "1") == L2T_ERR_CONFIG);
  CHECK(std::string(l2t_last_error()).find("bogus") != std::string::npos);
  CHECK(l2t_config_load_json(cfg.cfg, "{nope") == L2T_ERR_CONFIG);
  CHECK(l2t_config_load_file(cfg.cfg, "/nonexistent.json") == L2T_ERR_IO);
}

TEST_CASE("null arguments are config errors, not crashes") {
  CHECK(l2t_config_create(nullptr) == L2T_ERR_CONFIG);
  CHECK(l2t_config_set(nullptr, "seed", "1") == L2T_ERR_CONFIG);
  CHECK(l2t_run_transform(nullptr, nullptr) == L2T_ERR_CONFIG);
  CHECK(l2t_dataset_stats(nullptr, nullptr) == L2T_ERR_CONFIG);
  CHECK(l2t_report_json(nullptr) != nullptr);
  l2t_report_destroy(nullptr);
  l2t_config_destroy(nullptr);
}

TEST_CASE("transform via the C surface produces files and a manifest report") {
  const auto dir = l2t::testing::make_temp_dir("capi");
  const auto corpus = l2t::testing::write_synth_corpus(
      (fs::path(dir) / "c.jsonl").string(), 881, 5000);

  ConfigGuard cfg;
  REQUIRE(l2t_config_set(cfg.cfg, "input.path", corpus.path.c_str()) == L2T_OK);
  const auto out = (fs::path(dir) / "out").string();
  REQUIRE(l2t_config_set(cfg.cfg, "output_dir", out.c_str()) == L2T_OK);
  REQUIRE(l2t_config_set(cfg.cfg, "chunk_target", "64") == L2T_OK);
  REQUIRE(l2t_config_set(cfg.cfg, "max_seq_len", "256") == L2T_OK);

  ReportGuard report;
  REQUIRE(l2t_run_transform(cfg.cfg, &report.report) == L2T_OK);
  const auto manifest = report.parsed();
  CHECK(manifest.at("command") == "transform");
  CHECK(manifest.at("documents").get<long>() == corpus.documents);
  CHECK(fs::exists(fs::path(out) / "l2t_samples.jsonl"));
  CHECK(fs::exists(fs::path(out) / "manifest.json"));

  // Missing input is a config error naming the field.
  ConfigGuard bad;
  REQUIRE(l2t_config_set(bad.cfg, "output_dir", out.c_str()) == L2T_OK);
  CHECK(l2t_run_transform(bad.cfg, nullptr) == L2T_ERR_CONFIG);
  CHECK(std::string(l2t_last_error()).find("input.path") != std::string::npos);

  // Unreadable input is an io error.
  ConfigGuard gone;
  REQUIRE(l2t_config_set(gone.cfg, "input.path", "/nonexistent.jsonl") == L2T_OK);
  REQUIRE(l2t_config_set(gone.cfg, "output_dir", out.c_str()) == L2T_OK);
  CHECK(l2t_run_transform(gone.cfg, nullptr) == L2T_ERR_IO);
}

TEST_CASE("mix, stats, pack, and validate flow through the C surface") {
  const auto dir = l2t::testing::make_temp_dir("capi");
  const auto corpus = l2t::testing::write_synth_corpus(
      (fs::path(dir) / "c.jsonl").string(), 882, 20000);
  const auto out = (fs::path(dir) / "out").string();

  ConfigGuard cfg;
  REQUIRE(l2t_config_set(cfg.cfg, "input.path", corpus.path.c_str()) == L2T_OK);
  REQUIRE(l2t_config_set(cfg.cfg, "output_dir", out.c_str()) == L2T_OK);
  REQUIRE(l2t_config_set(cfg.cfg, "chunk_target", "64") == L2T_OK);
  REQUIRE(l2t_config_set(cfg.cfg, "max_seq_len", "256") == L2T_OK);
  REQUIRE(l2t_config_set(cfg.cfg, "token_budget", "12000") == L2T_OK);
  REQUIRE(l2t_config_set(cfg.cfg, "scenario", "disjoint") == L2T_OK);

  ReportGuard mix_report;
  REQUIRE(l2t_run_mix(cfg.cfg, &mix_report.report) == L2T_OK);
  const auto manifest = mix_report.parsed();
  const long total = manifest.at("realized").at("total_tokens").get<long>();
  CHECK(total <= 12000);
  CHECK(total > 12000 - 256);

  ReportGuard stats_report;
  const auto samples = (fs::path(out) / "l2t_samples.jsonl").string();
  REQUIRE(l2t_dataset_stats(samples.c_str(), &stats_report.report) == L2T_OK);
  CHECK(stats_report.parsed().at("records").get<long>() > 0);

  ReportGuard pack_report;
  const auto packed = (fs::path(dir) / "repacked.jsonl").string();
  REQUIRE(l2t_run_pack(cfg.cfg, samples.c_str(), packed.c_str(), 1,
                       &pack_report.report) == L2T_OK);
  CHECK(pack_report.parsed().at("sequences").get<long>() > 0);

  ReportGuard validate_report;
  CHECK(l2t_validate(out.c_str(), cfg.cfg, &validate_report.report) == L2T_OK);
  CHECK(validate_report.parsed().at("ok") == true);

  // Tamper with one record: validation reports and returns code 3.
  {
    std::ifstream in(samples, std::ios::binary);
    std::string all((std::istreambuf_iterator<char>(in)), {});
    in.close();
    const auto at = all.find("\"output\":\"");
    REQUIRE(at != std::string::npos);
    all.insert(at + 10, "zz ");
    std::ofstream outf(samples, std::ios::binary | std::ios::trunc);
    outf << all;
  }
  ReportGuard tampered;
  CHECK(l2t_validate(out.c_str(), nullptr, &tampered.report) ==
        L2T_ERR_VALIDATION);
  CHECK(tampered.parsed().at("ok") == false);
}
