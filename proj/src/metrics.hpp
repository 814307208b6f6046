#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "config.hpp"
#include "pipeline.hpp"

namespace l2t {

struct ValidationFailure {
  std::string check;
  std::string doc_id;
  long chunk_index = -1;
  std::string detail;
};

struct CheckCounts {
  long pass = 0;
  long fail = 0;
};

struct ValidationReport {
  static constexpr size_t kFailureCap = 100;

  std::map<std::string, CheckCounts> checks;
  std::vector<ValidationFailure> failures;  // first kFailureCap, with provenance
  long total_failures = 0;
  long records_examined = 0;

  bool ok() const { return total_failures == 0; }
  void record(const std::string& check, bool pass, const std::string& doc_id = "",
              long chunk_index = -1, const std::string& detail = "");
  nlohmann::json to_json() const;
  std::string human_table() const;
};

// Re-chunks the source, re-derives each sample's RNG from its provenance,
// regenerates the pair, and asserts byte equality with the stored record;
// also runs provenance-free recounts and file-level checks. The build's
// resolved config comes from the manifest; a caller-supplied config must
// match it exactly.
ValidationReport validate_build(const std::string& build_dir,
                                const std::optional<BuildConfig>& expected_config);

struct DatasetStats {
  long records = 0;
  long malformed_skipped = 0;
  long token_total = 0;
  std::map<std::string, long> task_counts;
  std::map<std::string, long> task_tokens;
  long p50 = 0, p90 = 0, p99 = 0, max_len = 0;
  // Realized corruption ratios, averaged per sample: altered units over
  // eligible units measured from (input, output) pairs.
  std::map<std::string, double> realized_ratios;

  nlohmann::json to_json() const;
  std::string human_table() const;
};

DatasetStats dataset_stats(const std::string& samples_path);

}  // namespace l2t
