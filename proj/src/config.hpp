#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "corpus_io.hpp"
#include "formatting.hpp"
#include "tasks.hpp"
#include "text_model.hpp"

namespace l2t {

enum class Scenario { disjoint, shared };

// The full resolved build configuration. Defaults match the data-curation
// hyperparameters; everything is overridable from the config file and the
// resolved form is echoed into every manifest.
struct BuildConfig {
  Scenario scenario = Scenario::disjoint;
  long token_budget = 0;  // required for mix
  double l2t_fraction = 0.5;
  long max_seq_len = 2048;
  long chunk_target = 512;
  uint64_t seed = 42;
  int workers = 1;

  std::string input_path;
  CorpusFormat input_format = CorpusFormat::jsonl;
  IngestMode ingest_mode = IngestMode::lenient;
  std::string output_dir;

  std::string separator = "\n<|endoftext|>\n";

  TokenizerKind tokenizer_kind = TokenizerKind::whitespace;
  std::string tokenizer_vocab_path;

  TaskParams task_params;
  PrefixSet prefix_set;
  InstructionTemplates templates = InstructionTemplates::defaults();

  std::string stopwords_path;
  std::string abbreviations_path;
  std::string replacement_vocab_path;
  long replacement_vocab_size = 10000;

  static BuildConfig from_json(const nlohmann::json& j);
  static BuildConfig from_file(const std::string& path);
  void apply_json(const nlohmann::json& j);      // partial override
  void set_key(const std::string& dotted_key, const std::string& value);
  nlohmann::json to_json() const;                // fully resolved echo

  // Throws ConfigError naming the offending field. require_mix adds the
  // budget/scenario checks only the mix command needs.
  void validate(bool require_mix) const;

  TokenizerSpec make_tokenizer() const;
  CharClassTables make_tables() const;
  SegmenterOptions make_segmenter() const;
};

std::string_view scenario_name(Scenario s);

}  // namespace l2t
