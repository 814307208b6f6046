#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "rng.hpp"
#include "segmentation.hpp"
#include "text_model.hpp"

namespace l2t {

// The 14 task kinds. Enum order is the draw order for task assignment and
// the names are stable in file formats.
enum class TaskKind {
  char_count,
  masked_char,
  space,
  typo,
  last,
  masked_word,
  random_word,
  shuffle,
  token_type,
  deletion,
  reordering,
  fill_middle,
  half,
  one,
};
inline constexpr int kTaskKindCount = 14;

std::string_view task_name(TaskKind kind);
std::optional<TaskKind> task_from_name(std::string_view name);

struct TaskParams {
  double masked_word_ratio = 0.15;
  double masked_char_ratio = 0.15;
  std::pair<double, double> random_ratio_range{0.05, 0.1};
  std::pair<double, double> shuffle_ratio_range{0.05, 0.1};
  std::pair<double, double> typo_ratio_range{0.01, 0.08};
  std::vector<std::string> mask_tokens{"[MASK]", "___", "@@@", "###",
                                       "+++",    "<<>>", "(())", "$$$"};
  double deletion_mode_prob = 0.5;

  void validate() const;  // throws ConfigError naming the bad field
};

// Classes counted by the token_type task. The first three reuse
// classify_word; punctuation counts characters.
enum class TokenClass { stopword, digit, content, punctuation };
inline constexpr int kTokenClassCount = 4;
std::string_view token_class_name(TokenClass c);

// Instruction template sets for the two counting tasks. Task-specific
// instructions disambiguate token_type from char_count.
struct InstructionTemplates {
  std::vector<std::string> char_count;
  std::array<std::vector<std::string>, kTokenClassCount> token_type;

  static InstructionTemplates defaults();
  void validate() const;
};

struct RawPair {
  TaskKind task = TaskKind::char_count;
  std::string input;
  std::string output;
  std::optional<std::string> aux_instruction;
  bool skip = false;
  std::string skip_reason;

  static RawPair skipped(TaskKind kind, std::string reason) {
    RawPair p;
    p.task = kind;
    p.skip = true;
    p.skip_reason = std::move(reason);
    return p;
  }
};

// Snapshot of the previous document in stream order; supplies the anomalous
// sentence for deletion and the distractor ending for last.
struct AnomalySource {
  std::vector<std::string> sentences;
  std::vector<std::string> endings;
};

AnomalySource make_anomaly_source(std::string_view body, long chunk_target,
                                  const TokenizerSpec& spec,
                                  const SegmenterOptions& seg,
                                  const CharClassTables& tables);
// Same snapshot built from already-chunked material (chunk sentences cover
// the document's sentence sequence exactly).
AnomalySource anomaly_from_chunks(const std::vector<Chunk>& chunks,
                                  const CharClassTables& tables);

// Shared corruption rule: k = max(1, round(ratio * n)) distinct positions,
// selected by a partial Fisher-Yates draw and returned in ascending order.
long corruption_count(double ratio, long eligible);
std::vector<size_t> select_positions(RngBase& rng, size_t n, size_t k);

// The text after the final stopword occurrence (with at least one word
// following it), or nullopt. Used by the last task for both the true ending
// and the distractor.
struct EndingSplit {
  std::string stem;    // up to and including the final stopword
  std::string ending;  // everything after it
};
std::optional<EndingSplit> extract_ending(std::string_view text,
                                          const CharClassTables& tables);

// Generators. Preconditions are checked before any randomness is consumed,
// so a skipped attempt never advances the sample's RNG stream. Draw order
// per generator (each line one draw):
//   char_count:  template index
//   masked_char: mask-token index; position selection
//   space:       none
//   typo:        ratio; position selection; per-site replacement (ascending)
//   last:        mask-token index; distractor index; option order coin
//   masked_word: position selection; per-site mask-token index (ascending)
//   random_word: ratio; position selection; per-site vocab draw (ascending)
//   shuffle:     ratio; position selection; permutation until non-identity
//   token_type:  class index; template index
//   deletion:    sentence index; insertion boundary; mode draw
//   reordering:  permutation until non-identity
//   fill_middle: mask-token index
//   half, one:   none
RawPair gen_char_count(const Chunk& chunk, const InstructionTemplates& templates,
                       RngBase& rng);
RawPair gen_masked_char(const Chunk& chunk, const TaskParams& params, RngBase& rng);
RawPair gen_space(const Chunk& chunk);
RawPair gen_typo(const Chunk& chunk, const TaskParams& params, RngBase& rng);
RawPair gen_last(const Chunk& chunk, const AnomalySource& anomaly,
                 const TaskParams& params, const CharClassTables& tables,
                 RngBase& rng);
RawPair gen_masked_word(const Chunk& chunk, const TaskParams& params, RngBase& rng);
RawPair gen_random_word(const Chunk& chunk, const TaskParams& params,
                        const std::vector<std::string>& vocab, RngBase& rng);
RawPair gen_shuffle(const Chunk& chunk, const TaskParams& params, RngBase& rng);
RawPair gen_token_type(const Chunk& chunk, const InstructionTemplates& templates,
                       const CharClassTables& tables, RngBase& rng);
RawPair gen_deletion(const Chunk& chunk, const AnomalySource& anomaly,
                     const TaskParams& params, RngBase& rng);
RawPair gen_reordering(const Chunk& chunk, RngBase& rng);
RawPair gen_fill_middle(const Chunk& chunk, const TaskParams& params, RngBase& rng);
RawPair gen_half(const Chunk& chunk);
RawPair gen_one(const Chunk& chunk);

struct TaskContext {
  const TaskParams& params;
  const CharClassTables& tables;
  const InstructionTemplates& templates;
  const std::vector<std::string>& vocab;  // random_word replacements
  const AnomalySource& anomaly;
};

RawPair apply_task(TaskKind kind, const Chunk& chunk, const TaskContext& ctx,
                   RngBase& rng);

}  // namespace l2t
