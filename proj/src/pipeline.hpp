#pragma once

#include <array>
#include <functional>
#include <map>
#include <optional>
#include <unordered_map>
#include <string>
#include <vector>

#include <json.hpp>

#include "config.hpp"
#include "corpus_io.hpp"
#include "formatting.hpp"
#include "rng.hpp"
#include "segmentation.hpp"
#include "tasks.hpp"

namespace l2t {

// Counter-based stream for one (seed, doc_id, chunk_index) triple. Streams
// for distinct triples are independent; identical inputs replay identically.
inline SplitMixRng derive_rng(uint64_t seed, std::string_view doc_id,
                              long chunk_index) {
  uint64_t k = splitmix64(seed ^ 0x1F3D5B79A1C2E4F6ull);
  k = splitmix64(k ^ fnv1a64(doc_id));
  k = splitmix64(k ^ static_cast<uint64_t>(chunk_index));
  return SplitMixRng(k);
}

// Uniform draw over the 14 kinds; the pipeline redraws from the remaining
// kinds when a generator skips.
inline TaskKind assign_task(RngBase& rng) {
  return static_cast<TaskKind>(rng.below(kTaskKindCount));
}

// Order-independent accept decision for the subsample filters.
inline double filter_unit(uint64_t seed, uint64_t salt, std::string_view doc_id,
                          long chunk_index) {
  return hash_to_unit(mix64(mix64(seed ^ salt, fnv1a64(doc_id)),
                            static_cast<uint64_t>(chunk_index)));
}
inline constexpr uint64_t kRawFilterSalt = 0x7261772D66696C74ull;
inline constexpr uint64_t kL2tFilterSalt = 0x6C32742D66696C74ull;

// Everything one chunk produced: the sample (absent when every task
// skipped), the pre-skip assignment draw, and the skip trail.
struct ChunkOutcome {
  std::optional<TaskSample> sample;
  TaskKind first_draw = TaskKind::char_count;
  std::vector<std::pair<TaskKind, std::string>> skips;
};

// Derives the chunk's RNG, runs assignment with skip-and-redraw, generates
// and formats. This is the replay unit for validation.
ChunkOutcome transform_chunk(const Chunk& chunk, const TaskContext& ctx,
                             const PrefixSet& prefixes, const TokenizerSpec& tokenizer,
                             uint64_t seed);

void parallel_for(size_t n, int workers, const std::function<void(size_t)>& fn);

// One pass over the corpus before any generation: counts, per-side token
// totals, the replacement vocabulary, ring documents, input checksum.
struct PrePassInfo {
  long documents = 0;
  long skipped_records = 0;
  long corpus_tokens = 0;                 // whitespace-token sum over bodies
  std::array<long, 2> side_tokens{};      // disjoint sides
  std::array<long, 2> side_documents{};
  std::optional<Document> last_doc;
  std::array<std::optional<Document>, 2> last_side_doc;
  std::vector<std::string> replacement_vocab;
  std::string corpus_sha256;
};
PrePassInfo run_pre_pass(const BuildConfig& cfg);

// The most frequent purely-alphabetic words, ties broken lexicographically.
std::vector<std::string> top_words(const std::unordered_map<std::string, long>& freq,
                                   long n);

struct GenStats {
  long chunks = 0;
  std::array<long, kTaskKindCount> first_draw{};
  std::map<std::string, long> skip_counts;
  long exhausted_chunks = 0;
  long generated_samples = 0;
  long generated_tokens = 0;
};

// Streams documents through segmentation + transformation + formatting in
// (ordinal, chunk_index) order. Worker count changes scheduling only; the
// emitted samples are a pure function of (corpus, config). The sink returns
// false to stop early. ring_doc supplies the first document's anomaly
// source (the stream's last document).
class L2tGenerator {
 public:
  L2tGenerator(const BuildConfig& cfg, const TokenizerSpec& tokenizer,
               const CharClassTables& tables, const SegmenterOptions& segmenter,
               const std::vector<std::string>& vocab);

  GenStats run(const std::function<std::optional<Document>()>& source,
               const Document* ring_doc,
               const std::function<bool(TaskSample&&)>& sink) const;

 private:
  const BuildConfig& cfg_;
  const TokenizerSpec& tokenizer_;
  const CharClassTables& tables_;
  const SegmenterOptions& segmenter_;
  const std::vector<std::string>& vocab_;
};

struct PackedSequence {
  std::vector<std::string> segments;
  std::string text;
  long token_count = 0;
  bool tail_flush = false;  // emitted by finish(), possibly under-filled
};

// Greedy first-fit-in-order packing over a bounded window of open
// sequences. Oversize samples are tail-truncated at a token boundary.
class SequencePacker {
 public:
  static constexpr size_t kOpenWindow = 64;

  SequencePacker(long max_seq_len, std::string separator, const TokenizerSpec& spec,
                 std::function<void(PackedSequence&&)> sink);

  void push(std::string sample_text, long token_count);
  void finish();

  long oversize_truncated() const { return oversize_truncated_; }
  long emitted() const { return emitted_; }
  long emitted_nonfinal() const { return fill_count_; }
  double mean_fill_nonfinal() const {
    return fill_count_ ? fill_sum_ / static_cast<double>(fill_count_) : 0.0;
  }
  long max_emitted_tokens() const { return max_emitted_tokens_; }

 private:
  struct Bin {
    std::vector<std::string> segments;
    std::string text;
    long tokens = 0;
  };

  long join_count(const Bin& bin, const std::string& sample, long sample_tokens) const;
  void emit(Bin&& bin, bool tail);

  long max_;
  std::string separator_;
  const TokenizerSpec& spec_;
  std::function<void(PackedSequence&&)> sink_;
  std::vector<Bin> open_;
  long oversize_truncated_ = 0;
  long emitted_ = 0;
  double fill_sum_ = 0.0;
  long fill_count_ = 0;
  long max_emitted_tokens_ = 0;
};

// Deterministic seeded permutation of [0, n): seeded scatter into
// ~65536-element blocks, then a Fisher-Yates pass per block.
std::vector<size_t> shuffled_order(size_t n, uint64_t seed);

// Audited record of a build. The config echo makes every dataset
// reproducible; checksums pin the bytes.
struct ScenarioManifest {
  nlohmann::json config;
  std::string command;  // "transform" | "mix"
  long documents = 0;
  long skipped_records = 0;

  long target_raw_tokens = 0;
  long target_l2t_tokens = 0;
  long realized_raw_tokens = 0;
  long realized_l2t_tokens = 0;

  std::map<std::string, long> task_counts;        // emitted samples
  std::map<std::string, long> first_draw_counts;  // pre-skip assignment
  std::map<std::string, long> skip_counts;
  long exhausted_chunks = 0;

  long raw_full_passes = 0;
  bool raw_partial_pass = false;
  bool raw_shortfall = false;
  bool l2t_shortfall = false;
  long budget_truncated_samples = 0;  // raw tail cut to land on the budget
  long oversize_truncated_samples = 0;

  long raw_sequences = 0;
  long l2t_sequences = 0;
  double raw_mean_fill_nonfinal = 0.0;
  double l2t_mean_fill_nonfinal = 0.0;
  long max_sequence_tokens = 0;

  std::string corpus_sha256;
  std::map<std::string, std::string> file_sha256;
  std::map<std::string, long> file_records;
  std::string built_at;

  nlohmann::json to_json() const;
  static ScenarioManifest from_json(const nlohmann::json& j);
  static ScenarioManifest load(const std::string& path);
  void save(const std::string& path) const;
};

// Output file names within output_dir.
inline constexpr const char* kL2tSamplesFile = "l2t_samples.jsonl";
inline constexpr const char* kRawSamplesFile = "raw_samples.jsonl";
inline constexpr const char* kPackedFile = "packed.jsonl";
inline constexpr const char* kManifestFile = "manifest.json";

ScenarioManifest run_transform(const BuildConfig& cfg);
ScenarioManifest run_mix(const BuildConfig& cfg);

struct PackReport {
  long samples = 0;
  long sequences = 0;
  double mean_fill_nonfinal = 0.0;
  long oversize_truncated = 0;
  long max_sequence_tokens = 0;
  long total_tokens = 0;
};
PackReport run_pack(const BuildConfig& cfg, const std::string& samples_path,
                    const std::string& packed_path, bool shuffle);

}  // namespace l2t
