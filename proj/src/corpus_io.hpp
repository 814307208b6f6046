#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rng.hpp"

namespace l2t {

struct Document {
  std::string doc_id;
  std::string body;
  long ordinal = 0;
  std::map<std::string, std::string> meta;
};

enum class CorpusFormat { jsonl, plain_dir };
enum class IngestMode { lenient, strict };

// Streams documents in file order. jsonl records need a "text" field; the
// optional "id" becomes doc_id, otherwise "<filename>#<line>". plain_dir
// reads *.txt files in sorted order, one document per file.
class CorpusReader {
 public:
  CorpusReader(std::string path, CorpusFormat format,
               IngestMode mode = IngestMode::lenient);
  ~CorpusReader();
  CorpusReader(CorpusReader&&) noexcept;
  CorpusReader& operator=(CorpusReader&&) noexcept;

  std::optional<Document> next();
  long skipped() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Side assignment for the Disjoint scenario: the parity of a seeded hash of
// (seed, doc_id). Order-independent and streamable; expected 50/50 by
// document count.
inline int split_side(uint64_t seed, std::string_view doc_id) {
  return static_cast<int>(mix64(seed ^ 0x5157A9D6F2B3C4E1ull, fnv1a64(doc_id)) & 1u);
}

// Reader restricted to one side of the disjoint split.
class SplitCorpusReader {
 public:
  SplitCorpusReader(std::string path, CorpusFormat format, IngestMode mode,
                    uint64_t seed, int side);
  std::optional<Document> next();
  long skipped() const { return inner_.skipped(); }

 private:
  CorpusReader inner_;
  uint64_t seed_;
  int side_;
};

struct CorpusSplit {
  std::string path;
  CorpusFormat format = CorpusFormat::jsonl;
  IngestMode mode = IngestMode::lenient;
  uint64_t seed = 0;

  SplitCorpusReader side_a() const { return {path, format, mode, seed, 0}; }
  SplitCorpusReader side_b() const { return {path, format, mode, seed, 1}; }
};

inline CorpusSplit split_disjoint(std::string path, CorpusFormat format,
                                  IngestMode mode, uint64_t seed) {
  return {std::move(path), format, mode, seed};
}

// One training sample as serialized to the output jsonl.
struct SampleRecord {
  std::string task;
  std::string input;
  std::string output;
  std::string text;
  std::string doc_id;
  long chunk_index = 0;
  long token_count = 0;
};

// Single-writer jsonl sink. Removes the partial file if a write fails.
class SampleWriter {
 public:
  explicit SampleWriter(std::string path);
  ~SampleWriter();

  void add(const SampleRecord& record);
  long close();  // returns written count
  long count() const { return count_; }

 private:
  std::string path_;
  std::ofstream out_;
  long count_ = 0;
  bool open_ = false;
};

class SampleReader {
 public:
  explicit SampleReader(std::string path);
  std::optional<SampleRecord> next();
  long skipped() const { return skipped_; }

 private:
  std::string path_;
  std::ifstream in_;
  long line_ = 0;
  long skipped_ = 0;
};

std::vector<SampleRecord> read_samples(const std::string& path);

}  // namespace l2t
