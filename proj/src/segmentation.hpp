#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "text_model.hpp"

namespace l2t {

struct SentenceSpan {
  size_t start = 0;
  size_t end = 0;  // byte offsets into the body, [start, end)
};

struct SegmenterOptions {
  // Single uppercase initials ("J. Smith") never end a sentence.
  bool guard_single_initials = true;
  // Lowercase forms without the trailing period ("dr", "e.g").
  StringSet abbreviations;

  static SegmenterOptions defaults();
  static SegmenterOptions with_abbreviations_file(const std::string& path);
};

// Rule-based sentence boundaries: after . ! ? (plus any closing
// quotes/brackets) followed by whitespace and an uppercase letter, digit,
// or opening quote/bracket. Text without a boundary is one span.
std::vector<SentenceSpan> split_sentences(std::string_view body,
                                          const SegmenterOptions& opts);

// A run of complete sentences from one document, the unit every task
// transforms. text joins the sentences with single spaces.
struct Chunk {
  std::string doc_id;
  long chunk_index = 0;
  std::vector<std::string> sentences;
  std::vector<long> sentence_tokens;
  std::string text;
  long token_count = 0;
};

// Greedy accumulation up to the token target; a single sentence longer than
// the target forms its own chunk. No sentence is split or dropped.
std::vector<Chunk> chunk_document(std::string_view doc_id, std::string_view body,
                                  long target, const TokenizerSpec& spec,
                                  const SegmenterOptions& opts);

}  // namespace l2t
