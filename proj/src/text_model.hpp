#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace l2t {

enum class TokenizerKind { whitespace, subword_vocab };

struct StringHash {
  using is_transparent = void;
  size_t operator()(std::string_view s) const noexcept {
    return std::hash<std::string_view>{}(s);
  }
};
using StringSet = std::unordered_set<std::string, StringHash, std::equal_to<>>;

// Token counting spec. The whitespace kind counts maximal non-whitespace
// runs; subword_vocab counts greedy longest-match pieces with a
// single-character fallback, which is enough to budget sequences without
// producing token ids.
struct TokenizerSpec {
  TokenizerKind kind = TokenizerKind::whitespace;
  std::vector<std::string> vocab;  // subword pieces, any order

  static TokenizerSpec whitespace() { return {}; }
  static TokenizerSpec subword(std::vector<std::string> pieces);
  static TokenizerSpec subword_from_file(const std::string& path);

  // Derived lookup state, built once.
  StringSet piece_set;
  size_t max_piece_bytes = 0;
};

enum class WordClass { stopword, digit, content };

struct CharClassTables {
  // ASCII-indexed membership tables. Multi-byte scalars are never
  // punctuation or whitespace under this model.
  std::array<bool, 256> punctuation{};
  std::array<bool, 256> whitespace{};
  StringSet stopwords;  // lowercase forms

  static CharClassTables defaults();
  // One lowercase word per line; replaces the embedded stopword list.
  static CharClassTables with_stopwords_file(const std::string& path);

  bool is_space(unsigned char c) const { return whitespace[c]; }
  bool is_punct(unsigned char c) const { return punctuation[c]; }
};

// The embedded English stop-word list (frozen; see stopwords.cpp).
const std::vector<std::string>& embedded_stopwords();

struct WordSpan {
  size_t start = 0;
  size_t end = 0;  // byte offsets, [start, end)
};

long count_tokens(std::string_view text, const TokenizerSpec& spec);

// Exact token count of a ⊕ b for the whitespace kind, given the parts'
// counts: concatenation can merge at most the boundary pair.
long whitespace_join_count(long count_a, std::string_view a, std::string_view b);

// Longest prefix of text containing exactly max_tokens tokens. Returns text
// unchanged when it is already short enough.
std::string truncate_to_tokens(std::string_view text, long max_tokens,
                               const TokenizerSpec& spec);

std::vector<WordSpan> tokenize_words(std::string_view text);

WordClass classify_word(std::string_view word, const CharClassTables& tables);

long count_punctuation(std::string_view text, const CharClassTables& tables);

// Unicode scalar values, whitespace included.
long count_chars(std::string_view text);

bool is_valid_utf8(std::string_view text);

}  // namespace l2t
