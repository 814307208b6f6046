#include "text_model.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "errors.hpp"

namespace l2t {

namespace {

constexpr std::string_view kAsciiPunct = R"(!"#$%&'()*+,-./:;<=>?@[\]^_`{|}~)";
constexpr std::string_view kAsciiSpace = " \t\n\r\f\v";

// Width of the UTF-8 sequence starting at a lead byte; 1 for malformed
// bytes so scans always make progress.
size_t utf8_width(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xE) return 3;
  if ((lead >> 3) == 0x1E) return 4;
  return 1;
}

}  // namespace

TokenizerSpec TokenizerSpec::subword(std::vector<std::string> pieces) {
  TokenizerSpec spec;
  spec.kind = TokenizerKind::subword_vocab;
  spec.vocab = std::move(pieces);
  for (const auto& p : spec.vocab) {
    if (p.empty()) throw ConfigError("tokenizer.vocab: empty piece");
    spec.max_piece_bytes = std::max(spec.max_piece_bytes, p.size());
    spec.piece_set.insert(p);
  }
  if (spec.vocab.empty()) throw ConfigError("tokenizer.vocab: no pieces");
  return spec;
}

TokenizerSpec TokenizerSpec::subword_from_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open vocabulary file: " + path);
  std::vector<std::string> pieces;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) pieces.push_back(line);
  }
  return subword(std::move(pieces));
}

CharClassTables CharClassTables::defaults() {
  CharClassTables t;
  for (unsigned char c : kAsciiPunct) t.punctuation[c] = true;
  for (unsigned char c : kAsciiSpace) t.whitespace[c] = true;
  for (const auto& w : embedded_stopwords()) t.stopwords.insert(w);
  return t;
}

CharClassTables CharClassTables::with_stopwords_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open stopword file: " + path);
  CharClassTables t = defaults();
  t.stopwords.clear();
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::transform(line.begin(), line.end(), line.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    t.stopwords.insert(line);
  }
  if (t.stopwords.empty()) throw ConfigError("stopword file is empty: " + path);
  return t;
}

namespace {

bool ascii_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

long count_whitespace_tokens(std::string_view text) {
  long n = 0;
  bool in_run = false;
  for (unsigned char c : text) {
    if (ascii_space(c)) {
      in_run = false;
    } else if (!in_run) {
      in_run = true;
      ++n;
    }
  }
  return n;
}

// Greedy longest-match over the vocabulary; unmatched positions consume one
// scalar value and count as one token.
long count_subword_tokens(std::string_view text, const TokenizerSpec& spec) {
  long n = 0;
  size_t pos = 0;
  while (pos < text.size()) {
    const size_t limit = std::min(spec.max_piece_bytes, text.size() - pos);
    size_t matched = 0;
    for (size_t len = limit; len >= 1; --len) {
      if (spec.piece_set.contains(text.substr(pos, len))) {
        matched = len;
        break;
      }
    }
    if (matched == 0) matched = utf8_width(static_cast<unsigned char>(text[pos]));
    pos += matched;
    ++n;
  }
  return n;
}

}  // namespace

long count_tokens(std::string_view text, const TokenizerSpec& spec) {
  return spec.kind == TokenizerKind::whitespace ? count_whitespace_tokens(text)
                                                : count_subword_tokens(text, spec);
}

long whitespace_join_count(long count_a, std::string_view a, std::string_view b) {
  long n = count_a + count_whitespace_tokens(b);
  if (!a.empty() && !b.empty() && !ascii_space(static_cast<unsigned char>(a.back())) &&
      !ascii_space(static_cast<unsigned char>(b.front()))) {
    --n;  // boundary runs merge
  }
  return n;
}

std::string truncate_to_tokens(std::string_view text, long max_tokens,
                               const TokenizerSpec& spec) {
  if (max_tokens <= 0) return std::string();
  if (spec.kind == TokenizerKind::whitespace) {
    long seen = 0;
    bool in_run = false;
    for (size_t i = 0; i < text.size(); ++i) {
      if (ascii_space(static_cast<unsigned char>(text[i]))) {
        in_run = false;
      } else if (!in_run) {
        in_run = true;
        if (++seen == max_tokens + 1) {
          size_t end = i;
          while (end > 0 && ascii_space(static_cast<unsigned char>(text[end - 1]))) --end;
          return std::string(text.substr(0, end));
        }
      }
    }
    return std::string(text);
  }
  long n = 0;
  size_t pos = 0;
  while (pos < text.size() && n < max_tokens) {
    const size_t limit = std::min(spec.max_piece_bytes, text.size() - pos);
    size_t matched = 0;
    for (size_t len = limit; len >= 1; --len) {
      if (spec.piece_set.contains(text.substr(pos, len))) {
        matched = len;
        break;
      }
    }
    if (matched == 0) matched = utf8_width(static_cast<unsigned char>(text[pos]));
    pos += matched;
    ++n;
  }
  return std::string(text.substr(0, pos));
}

std::vector<WordSpan> tokenize_words(std::string_view text) {
  std::vector<WordSpan> spans;
  size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && ascii_space(static_cast<unsigned char>(text[i]))) ++i;
    if (i >= text.size()) break;
    size_t start = i;
    while (i < text.size() && !ascii_space(static_cast<unsigned char>(text[i]))) ++i;
    spans.push_back({start, i});
  }
  return spans;
}

WordClass classify_word(std::string_view word, const CharClassTables& tables) {
  // The punctuation table is ASCII-only, so multi-byte scalars never strip.
  size_t lo = 0;
  size_t hi = word.size();
  while (lo < hi && tables.is_punct(static_cast<unsigned char>(word[lo]))) ++lo;
  while (hi > lo && tables.is_punct(static_cast<unsigned char>(word[hi - 1]))) --hi;
  std::string_view cleaned = word.substr(lo, hi - lo);
  // Words that clean to nothing (pure punctuation) count as content.
  if (cleaned.empty()) return WordClass::content;

  std::string lowered(cleaned);
  std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (tables.stopwords.contains(lowered)) return WordClass::stopword;

  bool all_digits = true;
  for (unsigned char c : cleaned) {
    if (c < '0' || c > '9') {
      all_digits = false;
      break;
    }
  }
  return all_digits ? WordClass::digit : WordClass::content;
}

long count_punctuation(std::string_view text, const CharClassTables& tables) {
  long n = 0;
  for (unsigned char c : text) {
    if (c < 0x80 && tables.is_punct(c)) ++n;
  }
  return n;
}

long count_chars(std::string_view text) {
  long n = 0;
  for (unsigned char c : text) {
    if ((c & 0xC0) != 0x80) ++n;  // count everything but continuation bytes
  }
  return n;
}

bool is_valid_utf8(std::string_view text) {
  size_t i = 0;
  while (i < text.size()) {
    auto b0 = static_cast<unsigned char>(text[i]);
    size_t width;
    uint32_t min_cp;
    uint32_t cp;
    if (b0 < 0x80) {
      ++i;
      continue;
    } else if ((b0 >> 5) == 0x6) {
      width = 2;
      min_cp = 0x80;
      cp = b0 & 0x1F;
    } else if ((b0 >> 4) == 0xE) {
      width = 3;
      min_cp = 0x800;
      cp = b0 & 0x0F;
    } else if ((b0 >> 3) == 0x1E) {
      width = 4;
      min_cp = 0x10000;
      cp = b0 & 0x07;
    } else {
      return false;
    }
    if (i + width > text.size()) return false;
    for (size_t k = 1; k < width; ++k) {
      auto b = static_cast<unsigned char>(text[i + k]);
      if ((b & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (b & 0x3F);
    }
    if (cp < min_cp || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return false;
    i += width;
  }
  return true;
}

}  // namespace l2t
