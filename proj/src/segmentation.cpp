#include "segmentation.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "errors.hpp"

namespace l2t {

namespace {

bool ascii_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_terminal(char c) { return c == '.' || c == '!' || c == '?'; }

bool is_closer(char c) {
  return c == ')' || c == ']' || c == '}' || c == '"' || c == '\'';
}

// Characters that may open the next sentence.
bool starts_sentence(std::string_view body, size_t i) {
  unsigned char c = body[i];
  if (std::isupper(c) || std::isdigit(c)) return true;
  if (c == '"' || c == '\'' || c == '(' || c == '[' || c == '{') return true;
  // Opening typographic quotes: U+2018/U+201C (e2 80 98 / e2 80 9c),
  // U+00AB (c2 ab).
  if (c == 0xE2 && i + 2 < body.size() && static_cast<unsigned char>(body[i + 1]) == 0x80) {
    unsigned char b2 = body[i + 2];
    return b2 == 0x98 || b2 == 0x9C;
  }
  if (c == 0xC2 && i + 1 < body.size())
    return static_cast<unsigned char>(body[i + 1]) == 0xAB;
  return false;
}

// The word immediately before a period, including internal periods so
// "e.g." and initials resolve as one token.
std::string_view token_before(std::string_view body, size_t dot) {
  size_t start = dot;
  while (start > 0) {
    unsigned char c = body[start - 1];
    if (std::isalpha(c) || c == '.') {
      --start;
    } else {
      break;
    }
  }
  std::string_view tok = body.substr(start, dot - start);
  while (!tok.empty() && tok.front() == '.') tok.remove_prefix(1);
  return tok;
}

bool guards_boundary(std::string_view body, size_t dot, const SegmenterOptions& opts) {
  std::string_view tok = token_before(body, dot);
  if (tok.empty()) return false;
  if (opts.guard_single_initials && tok.size() == 1 &&
      std::isupper(static_cast<unsigned char>(tok[0]))) {
    return true;
  }
  std::string lowered(tok);
  std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return opts.abbreviations.contains(lowered);
}

}  // namespace

SegmenterOptions SegmenterOptions::defaults() {
  SegmenterOptions opts;
  static const char* kAbbrev[] = {
      "mr",  "mrs", "ms",  "dr",   "prof", "rev",  "hon",    "st",  "sr",
      "jr",  "vs",  "etc", "inc",  "ltd",  "co",   "corp",   "dept", "est",
      "fig", "e.g", "i.e", "cf",   "al",   "approx", "vol",  "pp",  "ca",
  };
  for (const char* a : kAbbrev) opts.abbreviations.insert(a);
  return opts;
}

SegmenterOptions SegmenterOptions::with_abbreviations_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open abbreviation file: " + path);
  SegmenterOptions opts;
  opts.guard_single_initials = true;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::transform(line.begin(), line.end(), line.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    opts.abbreviations.insert(line);
  }
  return opts;
}

std::vector<SentenceSpan> split_sentences(std::string_view body,
                                          const SegmenterOptions& opts) {
  std::vector<SentenceSpan> spans;
  size_t i = 0;
  while (i < body.size() && ascii_space(static_cast<unsigned char>(body[i]))) ++i;
  if (i >= body.size()) return spans;

  size_t cur = i;
  while (i < body.size()) {
    if (is_terminal(body[i])) {
      size_t end = i + 1;
      while (end < body.size() && is_closer(body[end])) ++end;
      size_t next = end;
      while (next < body.size() && ascii_space(static_cast<unsigned char>(body[next]))) ++next;
      const bool at_eof = next >= body.size();
      const bool has_gap = next > end;
      if (!at_eof && has_gap && starts_sentence(body, next) &&
          !(body[i] == '.' && guards_boundary(body, i, opts))) {
        spans.push_back({cur, end});
        cur = next;
        i = next;
        continue;
      }
      i = end;
      continue;
    }
    ++i;
  }
  // Trailing span: everything from cur to the last non-whitespace byte.
  size_t tail = body.size();
  while (tail > cur && ascii_space(static_cast<unsigned char>(body[tail - 1]))) --tail;
  if (tail > cur) spans.push_back({cur, tail});
  return spans;
}

std::vector<Chunk> chunk_document(std::string_view doc_id, std::string_view body,
                                  long target, const TokenizerSpec& spec,
                                  const SegmenterOptions& opts) {
  if (target < 1) throw ConfigError("chunk_target must be >= 1");
  std::vector<Chunk> chunks;
  const auto spans = split_sentences(body, opts);
  if (spans.empty()) return chunks;

  Chunk cur;
  long cur_tokens = 0;
  auto flush = [&]() {
    if (cur.sentences.empty()) return;
    std::string joined;
    for (size_t k = 0; k < cur.sentences.size(); ++k) {
      if (k) joined += ' ';
      joined += cur.sentences[k];
    }
    cur.doc_id = std::string(doc_id);
    cur.chunk_index = static_cast<long>(chunks.size());
    cur.text = std::move(joined);
    cur.token_count = count_tokens(cur.text, spec);
    chunks.push_back(std::move(cur));
    cur = Chunk{};
    cur_tokens = 0;
  };

  for (const auto& span : spans) {
    std::string sentence(body.substr(span.start, span.end - span.start));
    const long tokens = count_tokens(sentence, spec);
    if (!cur.sentences.empty() && cur_tokens + tokens > target) flush();
    cur.sentences.push_back(std::move(sentence));
    cur.sentence_tokens.push_back(tokens);
    cur_tokens += tokens;
    if (cur_tokens >= target) flush();
  }
  flush();
  return chunks;
}

}  // namespace l2t
