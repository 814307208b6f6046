#include "tasks.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

#include "errors.hpp"

namespace l2t {

namespace {

constexpr std::array<std::string_view, kTaskKindCount> kTaskNames = {
    "char_count", "masked_char", "space",     "typo",      "last",
    "masked_word", "random_word", "shuffle",  "token_type", "deletion",
    "reordering", "fill_middle", "half",      "one",
};

constexpr std::array<std::string_view, kTokenClassCount> kClassNames = {
    "stopword", "digit", "content", "punctuation"};

bool ascii_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

std::string join_sentences(const std::vector<std::string>& sentences, size_t lo,
                           size_t hi) {
  std::string out;
  for (size_t i = lo; i < hi; ++i) {
    if (i > lo) out += ' ';
    out += sentences[i];
  }
  return out;
}

// UTF-8 scalar spans (byte ranges), optionally restricted by a predicate on
// the lead byte.
std::vector<WordSpan> scalar_spans(std::string_view text) {
  std::vector<WordSpan> spans;
  size_t i = 0;
  while (i < text.size()) {
    auto lead = static_cast<unsigned char>(text[i]);
    size_t width = 1;
    if (lead >= 0xF0)
      width = 4;
    else if (lead >= 0xE0)
      width = 3;
    else if (lead >= 0xC0)
      width = 2;
    width = std::min(width, text.size() - i);
    spans.push_back({i, i + width});
    i += width;
  }
  return spans;
}

// Replaces [start,end) byte ranges (given in ascending order) in one pass.
std::string splice(std::string_view text,
                   const std::vector<std::pair<WordSpan, std::string>>& edits) {
  std::string out;
  out.reserve(text.size());
  size_t pos = 0;
  for (const auto& [span, replacement] : edits) {
    out.append(text.substr(pos, span.start - pos));
    out.append(replacement);
    pos = span.end;
  }
  out.append(text.substr(pos));
  return out;
}

}  // namespace

std::string_view task_name(TaskKind kind) {
  return kTaskNames[static_cast<size_t>(kind)];
}

std::optional<TaskKind> task_from_name(std::string_view name) {
  for (int i = 0; i < kTaskKindCount; ++i) {
    if (kTaskNames[i] == name) return static_cast<TaskKind>(i);
  }
  return std::nullopt;
}

std::string_view token_class_name(TokenClass c) {
  return kClassNames[static_cast<size_t>(c)];
}

void TaskParams::validate() const {
  auto check_fraction = [](double v, const char* field) {
    if (!(v > 0.0 && v < 1.0))
      throw ConfigError(std::string("task_params.") + field + ": must be in (0,1)");
  };
  auto check_range = [](std::pair<double, double> r, const char* field) {
    if (!(r.first > 0.0 && r.second < 1.0 && r.first <= r.second))
      throw ConfigError(std::string("task_params.") + field +
                        ": must satisfy 0 < low <= high < 1");
  };
  check_fraction(masked_word_ratio, "masked_word_ratio");
  check_fraction(masked_char_ratio, "masked_char_ratio");
  check_range(random_ratio_range, "random_ratio_range");
  check_range(shuffle_ratio_range, "shuffle_ratio_range");
  check_range(typo_ratio_range, "typo_ratio_range");
  if (mask_tokens.empty())
    throw ConfigError("task_params.mask_tokens: must not be empty");
  for (const auto& t : mask_tokens) {
    if (t.empty()) throw ConfigError("task_params.mask_tokens: empty token");
    for (unsigned char c : t) {
      if (ascii_space(c))
        throw ConfigError("task_params.mask_tokens: token contains whitespace: " + t);
    }
  }
  if (!(deletion_mode_prob >= 0.0 && deletion_mode_prob <= 1.0))
    throw ConfigError("task_params.deletion_mode_prob: must be in [0,1]");
}

InstructionTemplates InstructionTemplates::defaults() {
  InstructionTemplates t;
  t.char_count = {
      "Calculate the character count of the following text:",
      "Count the characters in the following text.",
      "How many characters does the following text contain?",
      "Determine the total number of characters in this text.",
  };
  t.token_type[0] = {
      "Count the stop words in the following passage.",
      "How many stop words does the following passage contain?",
      "Determine the number of stop words in this text.",
      "Calculate the stop word count of the following text:",
  };
  t.token_type[1] = {
      "Count the digit tokens in the following passage.",
      "How many digit tokens does the following passage contain?",
      "Determine the number of digit tokens in this text.",
      "Calculate the digit token count of the following text:",
  };
  t.token_type[2] = {
      "Count the content words in the following passage.",
      "How many content words does the following passage contain?",
      "Determine the number of content words in this text.",
      "Calculate the content word count of the following text:",
  };
  t.token_type[3] = {
      "Count the punctuation marks in the following passage.",
      "How many punctuation marks does the following passage contain?",
      "Determine the number of punctuation marks in this text.",
      "Calculate the punctuation mark count of the following text:",
  };
  return t;
}

void InstructionTemplates::validate() const {
  if (char_count.empty())
    throw ConfigError("instructions.char_count: needs at least one template");
  for (int i = 0; i < kTokenClassCount; ++i) {
    if (token_type[i].empty())
      throw ConfigError(std::string("instructions.token_type.") +
                        std::string(kClassNames[i]) + ": needs at least one template");
  }
}

AnomalySource anomaly_from_chunks(const std::vector<Chunk>& chunks,
                                  const CharClassTables& tables) {
  AnomalySource src;
  for (const auto& chunk : chunks) {
    for (const auto& s : chunk.sentences) src.sentences.push_back(s);
    if (auto split = extract_ending(chunk.text, tables)) {
      src.endings.push_back(std::move(split->ending));
    }
  }
  return src;
}

AnomalySource make_anomaly_source(std::string_view body, long chunk_target,
                                  const TokenizerSpec& spec,
                                  const SegmenterOptions& seg,
                                  const CharClassTables& tables) {
  return anomaly_from_chunks(chunk_document("", body, chunk_target, spec, seg),
                             tables);
}

long corruption_count(double ratio, long eligible) {
  return std::max<long>(1, std::llround(ratio * static_cast<double>(eligible)));
}

std::vector<size_t> select_positions(RngBase& rng, size_t n, size_t k) {
  k = std::min(k, n);
  std::vector<size_t> pool(n);
  std::iota(pool.begin(), pool.end(), size_t{0});
  for (size_t i = 0; i < k; ++i) {
    const size_t j = i + static_cast<size_t>(rng.below(n - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  std::sort(pool.begin(), pool.end());
  return pool;
}

std::optional<EndingSplit> extract_ending(std::string_view text,
                                          const CharClassTables& tables) {
  const auto words = tokenize_words(text);
  if (words.size() < 2) return std::nullopt;
  for (size_t i = words.size() - 1; i-- > 0;) {
    std::string_view w = text.substr(words[i].start, words[i].end - words[i].start);
    if (classify_word(w, tables) == WordClass::stopword) {
      EndingSplit split;
      split.stem = std::string(text.substr(0, words[i].end));
      split.ending = std::string(text.substr(words[i + 1].start));
      return split;
    }
  }
  return std::nullopt;
}

RawPair gen_char_count(const Chunk& chunk, const InstructionTemplates& templates,
                       RngBase& rng) {
  RawPair pair;
  pair.task = TaskKind::char_count;
  pair.aux_instruction = templates.char_count[rng.below(templates.char_count.size())];
  pair.input = chunk.text;
  pair.output = std::to_string(count_chars(chunk.text));
  return pair;
}

RawPair gen_masked_char(const Chunk& chunk, const TaskParams& params, RngBase& rng) {
  std::vector<WordSpan> eligible;
  for (const auto& span : scalar_spans(chunk.text)) {
    if (!ascii_space(static_cast<unsigned char>(chunk.text[span.start])))
      eligible.push_back(span);
  }
  if (eligible.empty())
    return RawPair::skipped(TaskKind::masked_char, "no_characters");

  // One mask token for the whole sample.
  const std::string& mask = params.mask_tokens[rng.below(params.mask_tokens.size())];
  const long k = corruption_count(params.masked_char_ratio,
                                  static_cast<long>(eligible.size()));
  const auto picks = select_positions(rng, eligible.size(), static_cast<size_t>(k));

  std::vector<std::pair<WordSpan, std::string>> edits;
  edits.reserve(picks.size());
  for (size_t p : picks) edits.emplace_back(eligible[p], mask);

  RawPair pair;
  pair.task = TaskKind::masked_char;
  pair.input = splice(chunk.text, edits);
  pair.output = chunk.text;
  return pair;
}

RawPair gen_space(const Chunk& chunk) {
  std::string stripped;
  stripped.reserve(chunk.text.size());
  bool saw_space = false;
  for (char c : chunk.text) {
    if (ascii_space(static_cast<unsigned char>(c))) {
      saw_space = true;
    } else {
      stripped += c;
    }
  }
  if (!saw_space) return RawPair::skipped(TaskKind::space, "no_whitespace");

  RawPair pair;
  pair.task = TaskKind::space;
  pair.input = std::move(stripped);
  pair.output = chunk.text;
  return pair;
}

RawPair gen_typo(const Chunk& chunk, const TaskParams& params, RngBase& rng) {
  static constexpr std::string_view kAlnum = "abcdefghijklmnopqrstuvwxyz0123456789";
  std::vector<size_t> eligible;
  for (size_t i = 0; i < chunk.text.size(); ++i) {
    if (std::isalpha(static_cast<unsigned char>(chunk.text[i]))) eligible.push_back(i);
  }
  if (eligible.empty()) return RawPair::skipped(TaskKind::typo, "no_alphabetic");

  const double ratio =
      rng.uniform(params.typo_ratio_range.first, params.typo_ratio_range.second);
  const long k = corruption_count(ratio, static_cast<long>(eligible.size()));
  const auto picks = select_positions(rng, eligible.size(), static_cast<size_t>(k));

  std::string corrupted = chunk.text;
  for (size_t p : picks) {
    const size_t pos = eligible[p];
    const char original = corrupted[pos];
    const bool upper = std::isupper(static_cast<unsigned char>(original));
    char replacement;
    do {
      replacement = kAlnum[rng.below(kAlnum.size())];
      if (upper && std::isalpha(static_cast<unsigned char>(replacement)))
        replacement = static_cast<char>(std::toupper(replacement));
    } while (replacement == original);
    corrupted[pos] = replacement;
  }

  RawPair pair;
  pair.task = TaskKind::typo;
  pair.input = std::move(corrupted);
  pair.output = chunk.text;
  return pair;
}

RawPair gen_last(const Chunk& chunk, const AnomalySource& anomaly,
                 const TaskParams& params, const CharClassTables& tables,
                 RngBase& rng) {
  auto split = extract_ending(chunk.text, tables);
  if (!split || anomaly.endings.empty())
    return RawPair::skipped(TaskKind::last, "no_ending");

  const std::string& mask = params.mask_tokens[rng.below(params.mask_tokens.size())];
  const std::string& distractor = anomaly.endings[rng.below(anomaly.endings.size())];
  const bool true_first = rng.below(2) == 0;

  const std::string& first = true_first ? split->ending : distractor;
  const std::string& second = true_first ? distractor : split->ending;

  RawPair pair;
  pair.task = TaskKind::last;
  pair.input =
      split->stem + " " + mask + "?\n\nOptions:\n" + first + "\n" + second;
  pair.output = split->ending;
  return pair;
}

RawPair gen_masked_word(const Chunk& chunk, const TaskParams& params, RngBase& rng) {
  const auto words = tokenize_words(chunk.text);
  if (words.empty()) return RawPair::skipped(TaskKind::masked_word, "no_words");

  const long k =
      corruption_count(params.masked_word_ratio, static_cast<long>(words.size()));
  const auto picks = select_positions(rng, words.size(), static_cast<size_t>(k));

  // Mask token drawn independently per site.
  std::vector<std::pair<WordSpan, std::string>> edits;
  edits.reserve(picks.size());
  for (size_t p : picks) {
    edits.emplace_back(words[p],
                       params.mask_tokens[rng.below(params.mask_tokens.size())]);
  }

  RawPair pair;
  pair.task = TaskKind::masked_word;
  pair.input = splice(chunk.text, edits);
  pair.output = chunk.text;
  return pair;
}

RawPair gen_random_word(const Chunk& chunk, const TaskParams& params,
                        const std::vector<std::string>& vocab, RngBase& rng) {
  if (vocab.empty())
    throw ConfigError("random_word: replacement vocabulary is empty");
  const auto words = tokenize_words(chunk.text);
  if (words.empty()) return RawPair::skipped(TaskKind::random_word, "no_words");

  const double ratio =
      rng.uniform(params.random_ratio_range.first, params.random_ratio_range.second);
  const long k = corruption_count(ratio, static_cast<long>(words.size()));
  const auto picks = select_positions(rng, words.size(), static_cast<size_t>(k));

  std::vector<std::pair<WordSpan, std::string>> edits;
  edits.reserve(picks.size());
  for (size_t p : picks) {
    std::string_view original =
        std::string_view(chunk.text).substr(words[p].start, words[p].end - words[p].start);
    size_t idx = rng.below(vocab.size());
    for (int attempt = 0; attempt < 16 && vocab[idx] == original; ++attempt) {
      idx = rng.below(vocab.size());
    }
    if (vocab[idx] == original) {
      // Tiny vocabularies may only contain the word itself; scan for any
      // other entry before giving up on inequality.
      for (size_t step = 1; step < vocab.size(); ++step) {
        const size_t alt = (idx + step) % vocab.size();
        if (vocab[alt] != original) {
          idx = alt;
          break;
        }
      }
    }
    edits.emplace_back(words[p], vocab[idx]);
  }

  RawPair pair;
  pair.task = TaskKind::random_word;
  pair.input = splice(chunk.text, edits);
  pair.output = chunk.text;
  return pair;
}

RawPair gen_shuffle(const Chunk& chunk, const TaskParams& params, RngBase& rng) {
  const auto words = tokenize_words(chunk.text);
  if (words.size() < 2) return RawPair::skipped(TaskKind::shuffle, "single_word");

  const double ratio =
      rng.uniform(params.shuffle_ratio_range.first, params.shuffle_ratio_range.second);
  const size_t k = std::min(
      words.size(),
      static_cast<size_t>(std::max<long>(
          2, corruption_count(ratio, static_cast<long>(words.size())))));
  const auto picks = select_positions(rng, words.size(), k);

  std::vector<size_t> perm(k);
  std::iota(perm.begin(), perm.end(), size_t{0});
  bool identity = true;
  do {
    for (size_t i = 0; i + 1 < k; ++i) {
      const size_t j = i + static_cast<size_t>(rng.below(k - i));
      std::swap(perm[i], perm[j]);
    }
    identity = true;
    for (size_t i = 0; i < k; ++i) {
      if (perm[i] != i) {
        identity = false;
        break;
      }
    }
  } while (identity);

  std::vector<std::pair<WordSpan, std::string>> edits;
  edits.reserve(k);
  for (size_t i = 0; i < k; ++i) {
    const WordSpan src = words[picks[perm[i]]];
    edits.emplace_back(
        words[picks[i]],
        std::string(chunk.text.substr(src.start, src.end - src.start)));
  }

  RawPair pair;
  pair.task = TaskKind::shuffle;
  pair.input = splice(chunk.text, edits);
  pair.output = chunk.text;
  return pair;
}

RawPair gen_token_type(const Chunk& chunk, const InstructionTemplates& templates,
                       const CharClassTables& tables, RngBase& rng) {
  const auto cls = static_cast<TokenClass>(rng.below(kTokenClassCount));
  const auto& pool = templates.token_type[static_cast<size_t>(cls)];
  const std::string& instruction = pool[rng.below(pool.size())];

  long count = 0;
  if (cls == TokenClass::punctuation) {
    count = count_punctuation(chunk.text, tables);
  } else {
    const WordClass want = cls == TokenClass::stopword ? WordClass::stopword
                           : cls == TokenClass::digit  ? WordClass::digit
                                                       : WordClass::content;
    for (const auto& span : tokenize_words(chunk.text)) {
      std::string_view w =
          std::string_view(chunk.text).substr(span.start, span.end - span.start);
      if (classify_word(w, tables) == want) ++count;
    }
  }

  RawPair pair;
  pair.task = TaskKind::token_type;
  pair.aux_instruction = instruction;
  pair.input = chunk.text;
  pair.output = std::to_string(count);
  return pair;
}

RawPair gen_deletion(const Chunk& chunk, const AnomalySource& anomaly,
                     const TaskParams& params, RngBase& rng) {
  if (chunk.sentences.size() < 2)
    return RawPair::skipped(TaskKind::deletion, "single_sentence");
  if (anomaly.sentences.empty())
    return RawPair::skipped(TaskKind::deletion, "no_anomaly_source");

  const std::string& inserted =
      anomaly.sentences[rng.below(anomaly.sentences.size())];
  const size_t boundary = rng.below(chunk.sentences.size() + 1);
  const bool reconstruct = rng.next_double() < params.deletion_mode_prob;

  std::string corrupted;
  for (size_t i = 0; i <= chunk.sentences.size(); ++i) {
    if (i == boundary) {
      if (!corrupted.empty()) corrupted += ' ';
      corrupted += inserted;
    }
    if (i < chunk.sentences.size()) {
      if (!corrupted.empty()) corrupted += ' ';
      corrupted += chunk.sentences[i];
    }
  }

  RawPair pair;
  pair.task = TaskKind::deletion;
  pair.input = std::move(corrupted);
  pair.output = reconstruct ? chunk.text : inserted;
  return pair;
}

RawPair gen_reordering(const Chunk& chunk, RngBase& rng) {
  const size_t n = chunk.sentences.size();
  if (n < 2) return RawPair::skipped(TaskKind::reordering, "single_sentence");

  std::vector<size_t> perm(n);
  std::iota(perm.begin(), perm.end(), size_t{0});
  bool identity = true;
  do {
    for (size_t i = 0; i + 1 < n; ++i) {
      const size_t j = i + static_cast<size_t>(rng.below(n - i));
      std::swap(perm[i], perm[j]);
    }
    identity = true;
    for (size_t i = 0; i < n; ++i) {
      if (perm[i] != i) {
        identity = false;
        break;
      }
    }
  } while (identity);

  std::string permuted;
  for (size_t i = 0; i < n; ++i) {
    if (i) permuted += ' ';
    permuted += chunk.sentences[perm[i]];
  }

  RawPair pair;
  pair.task = TaskKind::reordering;
  pair.input = std::move(permuted);
  pair.output = chunk.text;
  return pair;
}

RawPair gen_fill_middle(const Chunk& chunk, const TaskParams& params, RngBase& rng) {
  const size_t n = chunk.sentences.size();
  if (n < 3) return RawPair::skipped(TaskKind::fill_middle, "too_few_sentences");

  const std::string& mask = params.mask_tokens[rng.below(params.mask_tokens.size())];

  // Boundaries that make the three passages' token counts as equal as
  // possible; ties resolve to the earlier boundary pair.
  std::vector<long> prefix(n + 1, 0);
  for (size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + chunk.sentence_tokens[i];
  const double third = static_cast<double>(prefix[n]) / 3.0;

  size_t best_i = 1;
  size_t best_j = 2;
  double best_cost = -1.0;
  for (size_t i = 1; i + 1 < n + 1; ++i) {
    for (size_t j = i + 1; j < n; ++j) {
      const double cost = std::abs(prefix[i] - third) +
                          std::abs(prefix[j] - prefix[i] - third) +
                          std::abs(prefix[n] - prefix[j] - third);
      if (best_cost < 0.0 || cost < best_cost) {
        best_cost = cost;
        best_i = i;
        best_j = j;
      }
    }
  }

  RawPair pair;
  pair.task = TaskKind::fill_middle;
  pair.input = join_sentences(chunk.sentences, 0, best_i) + "\n" + mask + "\n" +
               join_sentences(chunk.sentences, best_j, n);
  pair.output = join_sentences(chunk.sentences, best_i, best_j);
  return pair;
}

RawPair gen_half(const Chunk& chunk) {
  const size_t n = chunk.sentences.size();
  if (n < 2) return RawPair::skipped(TaskKind::half, "single_sentence");

  long total = 0;
  for (long t : chunk.sentence_tokens) total += t;
  size_t best = 1;
  long best_dist = -1;
  long cum = 0;
  for (size_t i = 1; i < n; ++i) {
    cum += chunk.sentence_tokens[i - 1];
    const long dist = std::abs(2 * cum - total);  // |cum - total/2| scaled by 2
    if (best_dist < 0 || dist < best_dist) {
      best_dist = dist;
      best = i;
    }
  }

  RawPair pair;
  pair.task = TaskKind::half;
  pair.input = join_sentences(chunk.sentences, 0, best);
  pair.output = join_sentences(chunk.sentences, best, n);
  return pair;
}

RawPair gen_one(const Chunk& chunk) {
  const auto words = tokenize_words(chunk.text);
  if (words.size() < 2) return RawPair::skipped(TaskKind::one, "single_word");

  RawPair pair;
  pair.task = TaskKind::one;
  pair.input = chunk.text.substr(words[0].start, words[0].end - words[0].start);
  pair.output = chunk.text;
  return pair;
}

RawPair apply_task(TaskKind kind, const Chunk& chunk, const TaskContext& ctx,
                   RngBase& rng) {
  switch (kind) {
    case TaskKind::char_count:
      return gen_char_count(chunk, ctx.templates, rng);
    case TaskKind::masked_char:
      return gen_masked_char(chunk, ctx.params, rng);
    case TaskKind::space:
      return gen_space(chunk);
    case TaskKind::typo:
      return gen_typo(chunk, ctx.params, rng);
    case TaskKind::last:
      return gen_last(chunk, ctx.anomaly, ctx.params, ctx.tables, rng);
    case TaskKind::masked_word:
      return gen_masked_word(chunk, ctx.params, rng);
    case TaskKind::random_word:
      return gen_random_word(chunk, ctx.params, ctx.vocab, rng);
    case TaskKind::shuffle:
      return gen_shuffle(chunk, ctx.params, rng);
    case TaskKind::token_type:
      return gen_token_type(chunk, ctx.templates, ctx.tables, rng);
    case TaskKind::deletion:
      return gen_deletion(chunk, ctx.anomaly, ctx.params, rng);
    case TaskKind::reordering:
      return gen_reordering(chunk, rng);
    case TaskKind::fill_middle:
      return gen_fill_middle(chunk, ctx.params, rng);
    case TaskKind::half:
      return gen_half(chunk);
    case TaskKind::one:
      return gen_one(chunk);
  }
  throw ConfigError("unknown task kind");
}

}  // namespace l2t
