#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "scripted_rng.hpp"
#include "segmentation.hpp"
#include "synth_corpus.hpp"
#include "tasks.hpp"

using namespace l2t;
using l2t::testing::ScriptedRng;

namespace {

const TaskParams kParams;
const InstructionTemplates kTemplates = InstructionTemplates::defaults();

Chunk make_chunk(const std::vector<std::string>& sentences,
                 const std::string& doc_id = "d", long index = 0) {
  Chunk c;
  c.doc_id = doc_id;
  c.chunk_index = index;
  const auto spec = TokenizerSpec::whitespace();
  for (const auto& s : sentences) {
    c.sentences.push_back(s);
    c.sentence_tokens.push_back(count_tokens(s, spec));
    if (!c.text.empty()) c.text += ' ';
    c.text += s;
  }
  c.token_count = count_tokens(c.text, spec);
  return c;
}

std::vector<std::string> words_of(const std::string& text) {
  std::vector<std::string> out;
  for (const auto& s : tokenize_words(text))
    out.push_back(text.substr(s.start, s.end - s.start));
  return out;
}

// Random chunks via the real segmentation path.
std::vector<Chunk> synth_chunks(uint64_t seed, int documents, long target = 60) {
  testing::SentenceFactory factory(seed);
  const auto spec = TokenizerSpec::whitespace();
  const auto opts = SegmenterOptions::defaults();
  std::vector<Chunk> chunks;
  for (int d = 0; d < documents; ++d) {
    const std::string body = factory.document(3, 12);
    for (auto& c : chunk_document("doc-" + std::to_string(d), body, target, spec, opts))
      chunks.push_back(std::move(c));
  }
  return chunks;
}

long count_occurrences(const std::string& haystack, const std::string& needle) {
  long n = 0;
  size_t pos = 0;
  while ((pos = haystack.find(needle, pos)) != std::string::npos) {
    ++n;
    pos += needle.size();
  }
  return n;
}

}  // namespace

TEST_CASE("shared corruption rule: k = max(1, round(r*n))") {
  CHECK(corruption_count(0.15, 1) == 1);
  CHECK(corruption_count(0.15, 2) == 1);   // round(0.3) = 0, floor to 1
  CHECK(corruption_count(0.15, 10) == 2);  // round(1.5) = 2
  CHECK(corruption_count(0.15, 100) == 15);
  CHECK(corruption_count(0.01, 400) == 4);
}

TEST_CASE("select_positions draws distinct ascending positions") {
  SplitMixRng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const size_t n = 1 + rng.below(50);
    const size_t k = 1 + rng.below(n);
    const auto picks = select_positions(rng, n, k);
    REQUIRE(picks.size() == k);
    CHECK(std::is_sorted(picks.begin(), picks.end()));
    CHECK(std::set<size_t>(picks.begin(), picks.end()).size() == k);
    for (size_t p : picks) CHECK(p < n);
  }
}

// --- golden micro-examples under forced draws -------------------------------

TEST_CASE("golden: char_count Text -> 4") {
  ScriptedRng rng;
  rng.script_below({0});
  const auto pair = gen_char_count(make_chunk({"Text"}), kTemplates, rng);
  CHECK(!pair.skip);
  CHECK(pair.input == "Text");
  CHECK(pair.output == "4");
  CHECK(pair.aux_instruction == kTemplates.char_count[0]);
}

TEST_CASE("golden: masked_char c_ar -> char") {
  ScriptedRng rng;
  rng.script_below({1, 1});  // mask "___", position 1
  const auto pair = gen_masked_char(make_chunk({"char"}), kParams, rng);
  CHECK(!pair.skip);
  CHECK(pair.input == "c___ar");
  CHECK(pair.output == "char");
}

TEST_CASE("golden: space Ilikea -> I like a") {
  const auto pair = gen_space(make_chunk({"I like a"}));
  CHECK(!pair.skip);
  CHECK(pair.input == "Ilikea");
  CHECK(pair.output == "I like a");
}

TEST_CASE("golden: typo typ0 -> typo") {
  ScriptedRng rng;
  rng.script_double({0.5});   // ratio draw
  rng.script_below({3, 26});  // position 3, replacement '0'
  const auto pair = gen_typo(make_chunk({"typo"}), kParams, rng);
  CHECK(!pair.skip);
  CHECK(pair.input == "typ0");
  CHECK(pair.output == "typo");
}

TEST_CASE("golden: last predicts the segment after the final stopword") {
  AnomalySource anomaly;
  anomaly.endings = {"worst"};
  ScriptedRng rng;
  rng.script_below({4, 0, 0});  // mask "+++", distractor 0, true option first
  const auto pair = gen_last(make_chunk({"cats are the best"}), anomaly, kParams,
                             CharClassTables::defaults(), rng);
  CHECK(!pair.skip);
  CHECK(pair.input == "cats are the +++?\n\nOptions:\nbest\nworst");
  CHECK(pair.output == "best");

  // The answer does not depend on option order.
  ScriptedRng rng2;
  rng2.script_below({4, 0, 1});
  const auto pair2 = gen_last(make_chunk({"cats are the best"}), anomaly, kParams,
                              CharClassTables::defaults(), rng2);
  CHECK(pair2.input == "cats are the +++?\n\nOptions:\nworst\nbest");
  CHECK(pair2.output == "best");
}

TEST_CASE("golden: masked_word I [MASK] -> I am") {
  ScriptedRng rng;
  rng.script_below({1, 0});  // select word 1, mask "[MASK]"
  const auto pair = gen_masked_word(make_chunk({"I am"}), kParams, rng);
  CHECK(!pair.skip);
  CHECK(pair.input == "I [MASK]");
  CHECK(pair.output == "I am");
}

TEST_CASE("golden: random_word Sea am -> I am") {
  ScriptedRng rng;
  rng.script_double({0.5});
  rng.script_below({0, 0});  // select word 0, vocab entry "Sea"
  const auto pair =
      gen_random_word(make_chunk({"I am"}), kParams, {"Sea", "Tea"}, rng);
  CHECK(!pair.skip);
  CHECK(pair.input == "Sea am");
  CHECK(pair.output == "I am");
}

TEST_CASE("golden: shuffle w1 w3 w2 -> w1 w2 w3") {
  ScriptedRng rng;
  rng.script_double({0.5});
  rng.script_below({1, 1, 1});  // select {1,2}, swap them
  const auto pair = gen_shuffle(make_chunk({"w1 w2 w3"}), kParams, rng);
  CHECK(!pair.skip);
  CHECK(pair.input == "w1 w3 w2");
  CHECK(pair.output == "w1 w2 w3");
}

TEST_CASE("golden: token_type counts punctuation") {
  ScriptedRng rng;
  rng.script_below({3, 0});  // class punctuation, template 0
  const auto pair = gen_token_type(make_chunk({"Hello, world!"}), kTemplates,
                                   CharClassTables::defaults(), rng);
  CHECK(!pair.skip);
  CHECK(pair.output == "2");
  CHECK(pair.aux_instruction ==
        "Count the punctuation marks in the following passage.");
}

TEST_CASE("golden: deletion A [X] C -> AC and the identify mode") {
  const auto chunk = make_chunk({"First sentence here.", "Third sentence here."});
  AnomalySource anomaly;
  anomaly.sentences = {"Random inserted noise."};

  ScriptedRng rng;
  rng.script_below({0, 1});   // sentence 0, boundary between the two
  rng.script_double({0.25});  // reconstruct mode
  const auto pair = gen_deletion(chunk, anomaly, kParams, rng);
  CHECK(!pair.skip);
  CHECK(pair.input ==
        "First sentence here. Random inserted noise. Third sentence here.");
  CHECK(pair.output == chunk.text);

  ScriptedRng rng2;
  rng2.script_below({0, 1});
  rng2.script_double({0.75});  // identify mode
  const auto pair2 = gen_deletion(chunk, anomaly, kParams, rng2);
  CHECK(pair2.input == pair.input);
  CHECK(pair2.output == "Random inserted noise.");
}

TEST_CASE("golden: reordering S3 S1 S2 -> S1 S2 S3") {
  const auto chunk =
      make_chunk({"Alpha starts it.", "Beta follows on.", "Gamma ends it."});
  ScriptedRng rng;
  rng.script_below({2, 1});  // permutation [2,0,1]
  const auto pair = gen_reordering(chunk, rng);
  CHECK(!pair.skip);
  CHECK(pair.input == "Gamma ends it. Alpha starts it. Beta follows on.");
  CHECK(pair.output == chunk.text);
}

TEST_CASE("golden: fill_middle P1 ? P3 -> P2 with one sentence each") {
  const auto chunk =
      make_chunk({"One here now.", "Two there then.", "Three gone soon."});
  ScriptedRng rng;
  rng.script_below({2});  // mask "@@@"
  const auto pair = gen_fill_middle(chunk, kParams, rng);
  CHECK(!pair.skip);
  CHECK(pair.input == "One here now.\n@@@\nThree gone soon.");
  CHECK(pair.output == "Two there then.");
}

TEST_CASE("golden: half splits two equal sentences down the middle") {
  const auto chunk = make_chunk({"One two three.", "Four five six."});
  const auto pair = gen_half(chunk);
  CHECK(!pair.skip);
  CHECK(pair.input == "One two three.");
  CHECK(pair.output == "Four five six.");
}

TEST_CASE("golden: one repeats the first word") {
  const auto pair = gen_one(make_chunk({"These routes allow"}));
  CHECK(!pair.skip);
  CHECK(pair.input == "These");
  CHECK(pair.output == "These routes allow");
}

// --- skip paths --------------------------------------------------------------

TEST_CASE("skip reasons are stable") {
  ScriptedRng rng;
  AnomalySource empty;
  CHECK(gen_space(make_chunk({"Oneword."})).skip_reason == "no_whitespace");
  CHECK(gen_typo(make_chunk({"42 77."}), kParams, rng).skip_reason ==
        "no_alphabetic");
  CHECK(gen_last(make_chunk({"mountain river"}), empty, kParams,
                 CharClassTables::defaults(), rng)
            .skip_reason == "no_ending");
  CHECK(gen_shuffle(make_chunk({"Oneword."}), kParams, rng).skip_reason ==
        "single_word");
  CHECK(gen_one(make_chunk({"Oneword."})).skip_reason == "single_word");
  CHECK(gen_deletion(make_chunk({"Only one sentence."}), empty, kParams, rng)
            .skip_reason == "single_sentence");
  AnomalySource with_sentences;
  with_sentences.sentences = {"Extra context."};
  CHECK(
      gen_deletion(make_chunk({"Only one sentence."}), with_sentences, kParams, rng)
          .skip_reason == "single_sentence");
  CHECK(gen_deletion(make_chunk({"First one.", "Second one."}), empty, kParams, rng)
            .skip_reason == "no_anomaly_source");
  CHECK(gen_reordering(make_chunk({"Only one."}), rng).skip_reason ==
        "single_sentence");
  CHECK(gen_fill_middle(make_chunk({"First one.", "Second one."}), kParams, rng)
            .skip_reason == "too_few_sentences");
  CHECK(gen_half(make_chunk({"Only one."})).skip_reason == "single_sentence");
}

TEST_CASE("k floors at one even for minimal chunks") {
  ScriptedRng rng;  // unscripted: fallback stream
  const auto masked = gen_masked_char(make_chunk({"a"}), kParams, rng);
  CHECK(!masked.skip);
  CHECK(masked.output == "a");
  bool is_mask = false;
  for (const auto& m : kParams.mask_tokens) is_mask |= masked.input == m;
  CHECK(is_mask);

  SplitMixRng rng2(9);
  const auto word = gen_masked_word(make_chunk({"Solo"}), kParams, rng2);
  CHECK(!word.skip);
  bool word_is_mask = false;
  for (const auto& m : kParams.mask_tokens) word_is_mask |= word.input == m;
  CHECK(word_is_mask);

  SplitMixRng rng3(10);
  const auto typo = gen_typo(make_chunk({"a"}), kParams, rng3);
  CHECK(!typo.skip);
  CHECK(typo.input.size() == 1);
  CHECK(typo.input != "a");
  CHECK(typo.output == "a");
}

// --- property oracles over random chunks ------------------------------------

TEST_CASE("restoration tasks reproduce the chunk byte-for-byte") {
  const auto chunks = synth_chunks(101, 40);
  const auto tables = CharClassTables::defaults();
  const std::vector<std::string> vocab = {"ember", "falcon", "glacier", "kernel"};
  AnomalySource anomaly;
  anomaly.sentences = {"Inserted anomaly sentence."};
  anomaly.endings = {"a distractor ending"};
  long checked = 0;
  for (const auto& chunk : chunks) {
    SplitMixRng rng(0xBEEF + checked);
    for (TaskKind kind : {TaskKind::masked_char, TaskKind::space, TaskKind::typo,
                          TaskKind::masked_word, TaskKind::random_word,
                          TaskKind::shuffle, TaskKind::reordering}) {
      TaskContext ctx{kParams, tables, kTemplates, vocab, anomaly};
      const auto pair = apply_task(kind, chunk, ctx, rng);
      if (pair.skip) continue;
      CAPTURE(task_name(kind));
      CHECK(pair.output == chunk.text);
      CHECK(!pair.input.empty());
      ++checked;
    }
  }
  CHECK(checked > 100);
}

TEST_CASE("masked_char alters exactly k characters with one token") {
  const auto chunks = synth_chunks(202, 30);
  for (size_t i = 0; i < chunks.size(); ++i) {
    SplitMixRng rng(i);
    const auto pair = gen_masked_char(chunks[i], kParams, rng);
    REQUIRE(!pair.skip);
    long eligible = 0;
    for (unsigned char c : pair.output) {
      if ((c & 0xC0) != 0x80 && !std::isspace(c)) ++eligible;
    }
    const long k = corruption_count(kParams.masked_char_ratio, eligible);
    // The synthetic corpus never contains mask-token substrings, so the
    // sample's token count is observable.
    long best = 0;
    for (const auto& m : kParams.mask_tokens)
      best = std::max(best, count_occurrences(pair.input, m));
    CHECK(best == k);
  }
}

TEST_CASE("masked_word alters exactly k words, all mask tokens") {
  const auto chunks = synth_chunks(303, 30);
  for (size_t i = 0; i < chunks.size(); ++i) {
    SplitMixRng rng(i * 7 + 1);
    const auto pair = gen_masked_word(chunks[i], kParams, rng);
    REQUIRE(!pair.skip);
    const auto in_words = words_of(pair.input);
    const auto out_words = words_of(pair.output);
    REQUIRE(in_words.size() == out_words.size());
    const long k = corruption_count(kParams.masked_word_ratio,
                                    static_cast<long>(out_words.size()));
    long diff = 0;
    for (size_t w = 0; w < in_words.size(); ++w) {
      if (in_words[w] != out_words[w]) {
        ++diff;
        CHECK(std::find(kParams.mask_tokens.begin(), kParams.mask_tokens.end(),
                        in_words[w]) != kParams.mask_tokens.end());
      }
    }
    CHECK(diff == k);
  }
}

TEST_CASE("random_word replacements come from the vocabulary") {
  const auto chunks = synth_chunks(404, 30);
  const std::vector<std::string> vocab = {"pioneer", "quiver", "rampart", "saddle",
                                          "terrace"};
  for (size_t i = 0; i < chunks.size(); ++i) {
    SplitMixRng rng(i * 13 + 5);
    const auto pair = gen_random_word(chunks[i], kParams, vocab, rng);
    REQUIRE(!pair.skip);
    const auto in_words = words_of(pair.input);
    const auto out_words = words_of(pair.output);
    REQUIRE(in_words.size() == out_words.size());
    long diff = 0;
    for (size_t w = 0; w < in_words.size(); ++w) {
      if (in_words[w] != out_words[w]) {
        ++diff;
        CHECK(std::find(vocab.begin(), vocab.end(), in_words[w]) != vocab.end());
      }
    }
    // Selected words already equal to a vocab word could draw themselves and
    // then the inequality redraw kicks in, so diff is exactly k.
    const long n = static_cast<long>(out_words.size());
    CHECK(diff >= 1);
    CHECK(diff >= corruption_count(kParams.random_ratio_range.first, n));
    CHECK(diff <= std::max<long>(corruption_count(kParams.random_ratio_range.second, n), 1));
  }
}

TEST_CASE("shuffle preserves the word multiset and moves at least two words") {
  const auto chunks = synth_chunks(505, 30);
  for (size_t i = 0; i < chunks.size(); ++i) {
    SplitMixRng rng(i * 31 + 3);
    const auto pair = gen_shuffle(chunks[i], kParams, rng);
    REQUIRE(!pair.skip);
    auto in_words = words_of(pair.input);
    auto out_words = words_of(pair.output);
    long diff = 0;
    REQUIRE(in_words.size() == out_words.size());
    for (size_t w = 0; w < in_words.size(); ++w) {
      if (in_words[w] != out_words[w]) ++diff;
    }
    CHECK(diff >= 2);
    std::sort(in_words.begin(), in_words.end());
    std::sort(out_words.begin(), out_words.end());
    CHECK(in_words == out_words);
  }
}

TEST_CASE("typo substitutions preserve length, case, and hamming count") {
  const auto chunks = synth_chunks(606, 30);
  for (size_t i = 0; i < chunks.size(); ++i) {
    SplitMixRng rng(i * 17 + 11);
    const auto pair = gen_typo(chunks[i], kParams, rng);
    REQUIRE(!pair.skip);
    REQUIRE(pair.input.size() == pair.output.size());
    long alpha = 0;
    long diff = 0;
    for (size_t b = 0; b < pair.output.size(); ++b) {
      if (std::isalpha(static_cast<unsigned char>(pair.output[b]))) ++alpha;
      if (pair.input[b] != pair.output[b]) {
        ++diff;
        CHECK(std::isalpha(static_cast<unsigned char>(pair.output[b])));
        if (std::isupper(static_cast<unsigned char>(pair.output[b])) &&
            std::isalpha(static_cast<unsigned char>(pair.input[b]))) {
          CHECK(std::isupper(static_cast<unsigned char>(pair.input[b])));
        }
      }
    }
    CHECK(diff >= corruption_count(kParams.typo_ratio_range.first, alpha));
    CHECK(diff <= std::max<long>(corruption_count(kParams.typo_ratio_range.second, alpha), 1));
  }
}

TEST_CASE("counting tasks match brute-force recounts") {
  const auto chunks = synth_chunks(707, 25);
  const auto tables = CharClassTables::defaults();
  for (size_t i = 0; i < chunks.size(); ++i) {
    SplitMixRng rng(i);
    const auto cc = gen_char_count(chunks[i], kTemplates, rng);
    CHECK(cc.output == std::to_string(count_chars(chunks[i].text)));

    for (uint64_t cls = 0; cls < kTokenClassCount; ++cls) {
      ScriptedRng srng(i * 4 + cls);
      srng.script_below({cls, 0});
      const auto tt = gen_token_type(chunks[i], kTemplates, tables, srng);
      long oracle = 0;
      if (static_cast<TokenClass>(cls) == TokenClass::punctuation) {
        for (char ch : chunks[i].text) {
          if (std::string("!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~").find(ch) !=
              std::string::npos)
            ++oracle;
        }
      } else {
        for (const auto& w : words_of(chunks[i].text)) {
          const auto got = classify_word(w, tables);
          if ((cls == 0 && got == WordClass::stopword) ||
              (cls == 1 && got == WordClass::digit) ||
              (cls == 2 && got == WordClass::content))
            ++oracle;
        }
      }
      CAPTURE(cls);
      CHECK(tt.output == std::to_string(oracle));
    }
  }
}

TEST_CASE("last: output equals the text after the final stopword") {
  const auto chunks = synth_chunks(808, 40);
  const auto tables = CharClassTables::defaults();
  AnomalySource anomaly;
  anomaly.endings = {"a spare ending for options"};
  for (size_t i = 0; i < chunks.size(); ++i) {
    SplitMixRng rng(i);
    const auto pair = gen_last(chunks[i], anomaly, kParams, tables, rng);
    if (pair.skip) continue;
    // Independent scan: last word classified as stopword with a successor.
    const auto words = tokenize_words(chunks[i].text);
    std::string expected;
    for (size_t w = words.size() - 1; w-- > 0;) {
      const std::string word =
          chunks[i].text.substr(words[w].start, words[w].end - words[w].start);
      if (classify_word(word, tables) == WordClass::stopword) {
        expected = chunks[i].text.substr(words[w + 1].start);
        break;
      }
    }
    REQUIRE(!expected.empty());
    CHECK(pair.output == expected);
    CHECK(pair.input.find("\n\nOptions:\n") != std::string::npos);
  }
}

TEST_CASE("deletion: input is the chunk with one known sentence inserted") {
  const auto chunks = synth_chunks(909, 30);
  AnomalySource anomaly;
  anomaly.sentences = {"Anomalous context one.", "Anomalous context two."};
  for (size_t i = 0; i < chunks.size(); ++i) {
    if (chunks[i].sentences.size() < 2) continue;
    SplitMixRng rng(i);
    const auto pair = gen_deletion(chunks[i], anomaly, kParams, rng);
    REQUIRE(!pair.skip);
    bool reproduced = false;
    for (const auto& inserted : anomaly.sentences) {
      for (size_t b = 0; b <= chunks[i].sentences.size() && !reproduced; ++b) {
        std::string rebuilt;
        for (size_t s = 0; s <= chunks[i].sentences.size(); ++s) {
          if (s == b) {
            if (!rebuilt.empty()) rebuilt += ' ';
            rebuilt += inserted;
          }
          if (s < chunks[i].sentences.size()) {
            if (!rebuilt.empty()) rebuilt += ' ';
            rebuilt += chunks[i].sentences[s];
          }
        }
        reproduced = rebuilt == pair.input;
      }
    }
    CHECK(reproduced);
    const bool is_reconstruct = pair.output == chunks[i].text;
    const bool is_identify =
        std::find(anomaly.sentences.begin(), anomaly.sentences.end(),
                  pair.output) != anomaly.sentences.end();
    CHECK((is_reconstruct || is_identify));
  }
}

TEST_CASE("partition tasks conserve the sentence sequence") {
  const auto chunks = synth_chunks(1010, 30);
  for (size_t i = 0; i < chunks.size(); ++i) {
    const auto& chunk = chunks[i];
    if (chunk.sentences.size() >= 2) {
      const auto half = gen_half(chunk);
      REQUIRE(!half.skip);
      CHECK(half.input + " " + half.output == chunk.text);
    }
    if (chunk.sentences.size() >= 3) {
      SplitMixRng rng(i);
      const auto fill = gen_fill_middle(chunk, kParams, rng);
      REQUIRE(!fill.skip);
      const size_t first_nl = fill.input.find('\n');
      const size_t last_nl = fill.input.rfind('\n');
      REQUIRE(first_nl != std::string::npos);
      REQUIRE(last_nl > first_nl);
      const std::string p1 = fill.input.substr(0, first_nl);
      const std::string mask =
          fill.input.substr(first_nl + 1, last_nl - first_nl - 1);
      const std::string p3 = fill.input.substr(last_nl + 1);
      CHECK(std::find(kParams.mask_tokens.begin(), kParams.mask_tokens.end(),
                      mask) != kParams.mask_tokens.end());
      CHECK(p1 + " " + fill.output + " " + p3 == chunk.text);
    }
    const auto one = gen_one(chunk);
    if (!one.skip) {
      CHECK(one.output == chunk.text);
      CHECK(words_of(one.output).front() == one.input);
    }
  }
}

TEST_CASE("generators are pure: same inputs, same pair") {
  const auto chunks = synth_chunks(1111, 5);
  const auto tables = CharClassTables::defaults();
  const std::vector<std::string> vocab = {"ember", "falcon"};
  AnomalySource anomaly;
  anomaly.sentences = {"Context sentence."};
  anomaly.endings = {"an ending"};
  TaskContext ctx{kParams, tables, kTemplates, vocab, anomaly};
  for (const auto& chunk : chunks) {
    for (int kind = 0; kind < kTaskKindCount; ++kind) {
      SplitMixRng r1(55);
      SplitMixRng r2(55);
      const auto a = apply_task(static_cast<TaskKind>(kind), chunk, ctx, r1);
      const auto b = apply_task(static_cast<TaskKind>(kind), chunk, ctx, r2);
      CHECK(a.skip == b.skip);
      CHECK(a.input == b.input);
      CHECK(a.output == b.output);
      CHECK(a.skip_reason == b.skip_reason);
    }
  }
}

TEST_CASE("apply_task dispatches to the matching generator") {
  const auto chunk = make_chunk({"Text"});
  const auto tables = CharClassTables::defaults();
  const std::vector<std::string> vocab = {"x"};
  AnomalySource anomaly;
  TaskContext ctx{kParams, tables, kTemplates, vocab, anomaly};
  ScriptedRng r1;
  r1.script_below({0});
  ScriptedRng r2;
  r2.script_below({0});
  const auto direct = gen_char_count(chunk, kTemplates, r1);
  const auto dispatched = apply_task(TaskKind::char_count, chunk, ctx, r2);
  CHECK(direct.input == dispatched.input);
  CHECK(direct.output == dispatched.output);

  const auto skip = apply_task(TaskKind::space, make_chunk({"Oneword."}), ctx, r1);
  CHECK(skip.skip);
  CHECK(skip.skip_reason == "no_whitespace");
}

TEST_CASE("task names are stable and reversible") {
  for (int i = 0; i < kTaskKindCount; ++i) {
    const auto kind = static_cast<TaskKind>(i);
    CHECK(task_from_name(task_name(kind)) == kind);
  }
  CHECK(!task_from_name("unknown_task").has_value());
  CHECK(task_name(TaskKind::char_count) == "char_count");
  CHECK(task_name(TaskKind::one) == "one");
}

TEST_CASE("make_anomaly_source extracts sentences and endings") {
  const auto spec = TokenizerSpec::whitespace();
  const auto seg = SegmenterOptions::defaults();
  const auto tables = CharClassTables::defaults();
  const std::string body =
      "Rivers carve the canyon floor. Copper sits in the deepest quarry.";
  const auto src = make_anomaly_source(body, 512, spec, seg, tables);
  CHECK(src.sentences.size() == 2);
  REQUIRE(!src.endings.empty());
  // Ending of the single chunk: text after its last stopword.
  CHECK(src.endings[0] == "deepest quarry.");
}
