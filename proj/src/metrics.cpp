#include "metrics.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "errors.hpp"
#include "sha256.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace l2t {

namespace {

// Metrics-local recounts, kept separate from the generator path on purpose.
long oracle_count_scalars(std::string_view text) {
  long n = 0;
  size_t i = 0;
  while (i < text.size()) {
    auto b = static_cast<unsigned char>(text[i]);
    size_t width = 1;
    if (b >= 0xF0)
      width = 4;
    else if (b >= 0xE0)
      width = 3;
    else if (b >= 0xC0)
      width = 2;
    i += std::min(width, text.size() - i);
    ++n;
  }
  return n;
}

long oracle_count_class(std::string_view text, TokenClass cls,
                        const CharClassTables& tables) {
  if (cls == TokenClass::punctuation) {
    long n = 0;
    for (unsigned char c : text) {
      if (c < 0x80 && tables.is_punct(c)) ++n;
    }
    return n;
  }
  long n = 0;
  std::istringstream stream{std::string(text)};
  std::string word;
  while (stream >> word) {
    size_t lo = 0;
    size_t hi = word.size();
    while (lo < hi && static_cast<unsigned char>(word[lo]) < 0x80 &&
           tables.is_punct(static_cast<unsigned char>(word[lo])))
      ++lo;
    while (hi > lo && static_cast<unsigned char>(word[hi - 1]) < 0x80 &&
           tables.is_punct(static_cast<unsigned char>(word[hi - 1])))
      --hi;
    std::string cleaned = word.substr(lo, hi - lo);
    WordClass got;
    if (cleaned.empty()) {
      got = WordClass::content;
    } else {
      std::string lower = cleaned;
      std::transform(lower.begin(), lower.end(), lower.begin(),
                     [](unsigned char c) { return std::tolower(c); });
      if (tables.stopwords.contains(lower)) {
        got = WordClass::stopword;
      } else {
        bool digits = true;
        for (unsigned char c : cleaned) {
          if (!std::isdigit(c)) {
            digits = false;
            break;
          }
        }
        got = digits ? WordClass::digit : WordClass::content;
      }
    }
    const bool match = (cls == TokenClass::stopword && got == WordClass::stopword) ||
                       (cls == TokenClass::digit && got == WordClass::digit) ||
                       (cls == TokenClass::content && got == WordClass::content);
    if (match) ++n;
  }
  return n;
}

// Locates the placed instruction and returns (body, class). char_count maps
// to nullopt class.
struct InstructionMatch {
  std::string body;
  std::optional<TokenClass> cls;
};

std::optional<InstructionMatch> strip_instruction(const std::string& input,
                                                  const InstructionTemplates& templates) {
  auto try_template = [&](const std::string& t,
                          std::optional<TokenClass> cls) -> std::optional<InstructionMatch> {
    const std::string head = t + "\n\n";
    if (input.size() > head.size() && input.compare(0, head.size(), head) == 0) {
      return InstructionMatch{input.substr(head.size()), cls};
    }
    const std::string tail = "\n\n" + t;
    if (input.size() > tail.size() &&
        input.compare(input.size() - tail.size(), tail.size(), tail) == 0) {
      return InstructionMatch{input.substr(0, input.size() - tail.size()), cls};
    }
    return std::nullopt;
  };
  for (const auto& t : templates.char_count) {
    if (auto m = try_template(t, std::nullopt)) return m;
  }
  for (int c = 0; c < kTokenClassCount; ++c) {
    for (const auto& t : templates.token_type[c]) {
      if (auto m = try_template(t, static_cast<TokenClass>(c))) return m;
    }
  }
  return std::nullopt;
}

bool is_restoration(TaskKind kind) {
  switch (kind) {
    case TaskKind::masked_char:
    case TaskKind::space:
    case TaskKind::typo:
    case TaskKind::masked_word:
    case TaskKind::random_word:
    case TaskKind::shuffle:
    case TaskKind::reordering:
      return true;
    default:
      return false;
  }
}

}  // namespace

void ValidationReport::record(const std::string& check, bool pass,
                              const std::string& doc_id, long chunk_index,
                              const std::string& detail) {
  auto& counts = checks[check];
  if (pass) {
    ++counts.pass;
    return;
  }
  ++counts.fail;
  ++total_failures;
  if (failures.size() < kFailureCap) {
    failures.push_back({check, doc_id, chunk_index, detail});
  }
}

json ValidationReport::to_json() const {
  json c = json::object();
  for (const auto& [name, counts] : checks) {
    c[name] = {{"pass", counts.pass}, {"fail", counts.fail}};
  }
  json f = json::array();
  for (const auto& failure : failures) {
    f.push_back({{"check", failure.check},
                 {"doc_id", failure.doc_id},
                 {"chunk_index", failure.chunk_index},
                 {"detail", failure.detail}});
  }
  return json{{"ok", ok()},
              {"records_examined", records_examined},
              {"total_failures", total_failures},
              {"checks", c},
              {"failures", f}};
}

std::string ValidationReport::human_table() const {
  std::ostringstream out;
  out << "check                       pass       fail\n";
  for (const auto& [name, counts] : checks) {
    out << name;
    for (size_t i = name.size(); i < 24; ++i) out << ' ';
    out << ' ';
    std::string p = std::to_string(counts.pass);
    for (size_t i = p.size(); i < 10; ++i) out << ' ';
    out << p << ' ';
    std::string f = std::to_string(counts.fail);
    for (size_t i = f.size(); i < 10; ++i) out << ' ';
    out << f << '\n';
  }
  out << (ok() ? "result: OK\n" : "result: FAILURES FOUND\n");
  return out.str();
}

namespace {

struct LoadedCorpus {
  std::vector<Document> docs;
  std::unordered_map<std::string, size_t> by_id;
};

struct ReplayRuntime {
  TokenizerSpec tokenizer;
  CharClassTables tables;
  SegmenterOptions segmenter;
  std::vector<std::string> vocab;
};

LoadedCorpus load_corpus(const BuildConfig& cfg) {
  LoadedCorpus corpus;
  CorpusReader reader(cfg.input_path, cfg.input_format, cfg.ingest_mode);
  while (auto doc = reader.next()) {
    corpus.by_id[doc->doc_id] = corpus.docs.size();
    corpus.docs.push_back(std::move(*doc));
  }
  return corpus;
}

// Chunk + anomaly replay cache, bounded because sample files arrive in
// document order. Entries are shared_ptrs so an eviction cannot invalidate
// a caller's handle.
class PrepCache {
 public:
  struct Entry {
    std::vector<Chunk> chunks;
    AnomalySource anomaly;
  };
  using EntryPtr = std::shared_ptr<const Entry>;

  PrepCache(const BuildConfig& cfg, const ReplayRuntime& rt, const LoadedCorpus& corpus)
      : cfg_(cfg), rt_(rt), corpus_(corpus) {}

  EntryPtr get(size_t ordinal) {
    auto it = cache_.find(ordinal);
    if (it != cache_.end()) return it->second;
    if (cache_.size() > 128) cache_.clear();
    const Document& doc = corpus_.docs[ordinal];
    auto e = std::make_shared<Entry>();
    e->chunks = chunk_document(doc.doc_id, doc.body, cfg_.chunk_target, rt_.tokenizer,
                               rt_.segmenter);
    e->anomaly = anomaly_from_chunks(e->chunks, rt_.tables);
    cache_.emplace(ordinal, e);
    return e;
  }

 private:
  const BuildConfig& cfg_;
  const ReplayRuntime& rt_;
  const LoadedCorpus& corpus_;
  std::unordered_map<size_t, EntryPtr> cache_;
};

}  // namespace

ValidationReport validate_build(const std::string& build_dir,
                                const std::optional<BuildConfig>& expected_config) {
  const std::string manifest_path = (fs::path(build_dir) / kManifestFile).string();
  const ScenarioManifest manifest = ScenarioManifest::load(manifest_path);
  BuildConfig cfg = BuildConfig::from_json(manifest.config);
  cfg.validate(false);

  if (expected_config && expected_config->to_json() != cfg.to_json()) {
    throw ConfigError("config does not match the manifest echo in " + manifest_path);
  }

  PrePassInfo pre = run_pre_pass(cfg);
  if (pre.corpus_sha256 != manifest.corpus_sha256) {
    throw ConfigError("source corpus does not match the manifest checksum");
  }

  ReplayRuntime rt;
  rt.tokenizer = cfg.make_tokenizer();
  rt.tables = cfg.make_tables();
  rt.segmenter = cfg.make_segmenter();
  rt.vocab = std::move(pre.replacement_vocab);

  ValidationReport report;

  // File-level checksums first; per-record checks still run so failures
  // carry provenance.
  for (const auto& [name, expected] : manifest.file_sha256) {
    const std::string path = (fs::path(build_dir) / name).string();
    std::string actual;
    try {
      actual = sha256_file(path);
    } catch (const IoError& e) {
      report.record("manifest_files", false, name, -1, e.what());
      continue;
    }
    report.record("manifest_files", actual == expected, name, -1,
                  actual == expected ? "" : "checksum mismatch");
  }

  const LoadedCorpus corpus = load_corpus(cfg);
  PrepCache prep(cfg, rt, corpus);

  const bool disjoint_mix =
      manifest.command == "mix" && cfg.scenario == Scenario::disjoint;

  // Stream position maps for the anomaly replay: ordinals of each document
  // within its (possibly split-filtered) generation stream.
  auto stream_prev = [&](size_t ordinal, int side) -> std::optional<size_t> {
    if (ordinal == 0 && side < 0) {
      return corpus.docs.empty() ? std::nullopt
                                 : std::make_optional(corpus.docs.size() - 1);
    }
    if (side < 0) return ordinal - 1;
    // Walk back to the previous document on the same side; wrap to the last.
    size_t i = ordinal;
    while (i-- > 0) {
      if (split_side(cfg.seed, corpus.docs[i].doc_id) == side) return i;
    }
    for (size_t i = corpus.docs.size(); i-- > 0;) {
      if (split_side(cfg.seed, corpus.docs[i].doc_id) == side) return i;
    }
    return std::nullopt;
  };

  long l2t_token_sum = 0;
  std::unordered_set<std::string> l2t_doc_ids;

  const std::string l2t_path = (fs::path(build_dir) / kL2tSamplesFile).string();
  if (fs::exists(l2t_path)) {
    SampleReader reader(l2t_path);
    while (auto rec = reader.next()) {
      ++report.records_examined;
      l2t_token_sum += rec->token_count;
      l2t_doc_ids.insert(rec->doc_id);

      auto doc_it = corpus.by_id.find(rec->doc_id);
      if (doc_it == corpus.by_id.end()) {
        report.record("regeneration", false, rec->doc_id, rec->chunk_index,
                      "doc_id not found in corpus");
        continue;
      }
      const size_t ordinal = doc_it->second;
      const int side = disjoint_mix ? 1 : -1;
      if (disjoint_mix && split_side(cfg.seed, rec->doc_id) != 1) {
        report.record("regeneration", false, rec->doc_id, rec->chunk_index,
                      "l2t sample from the raw side of the split");
        continue;
      }
      const auto cur = prep.get(ordinal);
      if (rec->chunk_index < 0 ||
          rec->chunk_index >= static_cast<long>(cur->chunks.size())) {
        report.record("regeneration", false, rec->doc_id, rec->chunk_index,
                      "chunk_index out of range");
        continue;
      }
      const Chunk& chunk = cur->chunks[static_cast<size_t>(rec->chunk_index)];

      const auto prev = stream_prev(ordinal, side);
      const PrepCache::EntryPtr prev_entry = prev ? prep.get(*prev) : nullptr;
      static const AnomalySource kEmptyAnomaly;
      const AnomalySource& anomaly = prev_entry ? prev_entry->anomaly : kEmptyAnomaly;
      TaskContext ctx{cfg.task_params, rt.tables, cfg.templates, rt.vocab, anomaly};
      ChunkOutcome outcome =
          transform_chunk(chunk, ctx, cfg.prefix_set, rt.tokenizer, cfg.seed);

      bool regen_ok = false;
      std::string detail;
      if (!outcome.sample) {
        detail = "regeneration produced no sample";
      } else if (std::string(task_name(outcome.sample->task)) != rec->task) {
        detail = "task mismatch: regenerated " +
                 std::string(task_name(outcome.sample->task));
      } else if (outcome.sample->input != rec->input) {
        detail = "input mismatch";
      } else if (outcome.sample->output != rec->output) {
        detail = "output mismatch";
      } else if (outcome.sample->text != rec->text) {
        detail = "text mismatch";
      } else if (outcome.sample->token_count != rec->token_count) {
        detail = "token_count mismatch";
      } else {
        regen_ok = true;
      }
      report.record("regeneration", regen_ok, rec->doc_id, rec->chunk_index, detail);

      // Provenance-free checks.
      const auto kind = task_from_name(rec->task);
      if (kind && (*kind == TaskKind::char_count || *kind == TaskKind::token_type)) {
        auto stripped = strip_instruction(rec->input, cfg.templates);
        bool count_ok = false;
        std::string count_detail;
        if (!stripped) {
          count_detail = "no instruction template matched";
        } else {
          const long expected = stripped->cls
                                    ? oracle_count_class(stripped->body, *stripped->cls,
                                                         rt.tables)
                                    : oracle_count_scalars(stripped->body);
          count_ok = std::to_string(expected) == rec->output;
          if (!count_ok)
            count_detail = "oracle " + std::to_string(expected) + " != " + rec->output;
        }
        report.record("counting_oracle", count_ok, rec->doc_id, rec->chunk_index,
                      count_detail);
      }
      if (kind && is_restoration(*kind)) {
        report.record("restoration", rec->output == chunk.text, rec->doc_id,
                      rec->chunk_index, "output differs from re-chunked original");
      }
    }
    report.record("l2t_file_records", true);
  }

  long raw_token_sum = 0;
  long raw_truncated = 0;
  std::unordered_set<std::string> raw_doc_ids;
  const std::string raw_path = (fs::path(build_dir) / kRawSamplesFile).string();
  if (fs::exists(raw_path)) {
    SampleReader reader(raw_path);
    while (auto rec = reader.next()) {
      ++report.records_examined;
      raw_token_sum += rec->token_count;
      raw_doc_ids.insert(rec->doc_id);
      auto doc_it = corpus.by_id.find(rec->doc_id);
      if (doc_it == corpus.by_id.end()) {
        report.record("raw_samples", false, rec->doc_id, rec->chunk_index,
                      "doc_id not found in corpus");
        continue;
      }
      const auto cur = prep.get(doc_it->second);
      if (rec->chunk_index < 0 ||
          rec->chunk_index >= static_cast<long>(cur->chunks.size())) {
        report.record("raw_samples", false, rec->doc_id, rec->chunk_index,
                      "chunk_index out of range");
        continue;
      }
      const Chunk& chunk = cur->chunks[static_cast<size_t>(rec->chunk_index)];
      bool ok = true;
      std::string detail;
      if (rec->text != chunk.text) {
        if (chunk.text.compare(0, rec->text.size(), rec->text) == 0 &&
            !rec->text.empty()) {
          ++raw_truncated;  // budget-landing tail
        } else {
          ok = false;
          detail = "text is not the chunk or a truncated prefix of it";
        }
      }
      if (ok && rec->token_count != count_tokens(rec->text, rt.tokenizer)) {
        ok = false;
        detail = "token_count mismatch";
      }
      report.record("raw_samples", ok, rec->doc_id, rec->chunk_index, detail);
    }
    report.record("raw_truncation_budget",
                  raw_truncated <= manifest.budget_truncated_samples, "", -1,
                  "more truncated raw samples than the manifest records");
  }

  const std::string packed_path = (fs::path(build_dir) / kPackedFile).string();
  if (fs::exists(packed_path)) {
    std::ifstream in(packed_path, std::ios::binary);
    if (!in) throw IoError("cannot open " + packed_path);
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      json rec = json::parse(line, nullptr, false);
      bool ok = false;
      std::string detail;
      if (rec.is_discarded() || !rec.is_object()) {
        detail = "malformed json";
      } else {
        try {
          const auto text = rec.at("text").get<std::string>();
          const auto token_count = rec.at("token_count").get<long>();
          const auto segments = rec.at("segments").get<std::vector<std::string>>();
          std::string joined;
          for (size_t i = 0; i < segments.size(); ++i) {
            if (i) joined += cfg.separator;
            joined += segments[i];
          }
          if (token_count > cfg.max_seq_len) {
            detail = "sequence exceeds max_seq_len";
          } else if (count_tokens(text, rt.tokenizer) != token_count) {
            detail = "token_count mismatch";
          } else if (joined != text) {
            detail = "segments do not join to text";
          } else {
            ok = true;
          }
        } catch (const json::exception& e) {
          detail = e.what();
        }
      }
      report.record("packed", ok, "packed.jsonl", line_no, detail);
    }
  }

  if (manifest.command == "mix") {
    report.record("budget_echo",
                  raw_token_sum == manifest.realized_raw_tokens &&
                      l2t_token_sum == manifest.realized_l2t_tokens,
                  "", -1, "sample files disagree with manifest realized totals");
    if (cfg.scenario == Scenario::disjoint) {
      bool disjoint_ok = true;
      for (const auto& id : raw_doc_ids) {
        if (l2t_doc_ids.contains(id)) {
          disjoint_ok = false;
          break;
        }
      }
      report.record("disjoint_doc_ids", disjoint_ok, "", -1,
                    "raw and l2t doc_id sets intersect");
    }
  }

  return report;
}

DatasetStats dataset_stats(const std::string& samples_path) {
  DatasetStats stats;
  SampleReader reader(samples_path);
  std::vector<long> lengths;
  std::map<std::string, std::pair<double, long>> ratio_acc;  // sum, count

  const TaskParams default_params;  // mask-token list for masked_char scan

  while (auto rec = reader.next()) {
    ++stats.records;
    stats.token_total += rec->token_count;
    ++stats.task_counts[rec->task];
    stats.task_tokens[rec->task] += rec->token_count;
    lengths.push_back(rec->token_count);

    const auto kind = task_from_name(rec->task);
    if (!kind) continue;
    switch (*kind) {
      case TaskKind::masked_word:
      case TaskKind::random_word:
      case TaskKind::shuffle: {
        const auto in_words = tokenize_words(rec->input);
        const auto out_words = tokenize_words(rec->output);
        if (in_words.size() != out_words.size() || out_words.empty()) break;
        long diff = 0;
        for (size_t i = 0; i < in_words.size(); ++i) {
          std::string_view a = std::string_view(rec->input)
                                   .substr(in_words[i].start,
                                           in_words[i].end - in_words[i].start);
          std::string_view b = std::string_view(rec->output)
                                   .substr(out_words[i].start,
                                           out_words[i].end - out_words[i].start);
          if (a != b) ++diff;
        }
        auto& acc = ratio_acc[rec->task];
        acc.first += static_cast<double>(diff) / static_cast<double>(out_words.size());
        ++acc.second;
        break;
      }
      case TaskKind::typo: {
        if (rec->input.size() != rec->output.size()) break;
        long alpha = 0;
        long diff = 0;
        for (size_t i = 0; i < rec->output.size(); ++i) {
          if (std::isalpha(static_cast<unsigned char>(rec->output[i]))) ++alpha;
          if (rec->input[i] != rec->output[i]) ++diff;
        }
        if (alpha == 0) break;
        auto& acc = ratio_acc[rec->task];
        acc.first += static_cast<double>(diff) / static_cast<double>(alpha);
        ++acc.second;
        break;
      }
      case TaskKind::masked_char: {
        // Occurrences of the sample's mask token (the most frequent of the
        // default token set) over non-whitespace characters of the output.
        long best = 0;
        for (const auto& mask : default_params.mask_tokens) {
          long count = 0;
          size_t pos = 0;
          while ((pos = rec->input.find(mask, pos)) != std::string::npos) {
            ++count;
            pos += mask.size();
          }
          best = std::max(best, count);
        }
        long eligible = 0;
        for (unsigned char c : rec->output) {
          if ((c & 0xC0) != 0x80 && c != ' ' && c != '\t' && c != '\n' && c != '\r' &&
              c != '\f' && c != '\v')
            ++eligible;
        }
        if (eligible == 0 || best == 0) break;
        auto& acc = ratio_acc[rec->task];
        acc.first += static_cast<double>(best) / static_cast<double>(eligible);
        ++acc.second;
        break;
      }
      default:
        break;
    }
  }
  stats.malformed_skipped = reader.skipped();

  if (!lengths.empty()) {
    std::sort(lengths.begin(), lengths.end());
    auto pct = [&](double p) {
      const size_t idx = static_cast<size_t>(p * static_cast<double>(lengths.size() - 1));
      return lengths[idx];
    };
    stats.p50 = pct(0.50);
    stats.p90 = pct(0.90);
    stats.p99 = pct(0.99);
    stats.max_len = lengths.back();
  }
  for (const auto& [task, acc] : ratio_acc) {
    if (acc.second > 0) stats.realized_ratios[task] = acc.first / acc.second;
  }
  return stats;
}

json DatasetStats::to_json() const {
  json per_task = json::object();
  for (const auto& [task, count] : task_counts) {
    per_task[task] = {{"count", count},
                      {"tokens", task_tokens.count(task) ? task_tokens.at(task) : 0}};
  }
  return json{{"records", records},
              {"malformed_skipped", malformed_skipped},
              {"token_total", token_total},
              {"per_task", per_task},
              {"length_percentiles",
               {{"p50", p50}, {"p90", p90}, {"p99", p99}, {"max", max_len}}},
              {"realized_ratios", realized_ratios}};
}

std::string DatasetStats::human_table() const {
  std::ostringstream out;
  out << "records: " << records << "  tokens: " << token_total
      << "  malformed: " << malformed_skipped << "\n";
  out << "lengths: p50=" << p50 << " p90=" << p90 << " p99=" << p99
      << " max=" << max_len << "\n";
  out << "task            count      tokens\n";
  for (const auto& [task, count] : task_counts) {
    out << task;
    for (size_t i = task.size(); i < 15; ++i) out << ' ';
    std::string c = std::to_string(count);
    for (size_t i = c.size(); i < 10; ++i) out << ' ';
    out << c << ' ';
    std::string t = std::to_string(task_tokens.count(task) ? task_tokens.at(task) : 0);
    for (size_t i = t.size(); i < 11; ++i) out << ' ';
    out << t << '\n';
  }
  if (!realized_ratios.empty()) {
    out << "realized corruption ratios:\n";
    for (const auto& [task, ratio] : realized_ratios) {
      out << "  " << task << ": " << ratio << '\n';
    }
  }
  return out.str();
}

}  // namespace l2t
