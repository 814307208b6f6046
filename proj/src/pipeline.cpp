#include "pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <exception>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <thread>
#include <unordered_set>

#include "errors.hpp"
#include "sha256.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace l2t {

namespace {

bool ascii_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool all_ascii_alpha(std::string_view w) {
  for (unsigned char c : w) {
    if (!std::isalpha(c)) return false;
  }
  return !w.empty();
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

SampleRecord to_record(const TaskSample& s) {
  SampleRecord r;
  r.task = std::string(task_name(s.task));
  r.input = s.input;
  r.output = s.output;
  r.text = s.text;
  r.doc_id = s.doc_id;
  r.chunk_index = s.chunk_index;
  r.token_count = s.token_count;
  return r;
}

}  // namespace

ChunkOutcome transform_chunk(const Chunk& chunk, const TaskContext& ctx,
                             const PrefixSet& prefixes, const TokenizerSpec& tokenizer,
                             uint64_t seed) {
  ChunkOutcome outcome;
  SplitMixRng rng = derive_rng(seed, chunk.doc_id, chunk.chunk_index);

  std::vector<TaskKind> candidates(kTaskKindCount);
  for (int i = 0; i < kTaskKindCount; ++i) candidates[i] = static_cast<TaskKind>(i);

  bool first = true;
  while (!candidates.empty()) {
    const size_t idx = static_cast<size_t>(rng.below(candidates.size()));
    const TaskKind kind = candidates[idx];
    if (first) {
      outcome.first_draw = kind;
      first = false;
    }
    RawPair pair = apply_task(kind, chunk, ctx, rng);
    if (!pair.skip) {
      outcome.sample = assemble_sample(pair, prefixes, tokenizer, rng, chunk.doc_id,
                                       chunk.chunk_index);
      return outcome;
    }
    outcome.skips.emplace_back(kind, pair.skip_reason);
    candidates.erase(candidates.begin() + static_cast<long>(idx));
  }
  return outcome;  // exhausted: chunk falls back to raw text, counted upstream
}

void parallel_for(size_t n, int workers, const std::function<void(size_t)>& fn) {
  if (workers <= 1 || n <= 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    while (true) {
      const size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  const size_t count = std::min<size_t>(static_cast<size_t>(workers), n);
  pool.reserve(count);
  for (size_t i = 0; i < count; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

std::vector<std::string> top_words(const std::unordered_map<std::string, long>& freq,
                                   long n) {
  std::vector<std::pair<std::string, long>> items(freq.begin(), freq.end());
  std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (static_cast<long>(items.size()) > n) items.resize(static_cast<size_t>(n));
  std::vector<std::string> out;
  out.reserve(items.size());
  for (auto& [w, c] : items) out.push_back(std::move(w));
  return out;
}

namespace {

std::vector<std::string> load_word_list(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open word list: " + path);
  std::vector<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) words.push_back(line);
  }
  if (words.empty()) throw ConfigError("word list is empty: " + path);
  return words;
}

std::string corpus_checksum(const BuildConfig& cfg) {
  if (cfg.input_format == CorpusFormat::jsonl) return sha256_file(cfg.input_path);
  std::vector<fs::path> files;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(cfg.input_path, ec)) {
    if (entry.is_regular_file() && entry.path().extension() == ".txt")
      files.push_back(entry.path());
  }
  if (ec) throw IoError("cannot open corpus directory: " + cfg.input_path);
  std::sort(files.begin(), files.end());
  std::string combined;
  for (const auto& f : files) {
    combined += f.filename().string();
    combined += ':';
    combined += sha256_file(f.string());
    combined += '\n';
  }
  return sha256_hex(combined);
}

}  // namespace

PrePassInfo run_pre_pass(const BuildConfig& cfg) {
  PrePassInfo info;
  info.corpus_sha256 = corpus_checksum(cfg);

  std::unordered_map<std::string, long> freq;
  const bool want_vocab = cfg.replacement_vocab_path.empty();
  std::unordered_set<std::string> seen_ids;

  CorpusReader reader(cfg.input_path, cfg.input_format, cfg.ingest_mode);
  while (auto doc = reader.next()) {
    if (!seen_ids.insert(doc->doc_id).second)
      throw IoError("duplicate doc_id in corpus: " + doc->doc_id);
    ++info.documents;
    const long tokens = count_tokens(doc->body, TokenizerSpec::whitespace());
    info.corpus_tokens += tokens;
    const int side = split_side(cfg.seed, doc->doc_id);
    info.side_tokens[side] += tokens;
    ++info.side_documents[side];
    if (want_vocab) {
      std::string_view body = doc->body;
      for (const auto& span : tokenize_words(body)) {
        std::string_view w = body.substr(span.start, span.end - span.start);
        if (all_ascii_alpha(w)) ++freq[std::string(w)];
      }
    }
    info.last_side_doc[side] = *doc;
    info.last_doc = std::move(*doc);
  }
  info.skipped_records = reader.skipped();

  if (want_vocab) {
    info.replacement_vocab = top_words(freq, cfg.replacement_vocab_size);
  } else {
    info.replacement_vocab = load_word_list(cfg.replacement_vocab_path);
  }
  return info;
}

L2tGenerator::L2tGenerator(const BuildConfig& cfg, const TokenizerSpec& tokenizer,
                           const CharClassTables& tables,
                           const SegmenterOptions& segmenter,
                           const std::vector<std::string>& vocab)
    : cfg_(cfg),
      tokenizer_(tokenizer),
      tables_(tables),
      segmenter_(segmenter),
      vocab_(vocab) {}

GenStats L2tGenerator::run(const std::function<std::optional<Document>()>& source,
                           const Document* ring_doc,
                           const std::function<bool(TaskSample&&)>& sink) const {
  GenStats stats;

  struct DocPrep {
    std::vector<Chunk> chunks;
    AnomalySource anomaly;
  };

  AnomalySource carry;  // anomaly source for the next window's first doc
  if (ring_doc) {
    carry = make_anomaly_source(ring_doc->body, cfg_.chunk_target, tokenizer_,
                                segmenter_, tables_);
  }

  const size_t window = std::max<size_t>(16, static_cast<size_t>(cfg_.workers) * 8);
  bool stop = false;
  while (!stop) {
    std::vector<Document> docs;
    docs.reserve(window);
    while (docs.size() < window) {
      auto doc = source();
      if (!doc) break;
      docs.push_back(std::move(*doc));
    }
    if (docs.empty()) break;

    std::vector<DocPrep> preps(docs.size());
    parallel_for(docs.size(), cfg_.workers, [&](size_t i) {
      preps[i].chunks = chunk_document(docs[i].doc_id, docs[i].body, cfg_.chunk_target,
                                       tokenizer_, segmenter_);
      preps[i].anomaly = anomaly_from_chunks(preps[i].chunks, tables_);
    });

    std::vector<std::vector<ChunkOutcome>> outcomes(docs.size());
    parallel_for(docs.size(), cfg_.workers, [&](size_t i) {
      const AnomalySource& prev = i == 0 ? carry : preps[i - 1].anomaly;
      TaskContext ctx{cfg_.task_params, tables_, cfg_.templates, vocab_, prev};
      outcomes[i].reserve(preps[i].chunks.size());
      for (const Chunk& chunk : preps[i].chunks) {
        outcomes[i].push_back(
            transform_chunk(chunk, ctx, cfg_.prefix_set, tokenizer_, cfg_.seed));
      }
    });

    for (size_t i = 0; i < docs.size() && !stop; ++i) {
      for (auto& outcome : outcomes[i]) {
        ++stats.chunks;
        ++stats.first_draw[static_cast<size_t>(outcome.first_draw)];
        for (auto& [kind, reason] : outcome.skips) ++stats.skip_counts[reason];
        if (!outcome.sample) {
          ++stats.exhausted_chunks;
          continue;
        }
        ++stats.generated_samples;
        stats.generated_tokens += outcome.sample->token_count;
        if (!sink(std::move(*outcome.sample))) {
          stop = true;
          break;
        }
      }
    }
    carry = std::move(preps.back().anomaly);
  }
  return stats;
}

SequencePacker::SequencePacker(long max_seq_len, std::string separator,
                               const TokenizerSpec& spec,
                               std::function<void(PackedSequence&&)> sink)
    : max_(max_seq_len),
      separator_(std::move(separator)),
      spec_(spec),
      sink_(std::move(sink)) {}

long SequencePacker::join_count(const Bin& bin, const std::string& sample,
                                long sample_tokens) const {
  if (spec_.kind == TokenizerKind::whitespace) {
    long n = whitespace_join_count(bin.tokens, bin.text, separator_);
    // joined text now ends with the separator's last byte (or the bin's).
    std::string_view tail = separator_.empty() ? std::string_view(bin.text) : separator_;
    long total = n + sample_tokens;
    if (!tail.empty() && !sample.empty() &&
        !ascii_space(static_cast<unsigned char>(tail.back())) &&
        !ascii_space(static_cast<unsigned char>(sample.front()))) {
      --total;
    }
    return total;
  }
  return count_tokens(bin.text + separator_ + sample, spec_);
}

void SequencePacker::emit(Bin&& bin, bool tail) {
  PackedSequence seq;
  seq.segments = std::move(bin.segments);
  seq.text = std::move(bin.text);
  seq.token_count = bin.tokens;
  seq.tail_flush = tail;
  ++emitted_;
  max_emitted_tokens_ = std::max(max_emitted_tokens_, seq.token_count);
  if (!tail) {
    fill_sum_ += static_cast<double>(seq.token_count) / static_cast<double>(max_);
    ++fill_count_;
  }
  sink_(std::move(seq));
}

void SequencePacker::push(std::string sample_text, long token_count) {
  if (token_count > max_) {
    sample_text = truncate_to_tokens(sample_text, max_, spec_);
    token_count = count_tokens(sample_text, spec_);
    ++oversize_truncated_;
  }
  for (auto& bin : open_) {
    const long candidate = join_count(bin, sample_text, token_count);
    if (candidate <= max_) {
      bin.text += separator_;
      bin.text += sample_text;
      bin.tokens = candidate;
      bin.segments.push_back(std::move(sample_text));
      return;
    }
  }
  if (open_.size() >= kOpenWindow) {
    emit(std::move(open_.front()), false);
    open_.erase(open_.begin());
  }
  Bin bin;
  bin.tokens = token_count;
  bin.text = sample_text;
  bin.segments.push_back(std::move(sample_text));
  open_.push_back(std::move(bin));
}

void SequencePacker::finish() {
  for (auto& bin : open_) emit(std::move(bin), true);
  open_.clear();
}

std::vector<size_t> shuffled_order(size_t n, uint64_t seed) {
  constexpr size_t kBlock = 65536;
  std::vector<size_t> order;
  order.reserve(n);
  if (n == 0) return order;
  const size_t blocks = (n + kBlock - 1) / kBlock;
  std::vector<std::vector<size_t>> bins(blocks);
  SplitMixRng scatter(mix64(seed, 0x73686366756C6C65ull));
  for (size_t i = 0; i < n; ++i) {
    bins[scatter.below(blocks)].push_back(i);
  }
  for (size_t b = 0; b < blocks; ++b) {
    auto& bin = bins[b];
    SplitMixRng rng(mix64(seed ^ 0x626C6F636B6D6978ull, b));
    for (size_t i = 0; i + 1 < bin.size(); ++i) {
      const size_t j = i + static_cast<size_t>(rng.below(bin.size() - i));
      std::swap(bin[i], bin[j]);
    }
    order.insert(order.end(), bin.begin(), bin.end());
  }
  return order;
}

json ScenarioManifest::to_json() const {
  return json{
      {"config", config},
      {"command", command},
      {"documents", documents},
      {"skipped_records", skipped_records},
      {"targets", {{"raw_tokens", target_raw_tokens}, {"l2t_tokens", target_l2t_tokens}}},
      {"realized",
       {{"raw_tokens", realized_raw_tokens},
        {"l2t_tokens", realized_l2t_tokens},
        {"total_tokens", realized_raw_tokens + realized_l2t_tokens}}},
      {"task_counts", task_counts},
      {"first_draw_counts", first_draw_counts},
      {"skip_counts", skip_counts},
      {"exhausted_chunks", exhausted_chunks},
      {"raw_full_passes", raw_full_passes},
      {"raw_partial_pass", raw_partial_pass},
      {"raw_shortfall", raw_shortfall},
      {"l2t_shortfall", l2t_shortfall},
      {"budget_truncated_samples", budget_truncated_samples},
      {"oversize_truncated_samples", oversize_truncated_samples},
      {"packing",
       {{"raw_sequences", raw_sequences},
        {"l2t_sequences", l2t_sequences},
        {"raw_mean_fill_nonfinal", raw_mean_fill_nonfinal},
        {"l2t_mean_fill_nonfinal", l2t_mean_fill_nonfinal},
        {"max_sequence_tokens", max_sequence_tokens}}},
      {"corpus_sha256", corpus_sha256},
      {"file_sha256", file_sha256},
      {"file_records", file_records},
      {"built_at", built_at},
  };
}

ScenarioManifest ScenarioManifest::from_json(const json& j) {
  ScenarioManifest m;
  try {
    m.config = j.at("config");
    m.command = j.at("command").get<std::string>();
    m.documents = j.at("documents").get<long>();
    m.skipped_records = j.at("skipped_records").get<long>();
    m.target_raw_tokens = j.at("targets").at("raw_tokens").get<long>();
    m.target_l2t_tokens = j.at("targets").at("l2t_tokens").get<long>();
    m.realized_raw_tokens = j.at("realized").at("raw_tokens").get<long>();
    m.realized_l2t_tokens = j.at("realized").at("l2t_tokens").get<long>();
    m.task_counts = j.at("task_counts").get<std::map<std::string, long>>();
    m.first_draw_counts = j.at("first_draw_counts").get<std::map<std::string, long>>();
    m.skip_counts = j.at("skip_counts").get<std::map<std::string, long>>();
    m.exhausted_chunks = j.at("exhausted_chunks").get<long>();
    m.raw_full_passes = j.at("raw_full_passes").get<long>();
    m.raw_partial_pass = j.at("raw_partial_pass").get<bool>();
    m.raw_shortfall = j.at("raw_shortfall").get<bool>();
    m.l2t_shortfall = j.at("l2t_shortfall").get<bool>();
    m.budget_truncated_samples = j.at("budget_truncated_samples").get<long>();
    m.oversize_truncated_samples = j.at("oversize_truncated_samples").get<long>();
    m.raw_sequences = j.at("packing").at("raw_sequences").get<long>();
    m.l2t_sequences = j.at("packing").at("l2t_sequences").get<long>();
    m.raw_mean_fill_nonfinal = j.at("packing").at("raw_mean_fill_nonfinal").get<double>();
    m.l2t_mean_fill_nonfinal = j.at("packing").at("l2t_mean_fill_nonfinal").get<double>();
    m.max_sequence_tokens = j.at("packing").at("max_sequence_tokens").get<long>();
    m.corpus_sha256 = j.at("corpus_sha256").get<std::string>();
    m.file_sha256 = j.at("file_sha256").get<std::map<std::string, std::string>>();
    m.file_records = j.at("file_records").get<std::map<std::string, long>>();
    m.built_at = j.at("built_at").get<std::string>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed manifest: ") + e.what());
  }
  return m;
}

ScenarioManifest ScenarioManifest::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open manifest: " + path);
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ConfigError("manifest is not valid JSON: " + path);
  return from_json(j);
}

void ScenarioManifest::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open manifest for write: " + path);
  out << to_json().dump(2) << '\n';
  if (!out) throw IoError("write failure on " + path);
}

namespace {

// Writes packed sequences to a temp file, then copies them out in the
// shuffled order using recorded line offsets.
class PackedShuffleWriter {
 public:
  explicit PackedShuffleWriter(std::string final_path)
      : final_path_(std::move(final_path)), temp_path_(final_path_ + ".tmp") {
    out_.open(temp_path_, std::ios::binary | std::ios::trunc);
    if (!out_) throw IoError("cannot open output file: " + temp_path_);
  }

  ~PackedShuffleWriter() {
    std::error_code ec;
    fs::remove(temp_path_, ec);
  }

  void add(const PackedSequence& seq) {
    const json rec{{"text", seq.text},
                   {"token_count", seq.token_count},
                   {"segments", seq.segments}};
    offsets_.push_back(static_cast<long>(out_.tellp()));
    out_ << rec.dump() << '\n';
    if (!out_) throw IoError("write failure on " + temp_path_);
  }

  size_t count() const { return offsets_.size(); }

  void finalize(uint64_t seed) {
    out_.flush();
    out_.close();
    std::ifstream in(temp_path_, std::ios::binary);
    if (!in) throw IoError("cannot reopen " + temp_path_);
    std::ofstream final_out(final_path_, std::ios::binary | std::ios::trunc);
    if (!final_out) throw IoError("cannot open output file: " + final_path_);
    for (size_t idx : shuffled_order(offsets_.size(), seed)) {
      in.clear();
      in.seekg(offsets_[idx]);
      std::string line;
      if (!std::getline(in, line)) throw IoError("read failure on " + temp_path_);
      final_out << line << '\n';
    }
    if (!final_out) throw IoError("write failure on " + final_path_);
    final_out.close();
  }

 private:
  std::string final_path_;
  std::string temp_path_;
  std::ofstream out_;
  std::vector<long> offsets_;
};

struct Runtime {
  TokenizerSpec tokenizer;
  CharClassTables tables;
  SegmenterOptions segmenter;
  std::vector<std::string> vocab;
};

Runtime make_runtime(const BuildConfig& cfg, PrePassInfo& pre) {
  Runtime rt;
  rt.tokenizer = cfg.make_tokenizer();
  rt.tables = cfg.make_tables();
  rt.segmenter = cfg.make_segmenter();
  rt.vocab = std::move(pre.replacement_vocab);
  return rt;
}

void fill_gen_stats(ScenarioManifest& m, const GenStats& stats) {
  for (int i = 0; i < kTaskKindCount; ++i) {
    const auto name = std::string(task_name(static_cast<TaskKind>(i)));
    if (stats.first_draw[i]) m.first_draw_counts[name] = stats.first_draw[i];
  }
  for (const auto& [reason, count] : stats.skip_counts) m.skip_counts[reason] += count;
  m.exhausted_chunks += stats.exhausted_chunks;
}

}  // namespace

ScenarioManifest run_transform(const BuildConfig& cfg) {
  cfg.validate(false);
  fs::create_directories(cfg.output_dir);

  PrePassInfo pre = run_pre_pass(cfg);
  Runtime rt = make_runtime(cfg, pre);
  L2tGenerator generator(cfg, rt.tokenizer, rt.tables, rt.segmenter, rt.vocab);

  const std::string samples_path = (fs::path(cfg.output_dir) / kL2tSamplesFile).string();
  SampleWriter writer(samples_path);

  ScenarioManifest manifest;
  manifest.config = cfg.to_json();
  manifest.command = "transform";

  CorpusReader reader(cfg.input_path, cfg.input_format, cfg.ingest_mode);
  auto source = [&]() { return reader.next(); };
  const Document* ring = pre.last_doc ? &*pre.last_doc : nullptr;

  GenStats stats = generator.run(source, ring, [&](TaskSample&& sample) {
    ++manifest.task_counts[std::string(task_name(sample.task))];
    manifest.realized_l2t_tokens += sample.token_count;
    writer.add(to_record(sample));
    return true;
  });

  manifest.file_records[kL2tSamplesFile] = writer.close();
  manifest.documents = pre.documents;
  manifest.skipped_records = pre.skipped_records;
  fill_gen_stats(manifest, stats);
  manifest.corpus_sha256 = pre.corpus_sha256;
  manifest.file_sha256[kL2tSamplesFile] = sha256_file(samples_path);
  manifest.built_at = utc_timestamp();
  manifest.save((fs::path(cfg.output_dir) / kManifestFile).string());
  return manifest;
}

namespace {

// Raw-side emission: chunks streamed as task="raw" samples, optionally
// repeated over whole corpus passes, filtered, and cut to land exactly on
// the target. Returns realized tokens.
struct RawEmission {
  long realized = 0;
  long passes_completed = 0;
  bool partial_pass = false;
  bool shortfall = false;
  long truncated = 0;
  long records = 0;
};

// available > 0 enables the subsample filter: each sample's seeded uniform
// draw is compared against remaining_target / remaining_available, so the
// accepted mass tracks the target across the whole stream instead of
// front-loading it.
RawEmission emit_raw_stream(const BuildConfig& cfg, const Runtime& rt, long target,
                            long available, bool repeat_passes,
                            const std::function<std::optional<Document>()>& make,
                            const std::function<void()>& rewind,
                            SampleWriter& writer, SequencePacker& packer) {
  RawEmission em;
  if (target <= 0) return em;
  long consumed = 0;
  const long max_passes = 100000;  // defensive bound; corpus is known non-empty
  for (long pass = 0; em.realized < target && pass < max_passes; ++pass) {
    if (pass > 0) rewind();
    bool any = false;
    while (auto doc = make()) {
      any = true;
      auto chunks = chunk_document(doc->doc_id, doc->body, cfg.chunk_target,
                                   rt.tokenizer, rt.segmenter);
      for (auto& chunk : chunks) {
        if (available > 0) {
          const long remaining_avail = std::max<long>(available - consumed, 1);
          consumed += chunk.token_count;
          const double rate = std::min(
              1.0, static_cast<double>(target - em.realized) /
                       static_cast<double>(remaining_avail));
          if (filter_unit(cfg.seed, kRawFilterSalt, chunk.doc_id,
                          chunk.chunk_index) >= rate) {
            continue;
          }
        }
        SampleRecord rec;
        rec.task = "raw";
        rec.doc_id = chunk.doc_id;
        rec.chunk_index = chunk.chunk_index;
        const long remaining = target - em.realized;
        if (chunk.token_count <= remaining) {
          rec.text = std::move(chunk.text);
          rec.token_count = chunk.token_count;
        } else {
          rec.text = truncate_to_tokens(chunk.text, remaining, rt.tokenizer);
          rec.token_count = count_tokens(rec.text, rt.tokenizer);
          ++em.truncated;
        }
        if (rec.token_count <= 0) continue;
        em.realized += rec.token_count;
        ++em.records;
        packer.push(rec.text, rec.token_count);
        writer.add(rec);
        if (em.realized >= target) break;
      }
      if (em.realized >= target) {
        em.partial_pass = true;
        break;
      }
    }
    if (!any) break;
    if (em.realized < target) {
      if (repeat_passes) ++em.passes_completed;
      if (!repeat_passes) break;
    }
  }
  em.shortfall = em.realized < target - cfg.max_seq_len;
  return em;
}

}  // namespace

ScenarioManifest run_mix(const BuildConfig& cfg) {
  cfg.validate(true);
  fs::create_directories(cfg.output_dir);

  PrePassInfo pre = run_pre_pass(cfg);
  if (pre.documents == 0) throw ConfigError("input.path: corpus is empty");
  Runtime rt = make_runtime(cfg, pre);
  L2tGenerator generator(cfg, rt.tokenizer, rt.tables, rt.segmenter, rt.vocab);

  const bool disjoint = cfg.scenario == Scenario::disjoint;
  const long l2t_target = std::llround(cfg.l2t_fraction * static_cast<double>(cfg.token_budget));

  // L2T side: side B under disjoint, the whole corpus under shared.
  auto make_l2t_reader = [&]() -> std::function<std::optional<Document>()> {
    if (disjoint) {
      auto reader = std::make_shared<SplitCorpusReader>(
          cfg.input_path, cfg.input_format, cfg.ingest_mode, cfg.seed, 1);
      return [reader]() { return reader->next(); };
    }
    auto reader = std::make_shared<CorpusReader>(cfg.input_path, cfg.input_format,
                                                 cfg.ingest_mode);
    return [reader]() { return reader->next(); };
  };
  const std::optional<Document>& l2t_ring = disjoint ? pre.last_side_doc[1] : pre.last_doc;

  ScenarioManifest manifest;
  manifest.config = cfg.to_json();
  manifest.command = "mix";
  manifest.documents = pre.documents;
  manifest.skipped_records = pre.skipped_records;
  manifest.target_l2t_tokens = l2t_target;

  // Measure pass: the L2T stream is deterministic, so one extra run yields
  // the exact available token mass for the subsample filter.
  long l2t_available = 0;
  if (l2t_target > 0) {
    auto source = make_l2t_reader();
    generator.run(source, l2t_ring ? &*l2t_ring : nullptr, [&](TaskSample&& sample) {
      l2t_available += sample.token_count;
      return true;
    });
  }

  const std::string l2t_path = (fs::path(cfg.output_dir) / kL2tSamplesFile).string();
  const std::string raw_path = (fs::path(cfg.output_dir) / kRawSamplesFile).string();
  const std::string packed_path = (fs::path(cfg.output_dir) / kPackedFile).string();

  PackedShuffleWriter packed_writer(packed_path);

  // L2T emission: whole samples until the next would cross the target. The
  // packed stream order is [raw..., l2t...] before shuffling, and raw runs
  // second, so l2t sequences are buffered until the raw side is written.
  SampleWriter l2t_writer(l2t_path);
  std::vector<PackedSequence> l2t_sequences;
  SequencePacker l2t_packer(cfg.max_seq_len, cfg.separator, rt.tokenizer,
                            [&](PackedSequence&& seq) {
                              l2t_sequences.push_back(std::move(seq));
                            });

  GenStats l2t_stats;
  if (l2t_target > 0) {
    long l2t_consumed = 0;
    auto source = make_l2t_reader();
    l2t_stats = generator.run(source, l2t_ring ? &*l2t_ring : nullptr,
                              [&](TaskSample&& sample) {
      const long remaining = l2t_target - manifest.realized_l2t_tokens;
      if (remaining <= 0) return false;
      const long remaining_avail = std::max<long>(l2t_available - l2t_consumed, 1);
      l2t_consumed += sample.token_count;
      const double rate = std::min(
          1.0, static_cast<double>(remaining) / static_cast<double>(remaining_avail));
      if (filter_unit(cfg.seed, kL2tFilterSalt, sample.doc_id, sample.chunk_index) >=
          rate) {
        return true;
      }
      if (sample.token_count > remaining) {
        return true;  // keep scanning; a smaller sample may still fit
      }
      manifest.realized_l2t_tokens += sample.token_count;
      ++manifest.task_counts[std::string(task_name(sample.task))];
      l2t_packer.push(sample.text, sample.token_count);
      l2t_writer.add(to_record(sample));
      return true;
    });
  }
  manifest.file_records[kL2tSamplesFile] = l2t_writer.close();
  fill_gen_stats(manifest, l2t_stats);
  manifest.l2t_shortfall =
      l2t_target > 0 && manifest.realized_l2t_tokens < l2t_target - cfg.max_seq_len;

  // Raw side lands exactly on budget - realized L2T (zero when the
  // configured fraction is 1).
  const long raw_target =
      cfg.l2t_fraction >= 1.0 ? 0 : cfg.token_budget - manifest.realized_l2t_tokens;
  manifest.target_raw_tokens = raw_target;

  // Shared mode repeats whole passes instead of filtering.
  const long raw_available = disjoint ? pre.side_tokens[0] : 0;

  SampleWriter raw_writer(raw_path);
  SequencePacker raw_packer(cfg.max_seq_len, cfg.separator, rt.tokenizer,
                            [&](PackedSequence&& seq) { packed_writer.add(seq); });

  std::shared_ptr<CorpusReader> raw_reader_full;
  std::shared_ptr<SplitCorpusReader> raw_reader_side;
  auto rewind_raw = [&]() {
    if (disjoint) {
      raw_reader_side = std::make_shared<SplitCorpusReader>(
          cfg.input_path, cfg.input_format, cfg.ingest_mode, cfg.seed, 0);
    } else {
      raw_reader_full = std::make_shared<CorpusReader>(cfg.input_path, cfg.input_format,
                                                       cfg.ingest_mode);
    }
  };
  rewind_raw();
  auto raw_source = [&]() -> std::optional<Document> {
    return disjoint ? raw_reader_side->next() : raw_reader_full->next();
  };

  RawEmission raw = emit_raw_stream(cfg, rt, raw_target, raw_available,
                                    /*repeat_passes=*/!disjoint, raw_source, rewind_raw,
                                    raw_writer, raw_packer);
  raw_packer.finish();
  manifest.file_records[kRawSamplesFile] = raw_writer.close();
  manifest.realized_raw_tokens = raw.realized;
  manifest.raw_full_passes = raw.passes_completed;
  manifest.raw_partial_pass = raw.partial_pass;
  manifest.raw_shortfall = raw.shortfall;
  manifest.budget_truncated_samples = raw.truncated;

  // Flush l2t sequences after the raw ones so the pre-shuffle order is
  // raw-then-l2t regardless of generation order.
  l2t_packer.finish();
  for (auto& seq : l2t_sequences) packed_writer.add(seq);
  packed_writer.finalize(mix64(cfg.seed, 0x7061636B2D6D6978ull));

  manifest.raw_sequences = raw_packer.emitted();
  manifest.l2t_sequences = l2t_packer.emitted();
  manifest.raw_mean_fill_nonfinal = raw_packer.mean_fill_nonfinal();
  manifest.l2t_mean_fill_nonfinal = l2t_packer.mean_fill_nonfinal();
  manifest.max_sequence_tokens =
      std::max(raw_packer.max_emitted_tokens(), l2t_packer.max_emitted_tokens());
  manifest.oversize_truncated_samples =
      raw_packer.oversize_truncated() + l2t_packer.oversize_truncated();
  manifest.file_records[kPackedFile] =
      manifest.raw_sequences + manifest.l2t_sequences;

  manifest.corpus_sha256 = pre.corpus_sha256;
  manifest.file_sha256[kL2tSamplesFile] = sha256_file(l2t_path);
  manifest.file_sha256[kRawSamplesFile] = sha256_file(raw_path);
  manifest.file_sha256[kPackedFile] = sha256_file(packed_path);
  manifest.built_at = utc_timestamp();
  manifest.save((fs::path(cfg.output_dir) / kManifestFile).string());
  return manifest;
}

PackReport run_pack(const BuildConfig& cfg, const std::string& samples_path,
                    const std::string& packed_path, bool shuffle) {
  cfg.task_params.validate();
  const TokenizerSpec tokenizer = cfg.make_tokenizer();

  PackReport report;
  if (shuffle) {
    PackedShuffleWriter writer(packed_path);
    SequencePacker packer(cfg.max_seq_len, cfg.separator, tokenizer,
                          [&](PackedSequence&& seq) {
                            report.total_tokens += seq.token_count;
                            writer.add(seq);
                          });
    SampleReader reader(samples_path);
    while (auto rec = reader.next()) {
      ++report.samples;
      packer.push(rec->text, count_tokens(rec->text, tokenizer));
    }
    packer.finish();
    writer.finalize(mix64(cfg.seed, 0x7061636B2D6F6E6Cull));
    report.sequences = packer.emitted();
    report.mean_fill_nonfinal = packer.mean_fill_nonfinal();
    report.oversize_truncated = packer.oversize_truncated();
    report.max_sequence_tokens = packer.max_emitted_tokens();
    return report;
  }

  std::ofstream out(packed_path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open output file: " + packed_path);
  SequencePacker packer(cfg.max_seq_len, cfg.separator, tokenizer,
                        [&](PackedSequence&& seq) {
                          report.total_tokens += seq.token_count;
                          const json rec{{"text", seq.text},
                                         {"token_count", seq.token_count},
                                         {"segments", seq.segments}};
                          out << rec.dump() << '\n';
                          if (!out) throw IoError("write failure on " + packed_path);
                        });
  SampleReader reader(samples_path);
  while (auto rec = reader.next()) {
    ++report.samples;
    packer.push(rec->text, count_tokens(rec->text, tokenizer));
  }
  packer.finish();
  report.sequences = packer.emitted();
  report.mean_fill_nonfinal = packer.mean_fill_nonfinal();
  report.oversize_truncated = packer.oversize_truncated();
  report.max_sequence_tokens = packer.max_emitted_tokens();
  return report;
}

}  // namespace l2t
