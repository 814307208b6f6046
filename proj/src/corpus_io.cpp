#include "corpus_io.hpp"

#include <algorithm>
#include <filesystem>

#include <json.hpp>

#include "errors.hpp"
#include "text_model.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace l2t {

struct CorpusReader::Impl {
  std::string path;
  CorpusFormat format;
  IngestMode mode;
  long ordinal = 0;
  long skipped = 0;

  // jsonl state
  std::ifstream in;
  std::string filename;
  long line = 0;

  // plain_dir state
  std::vector<fs::path> files;
  size_t file_index = 0;

  std::optional<Document> next_jsonl();
  std::optional<Document> next_plain();
  void record_error(const std::string& what);
};

void CorpusReader::Impl::record_error(const std::string& what) {
  if (mode == IngestMode::strict) {
    throw IoError(path + ":" + std::to_string(line) + ": " + what);
  }
  ++skipped;
}

std::optional<Document> CorpusReader::Impl::next_jsonl() {
  std::string raw;
  while (std::getline(in, raw)) {
    const long this_line = line++;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    if (raw.empty()) continue;
    json rec = json::parse(raw, nullptr, false);
    if (rec.is_discarded() || !rec.is_object()) {
      record_error("malformed json record");
      continue;
    }
    auto text_it = rec.find("text");
    if (text_it == rec.end() || !text_it->is_string()) {
      record_error("missing or non-string \"text\" field");
      continue;
    }
    Document doc;
    doc.body = text_it->get<std::string>();
    if (!is_valid_utf8(doc.body)) {
      record_error("invalid utf-8 in \"text\" field");
      continue;
    }
    auto id_it = rec.find("id");
    if (id_it != rec.end() && id_it->is_string() && !id_it->get<std::string>().empty()) {
      doc.doc_id = id_it->get<std::string>();
    } else {
      doc.doc_id = filename + "#" + std::to_string(this_line);
    }
    auto meta_it = rec.find("meta");
    if (meta_it != rec.end() && meta_it->is_object()) {
      for (auto& [k, v] : meta_it->items()) {
        if (v.is_string()) doc.meta[k] = v.get<std::string>();
      }
    }
    doc.ordinal = ordinal++;
    return doc;
  }
  if (in.bad()) throw IoError("read failure on " + path);
  return std::nullopt;
}

std::optional<Document> CorpusReader::Impl::next_plain() {
  while (file_index < files.size()) {
    const fs::path& file = files[file_index++];
    std::ifstream f(file, std::ios::binary);
    if (!f) {
      ++line;
      record_error("cannot open " + file.string());
      continue;
    }
    std::string body((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (f.bad()) throw IoError("read failure on " + file.string());
    if (!is_valid_utf8(body)) {
      record_error("invalid utf-8 in " + file.string());
      continue;
    }
    Document doc;
    doc.doc_id = file.filename().string();
    doc.body = std::move(body);
    doc.ordinal = ordinal++;
    return doc;
  }
  return std::nullopt;
}

CorpusReader::CorpusReader(std::string path, CorpusFormat format, IngestMode mode)
    : impl_(std::make_unique<Impl>()) {
  impl_->path = path;
  impl_->format = format;
  impl_->mode = mode;
  if (format == CorpusFormat::jsonl) {
    impl_->in.open(path, std::ios::binary);
    if (!impl_->in) throw IoError("cannot open corpus file: " + path);
    impl_->filename = fs::path(path).filename().string();
  } else {
    std::error_code ec;
    fs::directory_iterator it(path, ec);
    if (ec) throw IoError("cannot open corpus directory: " + path);
    for (const auto& entry : it) {
      if (entry.is_regular_file() && entry.path().extension() == ".txt") {
        impl_->files.push_back(entry.path());
      }
    }
    std::sort(impl_->files.begin(), impl_->files.end());
  }
}

CorpusReader::~CorpusReader() = default;
CorpusReader::CorpusReader(CorpusReader&&) noexcept = default;
CorpusReader& CorpusReader::operator=(CorpusReader&&) noexcept = default;

std::optional<Document> CorpusReader::next() {
  return impl_->format == CorpusFormat::jsonl ? impl_->next_jsonl() : impl_->next_plain();
}

long CorpusReader::skipped() const { return impl_->skipped; }

SplitCorpusReader::SplitCorpusReader(std::string path, CorpusFormat format,
                                     IngestMode mode, uint64_t seed, int side)
    : inner_(std::move(path), format, mode), seed_(seed), side_(side) {}

std::optional<Document> SplitCorpusReader::next() {
  while (auto doc = inner_.next()) {
    if (split_side(seed_, doc->doc_id) == side_) return doc;
  }
  return std::nullopt;
}

namespace {

json to_json(const SampleRecord& r) {
  return json{{"task", r.task},     {"input", r.input},
              {"output", r.output}, {"text", r.text},
              {"doc_id", r.doc_id}, {"chunk_index", r.chunk_index},
              {"token_count", r.token_count}};
}

}  // namespace

SampleWriter::SampleWriter(std::string path) : path_(std::move(path)) {
  out_.open(path_, std::ios::binary | std::ios::trunc);
  if (!out_) throw IoError("cannot open output file: " + path_);
  open_ = true;
}

SampleWriter::~SampleWriter() {
  if (open_) {
    // Abandoned writer: do not leave a partial file behind.
    out_.close();
    std::error_code ec;
    fs::remove(path_, ec);
  }
}

void SampleWriter::add(const SampleRecord& record) {
  out_ << to_json(record).dump() << '\n';
  if (!out_) {
    out_.close();
    std::error_code ec;
    fs::remove(path_, ec);
    open_ = false;
    throw IoError("write failure on " + path_);
  }
  ++count_;
}

long SampleWriter::close() {
  if (!open_) return count_;
  out_.flush();
  const bool ok = static_cast<bool>(out_);
  out_.close();
  open_ = false;
  if (!ok) {
    std::error_code ec;
    fs::remove(path_, ec);
    throw IoError("write failure on " + path_);
  }
  return count_;
}

SampleReader::SampleReader(std::string path) : path_(std::move(path)) {
  in_.open(path_, std::ios::binary);
  if (!in_) throw IoError("cannot open sample file: " + path_);
}

std::optional<SampleRecord> SampleReader::next() {
  std::string raw;
  while (std::getline(in_, raw)) {
    ++line_;
    if (raw.empty()) continue;
    json rec = json::parse(raw, nullptr, false);
    if (rec.is_discarded() || !rec.is_object()) {
      ++skipped_;
      continue;
    }
    try {
      SampleRecord r;
      r.task = rec.at("task").get<std::string>();
      r.input = rec.at("input").get<std::string>();
      r.output = rec.at("output").get<std::string>();
      r.text = rec.at("text").get<std::string>();
      r.doc_id = rec.at("doc_id").get<std::string>();
      r.chunk_index = rec.at("chunk_index").get<long>();
      r.token_count = rec.at("token_count").get<long>();
      return r;
    } catch (const json::exception&) {
      ++skipped_;
    }
  }
  if (in_.bad()) throw IoError("read failure on " + path_);
  return std::nullopt;
}

std::vector<SampleRecord> read_samples(const std::string& path) {
  SampleReader reader(path);
  std::vector<SampleRecord> all;
  while (auto r = reader.next()) all.push_back(std::move(*r));
  return all;
}

}  // namespace l2t
