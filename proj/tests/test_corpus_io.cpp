#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "corpus_io.hpp"
#include "errors.hpp"
#include "synth_corpus.hpp"

using namespace l2t;
namespace fs = std::filesystem;

namespace {

std::string write_file(const std::string& dir, const std::string& name,
                       const std::string& content) {
  const std::string path = (fs::path(dir) / name).string();
  std::ofstream out(path, std::ios::binary);
  out << content;
  return path;
}

std::vector<Document> drain(CorpusReader& reader) {
  std::vector<Document> docs;
  while (auto d = reader.next()) docs.push_back(std::move(*d));
  return docs;
}

}  // namespace

TEST_CASE("jsonl reader yields documents in file order") {
  const auto dir = testing::make_temp_dir("io");
  const auto path = write_file(dir, "c.jsonl",
                               R"({"text":"alpha body","id":"a"})"
                               "\n"
                               R"({"text":"beta body"})"
                               "\n"
                               R"({"text":"gamma body","meta":{"lang":"en"}})"
                               "\n");
  CorpusReader reader(path, CorpusFormat::jsonl);
  const auto docs = drain(reader);
  REQUIRE(docs.size() == 3);
  CHECK(docs[0].ordinal == 0);
  CHECK(docs[1].ordinal == 1);
  CHECK(docs[2].ordinal == 2);
  CHECK(docs[0].doc_id == "a");
  CHECK(docs[1].doc_id == "c.jsonl#1");  // synthesized <filename>#<line>
  CHECK(docs[2].meta.at("lang") == "en");
  CHECK(reader.skipped() == 0);
}

TEST_CASE("empty file yields an empty stream") {
  const auto dir = testing::make_temp_dir("io");
  const auto path = write_file(dir, "empty.jsonl", "");
  CorpusReader reader(path, CorpusFormat::jsonl);
  CHECK(!reader.next().has_value());
  CHECK(reader.skipped() == 0);
}

TEST_CASE("lenient mode skips malformed lines and counts them") {
  const auto dir = testing::make_temp_dir("io");
  std::string content;
  for (int i = 0; i < 10; ++i) {
    if (i == 4) {
      content += "{not json\n";
    } else {
      content += R"({"text":"doc body )" + std::to_string(i) + R"("})" "\n";
    }
  }
  const auto path = write_file(dir, "c.jsonl", content);
  CorpusReader reader(path, CorpusFormat::jsonl, IngestMode::lenient);
  const auto docs = drain(reader);
  CHECK(docs.size() == 9);
  CHECK(reader.skipped() == 1);
  // Ordinals stay dense even when lines are skipped.
  for (size_t i = 0; i < docs.size(); ++i) CHECK(docs[i].ordinal == static_cast<long>(i));
}

TEST_CASE("strict mode throws with the line number") {
  const auto dir = testing::make_temp_dir("io");
  const auto path = write_file(dir, "c.jsonl",
                               R"({"text":"fine"})"
                               "\n{broken\n");
  CorpusReader reader(path, CorpusFormat::jsonl, IngestMode::strict);
  CHECK(reader.next().has_value());
  CHECK_THROWS_AS(reader.next(), IoError);
}

TEST_CASE("records missing text or with invalid utf-8 are malformed") {
  const auto dir = testing::make_temp_dir("io");
  const auto path = write_file(dir, "c.jsonl",
                               R"({"id":"x"})"
                               "\n"
                               "{\"text\":\"bad \xFF\xFE\"}\n"
                               R"({"text":"good"})"
                               "\n");
  CorpusReader reader(path, CorpusFormat::jsonl, IngestMode::lenient);
  const auto docs = drain(reader);
  REQUIRE(docs.size() == 1);
  CHECK(docs[0].body == "good");
  CHECK(reader.skipped() == 2);
}

TEST_CASE("unreadable path is a fatal io error") {
  CHECK_THROWS_AS(CorpusReader("/nonexistent/corpus.jsonl", CorpusFormat::jsonl),
                  IoError);
  CHECK_THROWS_AS(CorpusReader("/nonexistent/dir", CorpusFormat::plain_dir), IoError);
}

TEST_CASE("plain_dir reads txt files in sorted order") {
  const auto dir = testing::make_temp_dir("io");
  write_file(dir, "b.txt", "second body");
  write_file(dir, "a.txt", "first body");
  write_file(dir, "ignored.json", "{}");
  CorpusReader reader(dir, CorpusFormat::plain_dir);
  const auto docs = drain(reader);
  REQUIRE(docs.size() == 2);
  CHECK(docs[0].doc_id == "a.txt");
  CHECK(docs[0].body == "first body");
  CHECK(docs[1].doc_id == "b.txt");
}

TEST_CASE("split assigns each document to exactly one side") {
  const auto dir = testing::make_temp_dir("io");
  const auto path = write_file(dir, "c.jsonl",
                               R"({"text":"one","id":"d1"})"
                               "\n"
                               R"({"text":"two","id":"d2"})"
                               "\n");
  CorpusSplit split{path, CorpusFormat::jsonl, IngestMode::lenient, 99};
  auto a = split.side_a();
  auto b = split.side_b();
  std::set<std::string> ids;
  while (auto d = a.next()) ids.insert(d->doc_id);
  while (auto d = b.next()) ids.insert(d->doc_id);
  CHECK(ids == std::set<std::string>{"d1", "d2"});
  CHECK(split_side(99, "d1") != -1);
  // Deterministic per (seed, doc_id).
  CHECK(split_side(99, "d1") == split_side(99, "d1"));
}

TEST_CASE("split assignment is independent of stream order") {
  std::vector<std::string> ids;
  for (int i = 0; i < 500; ++i) ids.push_back("doc-" + std::to_string(i));
  std::vector<int> sides;
  for (const auto& id : ids) sides.push_back(split_side(4242, id));
  std::vector<std::string> shuffled = ids;
  std::reverse(shuffled.begin(), shuffled.end());
  for (size_t i = 0; i < shuffled.size(); ++i) {
    CHECK(split_side(4242, shuffled[i]) == sides[ids.size() - 1 - i]);
  }
}

TEST_CASE("split of 10,000 documents lands near 50/50") {
  long side_a = 0;
  for (int i = 0; i < 10000; ++i) {
    if (split_side(7, "doc-" + std::to_string(i)) == 0) ++side_a;
  }
  CHECK(side_a >= 4700);
  CHECK(side_a <= 5300);
}

TEST_CASE("sample write/read round-trip is field-exact") {
  const auto dir = testing::make_temp_dir("io");
  const auto path = (fs::path(dir) / "samples.jsonl").string();
  std::vector<SampleRecord> records;
  for (int i = 0; i < 3; ++i) {
    SampleRecord r;
    r.task = i == 0 ? "space" : "typo";
    r.input = "input \"quoted\" é " + std::to_string(i);
    r.output = "output\nwith newline " + std::to_string(i);
    r.text = r.input + "\n\n" + r.output;
    r.doc_id = "doc-" + std::to_string(i);
    r.chunk_index = i;
    r.token_count = 5 + i;
    records.push_back(r);
  }
  SampleWriter writer(path);
  for (const auto& r : records) writer.add(r);
  CHECK(writer.close() == 3);

  const auto back = read_samples(path);
  REQUIRE(back.size() == records.size());
  for (size_t i = 0; i < records.size(); ++i) {
    CHECK(back[i].task == records[i].task);
    CHECK(back[i].input == records[i].input);
    CHECK(back[i].output == records[i].output);
    CHECK(back[i].text == records[i].text);
    CHECK(back[i].doc_id == records[i].doc_id);
    CHECK(back[i].chunk_index == records[i].chunk_index);
    CHECK(back[i].token_count == records[i].token_count);
  }
}

TEST_CASE("zero samples write an empty file with count zero") {
  const auto dir = testing::make_temp_dir("io");
  const auto path = (fs::path(dir) / "samples.jsonl").string();
  SampleWriter writer(path);
  CHECK(writer.close() == 0);
  CHECK(fs::exists(path));
  CHECK(fs::file_size(path) == 0);
}

TEST_CASE("two identical writes produce byte-identical files") {
  const auto dir = testing::make_temp_dir("io");
  SampleRecord r;
  r.task = "half";
  r.input = "first segment";
  r.output = "second segment";
  r.text = "first segment\n\nsecond segment";
  r.doc_id = "d";
  r.chunk_index = 0;
  r.token_count = 4;
  for (const char* name : {"a.jsonl", "b.jsonl"}) {
    SampleWriter writer((fs::path(dir) / name).string());
    writer.add(r);
    writer.add(r);
    writer.close();
  }
  std::ifstream f1((fs::path(dir) / "a.jsonl").string(), std::ios::binary);
  std::ifstream f2((fs::path(dir) / "b.jsonl").string(), std::ios::binary);
  const std::string c1((std::istreambuf_iterator<char>(f1)), {});
  const std::string c2((std::istreambuf_iterator<char>(f2)), {});
  CHECK(c1 == c2);
  CHECK(!c1.empty());
}

TEST_CASE("unwritable destination is a fatal io error") {
  const auto dir = testing::make_temp_dir("io");
  const auto blocker = write_file(dir, "blocker", "x");
  // A path that routes through a regular file cannot be opened.
  CHECK_THROWS_AS(SampleWriter((fs::path(blocker) / "samples.jsonl").string()),
                  IoError);
}

TEST_CASE("sample reader skips malformed lines and counts them") {
  const auto dir = testing::make_temp_dir("io");
  const auto path = write_file(
      dir, "s.jsonl",
      R"({"task":"half","input":"a","output":"b","text":"a\n\nb","doc_id":"d","chunk_index":0,"token_count":2})"
      "\nnot json\n"
      R"({"task":"half","input":"a"})"
      "\n");
  SampleReader reader(path);
  long good = 0;
  while (auto r = reader.next()) ++good;
  CHECK(good == 1);
  CHECK(reader.skipped() == 2);
}
