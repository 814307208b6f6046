#include "config.hpp"

#include <fstream>

#include "errors.hpp"

using json = nlohmann::json;

namespace l2t {

namespace {

[[noreturn]] void bad_field(const std::string& field, const std::string& why) {
  throw ConfigError(field + ": " + why);
}

template <typename T>
T get_as(const json& j, const std::string& field) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    bad_field(field, "wrong type");
  }
}

std::pair<double, double> get_range(const json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 2) bad_field(field, "expected [low, high]");
  return {get_as<double>(j[0], field), get_as<double>(j[1], field)};
}

void parse_task_params(const json& j, TaskParams& p) {
  for (const auto& [key, value] : j.items()) {
    const std::string field = "task_params." + key;
    if (key == "masked_word_ratio") {
      p.masked_word_ratio = get_as<double>(value, field);
    } else if (key == "masked_char_ratio") {
      p.masked_char_ratio = get_as<double>(value, field);
    } else if (key == "random_ratio_range") {
      p.random_ratio_range = get_range(value, field);
    } else if (key == "shuffle_ratio_range") {
      p.shuffle_ratio_range = get_range(value, field);
    } else if (key == "typo_ratio_range") {
      p.typo_ratio_range = get_range(value, field);
    } else if (key == "mask_tokens") {
      p.mask_tokens = get_as<std::vector<std::string>>(value, field);
    } else if (key == "deletion_mode_prob") {
      p.deletion_mode_prob = get_as<double>(value, field);
    } else {
      bad_field(field, "unknown key");
    }
  }
}

void parse_instructions(const json& j, InstructionTemplates& t) {
  for (const auto& [key, value] : j.items()) {
    const std::string field = "instructions." + key;
    if (key == "char_count") {
      t.char_count = get_as<std::vector<std::string>>(value, field);
    } else if (key == "token_type") {
      if (!value.is_object()) bad_field(field, "expected object of class -> list");
      for (const auto& [cls, list] : value.items()) {
        const std::string cls_field = field + "." + cls;
        bool known = false;
        for (int i = 0; i < kTokenClassCount; ++i) {
          if (token_class_name(static_cast<TokenClass>(i)) == cls) {
            t.token_type[i] = get_as<std::vector<std::string>>(list, cls_field);
            known = true;
            break;
          }
        }
        if (!known) bad_field(cls_field, "unknown token class");
      }
    } else {
      bad_field(field, "unknown key");
    }
  }
}

void parse_input(const json& j, BuildConfig& c) {
  for (const auto& [key, value] : j.items()) {
    const std::string field = "input." + key;
    if (key == "path") {
      c.input_path = get_as<std::string>(value, field);
    } else if (key == "format") {
      const auto s = get_as<std::string>(value, field);
      if (s == "jsonl")
        c.input_format = CorpusFormat::jsonl;
      else if (s == "plain_dir")
        c.input_format = CorpusFormat::plain_dir;
      else
        bad_field(field, "expected \"jsonl\" or \"plain_dir\"");
    } else if (key == "mode") {
      const auto s = get_as<std::string>(value, field);
      if (s == "lenient")
        c.ingest_mode = IngestMode::lenient;
      else if (s == "strict")
        c.ingest_mode = IngestMode::strict;
      else
        bad_field(field, "expected \"lenient\" or \"strict\"");
    } else {
      bad_field(field, "unknown key");
    }
  }
}

void parse_tokenizer(const json& j, BuildConfig& c) {
  for (const auto& [key, value] : j.items()) {
    const std::string field = "tokenizer." + key;
    if (key == "kind") {
      const auto s = get_as<std::string>(value, field);
      if (s == "whitespace")
        c.tokenizer_kind = TokenizerKind::whitespace;
      else if (s == "subword_vocab")
        c.tokenizer_kind = TokenizerKind::subword_vocab;
      else
        bad_field(field, "expected \"whitespace\" or \"subword_vocab\"");
    } else if (key == "vocab_path") {
      c.tokenizer_vocab_path = get_as<std::string>(value, field);
    } else {
      bad_field(field, "unknown key");
    }
  }
}

}  // namespace

std::string_view scenario_name(Scenario s) {
  return s == Scenario::disjoint ? "disjoint" : "shared";
}

void BuildConfig::apply_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key == "scenario") {
      const auto s = get_as<std::string>(value, key);
      if (s == "disjoint")
        scenario = Scenario::disjoint;
      else if (s == "shared")
        scenario = Scenario::shared;
      else
        bad_field("scenario", "expected \"disjoint\" or \"shared\"");
    } else if (key == "token_budget") {
      token_budget = get_as<long>(value, key);
    } else if (key == "l2t_fraction") {
      l2t_fraction = get_as<double>(value, key);
    } else if (key == "max_seq_len") {
      max_seq_len = get_as<long>(value, key);
    } else if (key == "chunk_target") {
      chunk_target = get_as<long>(value, key);
    } else if (key == "seed") {
      seed = get_as<uint64_t>(value, key);
    } else if (key == "workers") {
      workers = get_as<int>(value, key);
    } else if (key == "input") {
      if (!value.is_object()) bad_field("input", "expected object");
      parse_input(value, *this);
    } else if (key == "output_dir") {
      output_dir = get_as<std::string>(value, key);
    } else if (key == "separator") {
      separator = get_as<std::string>(value, key);
    } else if (key == "tokenizer") {
      if (!value.is_object()) bad_field("tokenizer", "expected object");
      parse_tokenizer(value, *this);
    } else if (key == "task_params") {
      if (!value.is_object()) bad_field("task_params", "expected object");
      parse_task_params(value, task_params);
    } else if (key == "prefixes") {
      prefix_set.prefixes = get_as<std::vector<std::string>>(value, key);
    } else if (key == "instructions") {
      if (!value.is_object()) bad_field("instructions", "expected object");
      parse_instructions(value, templates);
    } else if (key == "stopwords_path") {
      stopwords_path = get_as<std::string>(value, key);
    } else if (key == "abbreviations_path") {
      abbreviations_path = get_as<std::string>(value, key);
    } else if (key == "replacement_vocab_path") {
      replacement_vocab_path = get_as<std::string>(value, key);
    } else if (key == "replacement_vocab_size") {
      replacement_vocab_size = get_as<long>(value, key);
    } else {
      bad_field(key, "unknown key");
    }
  }
}

BuildConfig BuildConfig::from_json(const json& j) {
  BuildConfig c;
  c.apply_json(j);
  return c;
}

BuildConfig BuildConfig::from_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config file: " + path);
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ConfigError("config file is not valid JSON: " + path);
  return from_json(j);
}

void BuildConfig::set_key(const std::string& dotted_key, const std::string& value) {
  // Build a nested one-key object and reuse apply_json so type checks and
  // unknown-key errors stay in one place.
  json leaf;
  json parsed = json::parse(value, nullptr, false);
  if (parsed.is_discarded() || parsed.is_object() || parsed.is_array()) {
    // Arrays/objects must be valid JSON; bare words become strings.
    leaf = parsed.is_discarded() ? json(value) : parsed;
  } else {
    leaf = parsed;
  }
  // Strings that parsed to something odd (e.g. "lenient" is not JSON) fall
  // back to plain strings above.
  json root = leaf;
  size_t end = dotted_key.size();
  while (true) {
    const size_t dot = dotted_key.rfind('.', end == 0 ? 0 : end - 1);
    if (dot == std::string::npos) {
      json wrapper;
      wrapper[dotted_key.substr(0, end)] = root;
      root = wrapper;
      break;
    }
    json wrapper;
    wrapper[dotted_key.substr(dot + 1, end - dot - 1)] = root;
    root = wrapper;
    end = dot;
  }
  apply_json(root);
}

json BuildConfig::to_json() const {
  json t = json::object();
  t["masked_word_ratio"] = task_params.masked_word_ratio;
  t["masked_char_ratio"] = task_params.masked_char_ratio;
  t["random_ratio_range"] = {task_params.random_ratio_range.first,
                             task_params.random_ratio_range.second};
  t["shuffle_ratio_range"] = {task_params.shuffle_ratio_range.first,
                              task_params.shuffle_ratio_range.second};
  t["typo_ratio_range"] = {task_params.typo_ratio_range.first,
                           task_params.typo_ratio_range.second};
  t["mask_tokens"] = task_params.mask_tokens;
  t["deletion_mode_prob"] = task_params.deletion_mode_prob;

  json instr = json::object();
  instr["char_count"] = templates.char_count;
  json tt = json::object();
  for (int i = 0; i < kTokenClassCount; ++i) {
    tt[std::string(token_class_name(static_cast<TokenClass>(i)))] =
        templates.token_type[i];
  }
  instr["token_type"] = tt;

  return json{
      {"scenario", std::string(scenario_name(scenario))},
      {"token_budget", token_budget},
      {"l2t_fraction", l2t_fraction},
      {"max_seq_len", max_seq_len},
      {"chunk_target", chunk_target},
      {"seed", seed},
      {"workers", workers},
      {"input",
       {{"path", input_path},
        {"format", input_format == CorpusFormat::jsonl ? "jsonl" : "plain_dir"},
        {"mode", ingest_mode == IngestMode::lenient ? "lenient" : "strict"}}},
      {"output_dir", output_dir},
      {"separator", separator},
      {"tokenizer",
       {{"kind",
         tokenizer_kind == TokenizerKind::whitespace ? "whitespace" : "subword_vocab"},
        {"vocab_path", tokenizer_vocab_path}}},
      {"task_params", t},
      {"prefixes", prefix_set.prefixes},
      {"instructions", instr},
      {"stopwords_path", stopwords_path},
      {"abbreviations_path", abbreviations_path},
      {"replacement_vocab_path", replacement_vocab_path},
      {"replacement_vocab_size", replacement_vocab_size},
  };
}

void BuildConfig::validate(bool require_mix) const {
  if (input_path.empty()) bad_field("input.path", "required");
  if (output_dir.empty()) bad_field("output_dir", "required");
  if (chunk_target < 1) bad_field("chunk_target", "must be >= 1");
  if (max_seq_len < 1) bad_field("max_seq_len", "must be >= 1");
  if (workers < 1) bad_field("workers", "must be >= 1");
  if (!(l2t_fraction >= 0.0 && l2t_fraction <= 1.0))
    bad_field("l2t_fraction", "must be in [0,1]");
  if (require_mix && token_budget < max_seq_len)
    bad_field("token_budget", "must be >= max_seq_len");
  if (tokenizer_kind == TokenizerKind::subword_vocab && tokenizer_vocab_path.empty())
    bad_field("tokenizer.vocab_path", "required for subword_vocab tokenizer");
  if (replacement_vocab_size < 1 && replacement_vocab_path.empty())
    bad_field("replacement_vocab_size", "must be >= 1");
  task_params.validate();
  prefix_set.validate();
  templates.validate();
}

TokenizerSpec BuildConfig::make_tokenizer() const {
  if (tokenizer_kind == TokenizerKind::whitespace) return TokenizerSpec::whitespace();
  return TokenizerSpec::subword_from_file(tokenizer_vocab_path);
}

CharClassTables BuildConfig::make_tables() const {
  return stopwords_path.empty() ? CharClassTables::defaults()
                                : CharClassTables::with_stopwords_file(stopwords_path);
}

SegmenterOptions BuildConfig::make_segmenter() const {
  return abbreviations_path.empty()
             ? SegmenterOptions::defaults()
             : SegmenterOptions::with_abbreviations_file(abbreviations_path);
}

}  // namespace l2t
