#include "formatting.hpp"

#include "errors.hpp"

namespace l2t {

void PrefixSet::validate() const {
  if (prefixes.empty()) throw ConfigError("prefixes: must not be empty");
}

std::string place_instruction(const std::string& body, const std::string& instruction,
                              RngBase& rng) {
  if (body.empty() || instruction.empty())
    throw ConfigError("place_instruction: body and instruction must be non-empty");
  return rng.below(2) == 0 ? instruction + "\n\n" + body
                           : body + "\n\n" + instruction;
}

TaskSample assemble_sample(const RawPair& pair, const PrefixSet& prefixes,
                           const TokenizerSpec& tokenizer, RngBase& rng,
                           std::string doc_id, long chunk_index) {
  if (pair.skip)
    throw ConfigError("assemble_sample: skip-flagged pair reached formatting");

  TaskSample sample;
  sample.task = pair.task;
  sample.output = pair.output;
  sample.doc_id = std::move(doc_id);
  sample.chunk_index = chunk_index;

  sample.prefix = prefixes.prefixes[rng.below(prefixes.prefixes.size())];
  sample.input = pair.aux_instruction
                     ? place_instruction(pair.input, *pair.aux_instruction, rng)
                     : pair.input;

  sample.text = sample.input;
  sample.text += "\n\n";
  if (!sample.prefix.empty()) {
    sample.text += sample.prefix;
    sample.text += ' ';
  }
  sample.text += sample.output;
  sample.token_count = count_tokens(sample.text, tokenizer);
  return sample;
}

}  // namespace l2t
