#pragma once

#include <string>
#include <vector>

#include "rng.hpp"
#include "tasks.hpp"
#include "text_model.hpp"

namespace l2t {

// Prefixes inserted between input and output. The list order is frozen so
// an RNG draw indexes it stably; the empty prefix is a valid member.
struct PrefixSet {
  std::vector<std::string> prefixes{"Answer:", "Response:", "A:", "(A)",
                                    "A)",      "A.",        ""};

  void validate() const;
};

// Final training sample: text = input ⊕ "\n\n" ⊕ (prefix ⊕ " " if prefix
// non-empty) ⊕ output. input already carries the placed instruction for
// counting tasks.
struct TaskSample {
  TaskKind task = TaskKind::char_count;
  std::string input;
  std::string output;
  std::string prefix;
  std::string text;
  std::string doc_id;
  long chunk_index = 0;
  long token_count = 0;
};

// Instruction goes at the head or the tail of the body with probability
// 0.5 each, separated by two newlines. Draw: 0 = head, 1 = tail.
std::string place_instruction(const std::string& body, const std::string& instruction,
                              RngBase& rng);

// Draw order: prefix index first, then (when an instruction is present) the
// placement coin.
TaskSample assemble_sample(const RawPair& pair, const PrefixSet& prefixes,
                           const TokenizerSpec& tokenizer, RngBase& rng,
                           std::string doc_id, long chunk_index);

}  // namespace l2t
