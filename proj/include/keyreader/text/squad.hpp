#pragma once

#include <optional>
#include <string>
#include <vector>

#include "keyreader/text/tokenize.hpp"
#include "keyreader/types.hpp"

namespace krd::text {

struct AnswerSpan {
  Index start_token = 0;  // inclusive
  Index end_token = 0;    // inclusive
  std::string text;       // raw answer string from the file
  std::size_t char_start = 0;
};

// One (passage, question, keyword query, answer spans) record.
struct Example {
  std::string id;
  std::string title;
  std::string passage_text;
  std::vector<Token> passage_tokens;
  std::string question_raw;  // the file's "question" field verbatim
  std::vector<std::string> question_tokens;  // ground-truth question Q^g
  std::vector<std::string> keyword_tokens;   // query F; empty if not keywordified
  std::optional<std::string> original_question_raw;
  std::vector<AnswerSpan> answers;

  bool keywordified() const { return original_question_raw.has_value(); }
  // Raw passage substring covered by a token span.
  std::string span_text(Index start_token, Index end_token) const;
};

struct Dataset {
  std::string version = "1.1";
  std::vector<Example> examples;
  std::size_t skipped = 0;  // records dropped for malformed answer offsets
};

// SQuAD v1.1 JSON. Keywordified files carry "original_question" per qa, in
// which case "question" holds the keyword query. Answer char offsets become
// minimal token covers; a record with any unalignable answer is skipped,
// warned about and counted.
Dataset read_dataset(const std::string& path);
void write_dataset(const Dataset& dataset, const std::string& path);

}  // namespace krd::text
