#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace krd::text {

struct Token {
  std::string text;
  std::size_t begin = 0;  // byte offsets into the source string
  std::size_t end = 0;
};

// Whitespace split, then leading/trailing ASCII punctuation peeled off into
// single-character tokens. Internal punctuation (hyphens, apostrophes) stays
// attached. Deterministic; offsets cover the source exactly.
std::vector<Token> tokenize(std::string_view source);

std::vector<std::string> token_texts(const std::vector<Token>& tokens);

bool is_punctuation_token(std::string_view token);

std::string lowercase(std::string_view s);

// Desk-scale suffix lemmatizer: strips s/es/ed/ing with final-consonant
// undoubling. Irregular forms pass through unchanged.
std::string lemma(std::string_view token);

std::string join(const std::vector<std::string>& tokens, std::string_view sep = " ");

}  // namespace krd::text
