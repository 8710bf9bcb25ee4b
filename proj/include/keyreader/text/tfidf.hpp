#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "keyreader/types.hpp"

namespace krd::text {

// Document frequencies over the training questions (one question = one
// document).
struct CorpusStats {
  std::size_t doc_count = 0;
  std::unordered_map<std::string, std::size_t> doc_freq;

  void add_document(const std::vector<std::string>& tokens);

  // Add-one smoothed idf; a token in every document scores exactly 0 and
  // unseen tokens score ln(1 + D).
  Scalar idf(const std::string& token) const;
};

// weight(t) = tf(t in question) * ln((1 + D) / (1 + df(t))), per occurrence.
std::vector<Scalar> tfidf_scores(const std::vector<std::string>& question_tokens,
                                 const CorpusStats& corpus);

}  // namespace krd::text
