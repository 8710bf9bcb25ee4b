#pragma once

#include <string>
#include <unordered_set>
#include <vector>

#include "keyreader/text/tfidf.hpp"
#include "keyreader/types.hpp"

namespace krd::text {

// Lowercased stopword set, loaded one token per line ('#' comments allowed).
using StopwordSet = std::unordered_set<std::string>;

StopwordSet load_stopwords(const std::string& path);

struct KeywordifyOptions {
  std::size_t max_len = 8;
  Scalar stopword_drop_prob = 0.95;
  Scalar noise_prob = 0.05;
  // Question words people keep when typing queries; never dropped by the
  // stopword stage (case-insensitive).
  std::vector<std::string> preserved = {"when", "where"};
};

struct KeywordifyStats {
  std::size_t stopwords_seen = 0;     // non-preserved stopword occurrences
  std::size_t stopwords_dropped = 0;
  std::size_t preserved_seen = 0;
  std::size_t pruned = 0;             // tokens removed by the length stage
  std::size_t noise_prunes = 0;       // of those, random removals
};

// The dataset-modification procedure: (1) drop each non-preserved stopword
// with probability stopword_drop_prob, (2) strip sentence-final punctuation
// tokens, (3) while more than max_len tokens remain, remove one token per
// iteration -- a uniformly random one with probability noise_prob, else the
// one with the smallest TF-IDF weight (ties to the leftmost). Weights are
// computed once from the original question. Relative token order is always
// preserved. If everything is removed, the single highest-TF-IDF token of
// the original question is returned.
std::vector<std::string> keywordify(const std::vector<std::string>& question_tokens, Rng& rng,
                                    const StopwordSet& stopwords, const CorpusStats& corpus,
                                    const KeywordifyOptions& options = {},
                                    KeywordifyStats* stats = nullptr);

}  // namespace krd::text
