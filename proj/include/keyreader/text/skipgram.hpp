#pragma once

#include <utility>
#include <vector>

#include "keyreader/types.hpp"

namespace krd::text {

struct SkipGramConfig {
  int window = 2;
  Index dim = 20;
  int epochs = 5;
  int negatives = 5;
  std::size_t min_sentence_len = 9;  // shorter sentences are screened out
  Scalar learning_rate = 0.05;
  std::uint64_t seed = 0;
};

// All (center, context) pairs within +/- window of each position.
std::vector<std::pair<int, int>> skipgram_pairs(const std::vector<int>& sentence, int window);

// Skip-gram with negative sampling over tag sentences; returns the input
// (center) embedding table, one row per tag id. Sentences shorter than
// min_sentence_len are dropped first; an empty corpus after filtering is a
// configuration error.
Mat train_tag_embeddings(const std::vector<std::vector<int>>& tag_sentences, int vocab_size,
                         const SkipGramConfig& config);

}  // namespace krd::text
