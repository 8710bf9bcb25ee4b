#pragma once

#include <map>
#include <string>
#include <vector>

#include "keyreader/types.hpp"

namespace krd {

// Flat "key = value" configuration ('#' comments). CLI flags override file
// values; env var KEYREADER_SEED is the seed of last resort.
struct RunConfig {
  // paths
  std::string train_path;
  std::string dev_path;
  std::string embeddings_path;  // optional; random frozen table when empty
  std::string stopwords_path;
  std::string out_dir = "out";
  std::string dom_checkpoint;  // train-e2e / predict input
  std::string e2e_checkpoint;  // predict input

  // model dims
  Index word_dim = 300;  // used when no embeddings file is given
  Index char_dim = 16;
  Index char_filters = 100;
  Index filter_width = 5;
  Index hidden = 100;
  Index match_hidden = 100;
  Index tag_dim = 20;
  int hops = 2;

  // decoding / answering
  int beam_k = 12;
  int candidates = 6;
  int max_decode_len = 20;
  Index max_span_len = 15;
  int top_k_spans = 5;

  // keywordification
  std::size_t keyword_max_len = 8;
  Scalar stopword_drop_prob = 0.95;
  Scalar keyword_noise_prob = 0.05;

  // tag-embedding pretraining
  int skip_window = 2;
  int skipgram_epochs = 5;
  int negatives = 5;
  std::size_t min_sentence_len = 9;

  // optimization
  Scalar dropout = 0.2;
  Scalar rho = 0.95;
  Scalar epsilon = 1e-6;
  int epochs = 20;
  int batch = 8;
  std::uint64_t seed = 1;
  Scalar target_token_acc = 0.0;  // early stop for train-dom when > 0 (percent)
  Scalar target_em = 0.0;         // early stop for train-e2e when > 0 (percent)

  void validate() const;           // positivity/range checks
  std::string canonical() const;   // sorted key=value lines
  std::uint64_t hash() const { return fnv1a(canonical()); }
};

// Applies file entries onto `base` (so env/default seeds survive unless the
// file sets them).
RunConfig parse_config_file(const std::string& path, RunConfig base = {});
// Applies a "key=value" override (CLI); throws ConfigError on unknown keys.
void apply_override(RunConfig& config, const std::string& key, const std::string& value);

}  // namespace krd
