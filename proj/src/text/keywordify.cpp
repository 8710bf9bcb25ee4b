#include "keyreader/text/keywordify.hpp"

#include <algorithm>
#include <fstream>

#include "keyreader/text/tokenize.hpp"

namespace krd::text {

StopwordSet load_stopwords(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open stopword list: " + path);
  StopwordSet set;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    set.insert(lowercase(line));
  }
  return set;
}

std::vector<std::string> keywordify(const std::vector<std::string>& question_tokens, Rng& rng,
                                    const StopwordSet& stopwords, const CorpusStats& corpus,
                                    const KeywordifyOptions& options, KeywordifyStats* stats) {
  if (question_tokens.empty()) {
    throw ConfigError("keywordify: empty question");
  }
  KeywordifyStats local;
  KeywordifyStats& st = stats ? *stats : local;

  const std::vector<Scalar> weights = tfidf_scores(question_tokens, corpus);

  auto is_preserved = [&](const std::string& lower) {
    return std::find(options.preserved.begin(), options.preserved.end(), lower) !=
           options.preserved.end();
  };

  // Stage 1: stochastic stopword removal.
  std::vector<std::size_t> kept;  // indices into question_tokens
  for (std::size_t i = 0; i < question_tokens.size(); ++i) {
    const std::string lower = lowercase(question_tokens[i]);
    if (stopwords.count(lower)) {
      if (is_preserved(lower)) {
        ++st.preserved_seen;
      } else {
        ++st.stopwords_seen;
        if (rng.bernoulli(options.stopword_drop_prob)) {
          ++st.stopwords_dropped;
          continue;
        }
      }
    }
    kept.push_back(i);
  }

  // Stage 2: sentence-final punctuation.
  while (!kept.empty() && is_punctuation_token(question_tokens[kept.back()])) {
    kept.pop_back();
  }

  // Stage 3: TF-IDF pruning to max_len, one token per iteration.
  while (kept.size() > options.max_len) {
    std::size_t victim;
    if (rng.bernoulli(options.noise_prob)) {
      victim = static_cast<std::size_t>(rng.uniform_int(kept.size()));
      ++st.noise_prunes;
    } else {
      victim = 0;
      for (std::size_t k = 1; k < kept.size(); ++k) {
        if (weights[kept[k]] < weights[kept[victim]]) victim = k;  // ties keep leftmost
      }
    }
    kept.erase(kept.begin() + static_cast<std::ptrdiff_t>(victim));
    ++st.pruned;
  }

  if (kept.empty()) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < question_tokens.size(); ++i) {
      if (weights[i] > weights[best]) best = i;
    }
    kept.push_back(best);
  }

  std::vector<std::string> out;
  out.reserve(kept.size());
  for (std::size_t i : kept) out.push_back(question_tokens[i]);
  return out;
}

}  // namespace krd::text
