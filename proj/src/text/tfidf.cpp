#include "keyreader/text/tfidf.hpp"

#include <cmath>
#include <unordered_set>

namespace krd::text {

void CorpusStats::add_document(const std::vector<std::string>& tokens) {
  ++doc_count;
  std::unordered_set<std::string> distinct(tokens.begin(), tokens.end());
  for (const auto& t : distinct) ++doc_freq[t];
}

Scalar CorpusStats::idf(const std::string& token) const {
  auto it = doc_freq.find(token);
  const std::size_t df = it == doc_freq.end() ? 0 : it->second;
  return std::log(static_cast<Scalar>(1 + doc_count) / static_cast<Scalar>(1 + df));
}

std::vector<Scalar> tfidf_scores(const std::vector<std::string>& question_tokens,
                                 const CorpusStats& corpus) {
  std::unordered_map<std::string, std::size_t> tf;
  for (const auto& t : question_tokens) ++tf[t];
  std::vector<Scalar> weights;
  weights.reserve(question_tokens.size());
  for (const auto& t : question_tokens) {
    weights.push_back(static_cast<Scalar>(tf[t]) * corpus.idf(t));
  }
  return weights;
}

}  // namespace krd::text
