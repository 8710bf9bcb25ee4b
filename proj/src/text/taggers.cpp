#include "keyreader/text/taggers.hpp"

#include <cctype>

#include "keyreader/text/tokenize.hpp"
#include "keyreader/types.hpp"

namespace krd::text {

TagVocab::TagVocab(std::vector<std::string> names) : tags(std::move(names)) {
  for (int i = 0; i < static_cast<int>(tags.size()); ++i) ids.emplace(tags[static_cast<std::size_t>(i)], i);
}

int TagVocab::id(const std::string& tag) const {
  auto it = ids.find(tag);
  if (it == ids.end()) throw ConfigError("unknown tag: " + tag);
  return it->second;
}

namespace {

bool is_number(const std::string& s) {
  bool digit = false;
  for (char c : s) {
    if (std::isdigit(static_cast<unsigned char>(c))) {
      digit = true;
    } else if (c != '.' && c != ',' && c != '-' && c != '%') {
      return false;
    }
  }
  return digit;
}

bool ends_with_any(const std::string& s, std::initializer_list<const char*> suffixes,
                   std::size_t min_len) {
  if (s.size() < min_len) return false;
  for (const char* suf : suffixes) {
    if (s.ends_with(suf)) return true;
  }
  return false;
}

}  // namespace

RulePosTagger::RulePosTagger()
    : vocab_({"NOUN", "VERB", "ADJ", "ADV", "NUM", "DET", "PRON", "ADP", "CONJ", "PROPN",
              "PUNCT", "OTHER"}) {
  auto put = [&](std::initializer_list<const char*> words, const char* tag) {
    for (const char* w : words) function_words_.emplace(w, tag);
  };
  put({"the", "a", "an", "this", "that", "these", "those", "which", "what", "whose"}, "DET");
  put({"i", "you", "he", "she", "it", "we", "they", "who", "whom", "them", "him", "her", "us"},
      "PRON");
  put({"in", "on", "at", "of", "to", "from", "by", "with", "for", "into", "near", "over",
       "under", "about"},
      "ADP");
  put({"and", "or", "but", "nor", "so", "yet"}, "CONJ");
  put({"is", "was", "are", "were", "be", "been", "am", "do", "does", "did", "has", "have",
       "had", "will", "would", "can", "could", "may", "might", "shall", "should"},
      "VERB");
}

std::vector<int> RulePosTagger::tag(const std::vector<std::string>& tokens) const {
  std::vector<int> out;
  out.reserve(tokens.size());
  for (const std::string& tok : tokens) {
    std::string low = lowercase(tok);
    const char* tag = "NOUN";
    if (is_punctuation_token(tok)) {
      tag = "PUNCT";
    } else if (is_number(tok)) {
      tag = "NUM";
    } else if (auto it = function_words_.find(low); it != function_words_.end()) {
      tag = it->second.c_str();
    } else if (ends_with_any(low, {"ing", "ed", "ify", "ize", "ise"}, 5)) {
      tag = "VERB";
    } else if (ends_with_any(low, {"ly"}, 4)) {
      tag = "ADV";
    } else if (ends_with_any(low, {"ous", "ful", "ive", "able", "ible", "ic", "al", "est"}, 5)) {
      tag = "ADJ";
    } else if (std::isupper(static_cast<unsigned char>(tok[0]))) {
      tag = "PROPN";
    }
    out.push_back(vocab_.id(tag));
  }
  return out;
}

GazetteerNerTagger::GazetteerNerTagger(std::unordered_set<std::string> persons,
                                       std::unordered_set<std::string> locations,
                                       std::unordered_set<std::string> organizations)
    : vocab_({"O", "PERSON", "LOCATION", "ORGANIZATION"}),
      persons_(std::move(persons)),
      locations_(std::move(locations)),
      organizations_(std::move(organizations)) {
  if (persons_.empty() && locations_.empty() && organizations_.empty()) {
    persons_ = {"Obama", "Tesla", "Newton", "Curie", "Darwin", "Turing", "Lovelace", "Einstein"};
    locations_ = {"Austria", "California", "London", "Paris", "Chicago", "Denver",
                  "Oslo", "Madrid", "Cairo", "Lima"};
    organizations_ = {"NFL", "AAA", "NASA", "UNESCO", "FIFA"};
  }
}

std::vector<int> GazetteerNerTagger::tag(const std::vector<std::string>& tokens) const {
  std::vector<int> out;
  out.reserve(tokens.size());
  for (const std::string& tok : tokens) {
    const char* tag = "O";
    if (persons_.count(tok)) {
      tag = "PERSON";
    } else if (locations_.count(tok)) {
      tag = "LOCATION";
    } else if (organizations_.count(tok)) {
      tag = "ORGANIZATION";
    }
    out.push_back(vocab_.id(tag));
  }
  return out;
}

std::array<bool, 3> exact_match_features(const std::string& passage_token,
                                         const std::vector<std::string>& question_tokens,
                                         const LemmaFn& lemma_fn) {
  const LemmaFn& lem = lemma_fn ? lemma_fn : LemmaFn([](const std::string& s) { return lemma(s); });
  std::array<bool, 3> bits{false, false, false};
  const std::string low = lowercase(passage_token);
  const std::string lm = lem(passage_token);
  for (const std::string& q : question_tokens) {
    if (!bits[0] && q == passage_token) bits[0] = true;
    if (!bits[1] && lowercase(q) == low) bits[1] = true;
    if (!bits[2] && lem(q) == lm) bits[2] = true;
    if (bits[0] && bits[1] && bits[2]) break;
  }
  return bits;
}

}  // namespace krd::text
