#pragma once

#include <array>
#include <functional>
#include <memory>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace krd::text {

// Closed tag inventory.
struct TagVocab {
  std::vector<std::string> tags;
  std::unordered_map<std::string, int> ids;

  explicit TagVocab(std::vector<std::string> names);
  int id(const std::string& tag) const;
  int size() const { return static_cast<int>(tags.size()); }
};

// Pluggable taggers: one tag id per token.
class Tagger {
 public:
  virtual ~Tagger() = default;
  virtual std::vector<int> tag(const std::vector<std::string>& tokens) const = 0;
  virtual const TagVocab& vocab() const = 0;
};

// Deterministic rule tagger: punctuation/number checks, a small function-word
// dictionary, suffix heuristics, capitalization for proper nouns.
class RulePosTagger : public Tagger {
 public:
  RulePosTagger();
  std::vector<int> tag(const std::vector<std::string>& tokens) const override;
  const TagVocab& vocab() const override { return vocab_; }

 private:
  TagVocab vocab_;
  std::unordered_map<std::string, std::string> function_words_;
};

// Gazetteer lookup; tokens outside every gazetteer get "O".
class GazetteerNerTagger : public Tagger {
 public:
  // Empty sets fall back to a small built-in gazetteer.
  GazetteerNerTagger(std::unordered_set<std::string> persons = {},
                     std::unordered_set<std::string> locations = {},
                     std::unordered_set<std::string> organizations = {});
  std::vector<int> tag(const std::vector<std::string>& tokens) const override;
  const TagVocab& vocab() const override { return vocab_; }

 private:
  TagVocab vocab_;
  std::unordered_set<std::string> persons_, locations_, organizations_;
};

using LemmaFn = std::function<std::string(const std::string&)>;

// Bit k set iff transform k of the passage token equals the same transform
// of any question token: (original, lowercase, lemma).
std::array<bool, 3> exact_match_features(const std::string& passage_token,
                                         const std::vector<std::string>& question_tokens,
                                         const LemmaFn& lemma_fn = {});

}  // namespace krd::text
