#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "keyreader/types.hpp"

namespace krd::text {

// Token <-> id maps with PAD/UNK/EOS specials and the frozen word-embedding
// table. Special-symbol vectors that train live in the model's ParamStore,
// not here.
struct Vocabulary {
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kEos = 2;
  static constexpr const char* kPadText = "<pad>";
  static constexpr const char* kUnkText = "<unk>";
  static constexpr const char* kEosText = "<eos>";

  std::vector<std::string> id_to_token{kPadText, kUnkText, kEosText};
  std::unordered_map<std::string, int> token_to_id{
      {kPadText, kPad}, {kUnkText, kUnk}, {kEosText, kEos}};
  Mat embeddings;  // |V| x d, rows aligned with ids

  int add(const std::string& token);
  int id_or_unk(const std::string& token) const;
  bool contains(const std::string& token) const { return token_to_id.count(token) > 0; }
  const std::string& token(int id) const { return id_to_token.at(static_cast<std::size_t>(id)); }
  int size() const { return static_cast<int>(id_to_token.size()); }

  std::vector<int> ids(const std::vector<std::string>& tokens) const;
};

// First-occurrence-order vocabulary over token sequences.
Vocabulary build_vocabulary(const std::vector<std::vector<std::string>>& sequences);

// Character vocabulary for the char-CNN (PAD=0, UNK=1, then bytes seen in
// training tokens, in first-occurrence order).
struct CharVocab {
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  std::vector<unsigned char> id_to_char{0, 1};
  std::unordered_map<unsigned char, int> char_to_id;

  int id_or_unk(unsigned char c) const {
    auto it = char_to_id.find(c);
    return it == char_to_id.end() ? kUnk : it->second;
  }
  int size() const { return static_cast<int>(id_to_char.size()); }
  // Char ids of a token padded with PAD to at least min_len.
  std::vector<int> encode(const std::string& token, std::size_t min_len) const;
};

CharVocab build_char_vocab(const std::vector<std::vector<std::string>>& sequences);

struct EmbeddingLoadReport {
  Index dim = 0;
  int found = 0;
  int missing = 0;  // vocab tokens absent from the file (randomly initialized)
  std::vector<std::string> warnings;
};

// GloVe-format text file: "token v1 v2 ... vd" per line. Dimension comes
// from the first line and is enforced afterwards (parse error reports the
// offending line number). Vocab tokens missing from the file get seeded
// uniform rows; duplicate file tokens keep the first occurrence. Specials
// get zero rows (their trainable vectors live elsewhere).
EmbeddingLoadReport load_embeddings(const std::string& path, Vocabulary& vocab, Rng& rng);

// Seeded random table for runs without a pretrained file.
void random_embeddings(Vocabulary& vocab, Index dim, Rng& rng);

}  // namespace krd::text
