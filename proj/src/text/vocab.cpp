#include "keyreader/text/vocab.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace krd::text {

int Vocabulary::add(const std::string& token) {
  auto it = token_to_id.find(token);
  if (it != token_to_id.end()) return it->second;
  int id = size();
  id_to_token.push_back(token);
  token_to_id.emplace(token, id);
  return id;
}

int Vocabulary::id_or_unk(const std::string& token) const {
  auto it = token_to_id.find(token);
  return it == token_to_id.end() ? kUnk : it->second;
}

std::vector<int> Vocabulary::ids(const std::vector<std::string>& tokens) const {
  std::vector<int> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(id_or_unk(t));
  return out;
}

Vocabulary build_vocabulary(const std::vector<std::vector<std::string>>& sequences) {
  Vocabulary v;
  for (const auto& seq : sequences) {
    for (const auto& tok : seq) v.add(tok);
  }
  return v;
}

std::vector<int> CharVocab::encode(const std::string& token, std::size_t min_len) const {
  std::vector<int> out;
  out.reserve(std::max(token.size(), min_len));
  for (unsigned char c : token) out.push_back(id_or_unk(c));
  while (out.size() < min_len) out.push_back(kPad);
  return out;
}

CharVocab build_char_vocab(const std::vector<std::vector<std::string>>& sequences) {
  CharVocab cv;
  for (const auto& seq : sequences) {
    for (const auto& tok : seq) {
      for (unsigned char c : tok) {
        if (!cv.char_to_id.count(c)) {
          cv.char_to_id.emplace(c, cv.size());
          cv.id_to_char.push_back(c);
        }
      }
    }
  }
  return cv;
}

namespace {

void fill_random_row(Mat& table, Index row, Rng& rng) {
  const Scalar bound = std::sqrt(3.0 / static_cast<Scalar>(table.cols()));
  for (Index c = 0; c < table.cols(); ++c) table(row, c) = rng.uniform(-bound, bound);
}

bool is_special(int id) { return id < 3; }

}  // namespace

EmbeddingLoadReport load_embeddings(const std::string& path, Vocabulary& vocab, Rng& rng) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open embeddings file: " + path);
  EmbeddingLoadReport report;
  std::string line;
  std::size_t line_no = 0;
  std::vector<char> filled(static_cast<std::size_t>(vocab.size()), 0);
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string token;
    ss >> token;
    std::vector<Scalar> values;
    Scalar v;
    while (ss >> v) values.push_back(v);
    if (report.dim == 0) {
      if (values.empty()) {
        throw ConfigError("embeddings parse error at line " + std::to_string(line_no) +
                          ": no values");
      }
      report.dim = static_cast<Index>(values.size());
      vocab.embeddings = Mat::Zero(vocab.size(), report.dim);
    }
    if (static_cast<Index>(values.size()) != report.dim) {
      throw ConfigError("embeddings parse error at line " + std::to_string(line_no) +
                        ": expected " + std::to_string(report.dim) + " values, got " +
                        std::to_string(values.size()));
    }
    auto it = vocab.token_to_id.find(token);
    if (it == vocab.token_to_id.end()) continue;
    if (filled[static_cast<std::size_t>(it->second)]) {
      report.warnings.push_back("duplicate embedding for token '" + token +
                                "' at line " + std::to_string(line_no) + "; first kept");
      continue;
    }
    for (Index c = 0; c < report.dim; ++c) vocab.embeddings(it->second, c) = values[static_cast<std::size_t>(c)];
    filled[static_cast<std::size_t>(it->second)] = 1;
    ++report.found;
  }
  if (report.dim == 0) throw ConfigError("embeddings file is empty: " + path);
  for (int id = 0; id < vocab.size(); ++id) {
    if (filled[static_cast<std::size_t>(id)] || is_special(id)) continue;
    fill_random_row(vocab.embeddings, id, rng);
    ++report.missing;
  }
  return report;
}

void random_embeddings(Vocabulary& vocab, Index dim, Rng& rng) {
  vocab.embeddings = Mat::Zero(vocab.size(), dim);
  for (int id = 3; id < vocab.size(); ++id) fill_random_row(vocab.embeddings, id, rng);
}

}  // namespace krd::text
