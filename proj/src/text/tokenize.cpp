#include "keyreader/text/tokenize.hpp"

#include <cctype>

namespace krd::text {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_punct(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }

}  // namespace

std::vector<Token> tokenize(std::string_view source) {
  std::vector<Token> out;
  std::size_t i = 0;
  const std::size_t n = source.size();
  while (i < n) {
    while (i < n && is_space(source[i])) ++i;
    if (i >= n) break;
    std::size_t j = i;
    while (j < n && !is_space(source[j])) ++j;
    // [i, j) is one whitespace-delimited chunk.
    std::size_t lo = i, hi = j;
    while (lo < hi && is_punct(source[lo])) {
      out.push_back({std::string(1, source[lo]), lo, lo + 1});
      ++lo;
    }
    std::size_t tail = hi;
    while (tail > lo && is_punct(source[tail - 1])) --tail;
    if (lo < tail) {
      out.push_back({std::string(source.substr(lo, tail - lo)), lo, tail});
    }
    for (std::size_t k = tail; k < hi; ++k) {
      out.push_back({std::string(1, source[k]), k, k + 1});
    }
    i = j;
  }
  return out;
}

std::vector<std::string> token_texts(const std::vector<Token>& tokens) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const Token& t : tokens) out.push_back(t.text);
  return out;
}

bool is_punctuation_token(std::string_view token) {
  if (token.empty()) return false;
  for (char c : token) {
    if (!is_punct(c)) return false;
  }
  return true;
}

std::string lowercase(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

namespace {

bool double_consonant_tail(const std::string& s) {
  if (s.size() < 2) return false;
  char a = s[s.size() - 2], b = s[s.size() - 1];
  if (a != b) return false;
  return std::isalpha(static_cast<unsigned char>(a)) && a != 'a' && a != 'e' && a != 'i' &&
         a != 'o' && a != 'u';
}

}  // namespace

std::string lemma(std::string_view token) {
  std::string s = lowercase(token);
  auto strip = [&](std::string_view suffix, std::size_t min_stem) {
    if (s.size() >= suffix.size() + min_stem && s.ends_with(suffix)) {
      s.resize(s.size() - suffix.size());
      if (double_consonant_tail(s)) s.pop_back();
      return true;
    }
    return false;
  };
  if (strip("ing", 3)) return s;
  if (strip("ed", 3)) return s;
  if (s.ends_with("ss")) return s;  // glass, press
  if (strip("es", 3)) return s;
  strip("s", 3);
  return s;
}

std::string join(const std::vector<std::string>& tokens, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += sep;
    out += tokens[i];
  }
  return out;
}

}  // namespace krd::text
