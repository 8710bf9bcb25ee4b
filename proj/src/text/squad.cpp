#include "keyreader/text/squad.hpp"

#include <fstream>
#include <iostream>

#include <json.hpp>

namespace krd::text {

using nlohmann::json;
using nlohmann::ordered_json;

std::string Example::span_text(Index start_token, Index end_token) const {
  const Token& a = passage_tokens.at(static_cast<std::size_t>(start_token));
  const Token& b = passage_tokens.at(static_cast<std::size_t>(end_token));
  return passage_text.substr(a.begin, b.end - a.begin);
}

namespace {

// Minimal token cover of the char range [cs, ce).
std::optional<std::pair<Index, Index>> align_span(const std::vector<Token>& tokens,
                                                  std::size_t cs, std::size_t ce) {
  Index first = -1, last = -1;
  for (Index i = 0; i < static_cast<Index>(tokens.size()); ++i) {
    const Token& t = tokens[static_cast<std::size_t>(i)];
    if (t.end > cs && t.begin < ce) {
      if (first < 0) first = i;
      last = i;
    }
  }
  if (first < 0) return std::nullopt;
  return std::make_pair(first, last);
}

}  // namespace

Dataset read_dataset(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open dataset: " + path);
  json root;
  try {
    is >> root;
  } catch (const json::exception& e) {
    throw ConfigError("dataset parse error in " + path + ": " + e.what());
  }
  Dataset ds;
  if (root.contains("version")) ds.version = root["version"].get<std::string>();
  for (const auto& article : root.at("data")) {
    const std::string title = article.value("title", "");
    for (const auto& para : article.at("paragraphs")) {
      const std::string context = para.at("context").get<std::string>();
      const std::vector<Token> ptoks = tokenize(context);
      for (const auto& qa : para.at("qas")) {
        Example ex;
        ex.id = qa.at("id").is_string() ? qa.at("id").get<std::string>()
                                        : qa.at("id").dump();
        ex.title = title;
        ex.passage_text = context;
        ex.passage_tokens = ptoks;
        ex.question_raw = qa.at("question").get<std::string>();
        if (qa.contains("original_question")) {
          ex.original_question_raw = qa.at("original_question").get<std::string>();
          ex.question_tokens = token_texts(tokenize(*ex.original_question_raw));
          ex.keyword_tokens = token_texts(tokenize(ex.question_raw));
        } else {
          ex.question_tokens = token_texts(tokenize(ex.question_raw));
        }
        bool bad = false;
        for (const auto& ans : qa.at("answers")) {
          AnswerSpan span;
          span.text = ans.at("text").get<std::string>();
          const long long cs = ans.at("answer_start").get<long long>();
          if (cs < 0 || static_cast<std::size_t>(cs) >= context.size()) {
            bad = true;
            break;
          }
          span.char_start = static_cast<std::size_t>(cs);
          auto cover = align_span(ptoks, span.char_start, span.char_start + span.text.size());
          if (!cover) {
            bad = true;
            break;
          }
          span.start_token = cover->first;
          span.end_token = cover->second;
          ex.answers.push_back(std::move(span));
        }
        if (bad || ex.answers.empty()) {
          ++ds.skipped;
          std::cerr << "warning: skipping record '" << ex.id
                    << "' (answer offset outside passage)\n";
          continue;
        }
        ds.examples.push_back(std::move(ex));
      }
    }
  }
  return ds;
}

void write_dataset(const Dataset& dataset, const std::string& path) {
  ordered_json data = ordered_json::array();
  // Consecutive examples sharing (title, passage) collapse into one
  // paragraph, which makes write the inverse of read.
  for (const Example& ex : dataset.examples) {
    const bool new_article = data.empty() || data.back()["title"] != ex.title;
    if (new_article) {
      data.push_back({{"title", ex.title}, {"paragraphs", ordered_json::array()}});
    }
    auto& paragraphs = data.back()["paragraphs"];
    const bool new_para = paragraphs.empty() || paragraphs.back()["context"] != ex.passage_text;
    if (new_para) {
      paragraphs.push_back({{"context", ex.passage_text}, {"qas", ordered_json::array()}});
    }
    ordered_json qa = {{"id", ex.id}, {"question", ex.question_raw}};
    if (ex.original_question_raw) qa["original_question"] = *ex.original_question_raw;
    ordered_json answers = ordered_json::array();
    for (const AnswerSpan& a : ex.answers) {
      answers.push_back({{"text", a.text}, {"answer_start", a.char_start}});
    }
    qa["answers"] = std::move(answers);
    paragraphs.back()["qas"].push_back(std::move(qa));
  }
  ordered_json root = {{"version", dataset.version}, {"data", std::move(data)}};
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw ConfigError("cannot open dataset for writing: " + path);
  os << root.dump(1) << "\n";
}

}  // namespace krd::text
