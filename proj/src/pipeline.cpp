#include "keyreader/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <sstream>

namespace krd::pipeline {

std::vector<Parameter*> EvalMechParams::all() const {
  std::vector<Parameter*> out = {emb.special, lstm.fwd.w_x, lstm.fwd.w_h, lstm.fwd.b,
                                 lstm.bwd.w_x, lstm.bwd.w_h, lstm.bwd.b, v_score};
  std::erase(out, nullptr);
  return out;
}

EvalMechParams make_eval_mech(ParamStore& store, const nn::Embeddings& emb, Index hidden,
                              Rng& rng) {
  EvalMechParams p;
  p.emb = emb;
  p.lstm = nn::make_bilstm(store, "evalmech.lstm", emb.word_dim, hidden, rng);
  p.v_score = &store.create("evalmech.v_score", 4 * 2 * hidden, 1, Init::kGlorotUniform, rng);
  return p;
}

namespace {

// Sequence summary: concatenated final hidden states of both directions.
Tensor summarize(Graph& g, const EvalMechParams& p, const std::vector<std::string>& tokens,
                 Scalar dropout_p) {
  Tensor emb = nn::embed_words(g, p.emb, p.emb.vocab->ids(tokens));
  nn::BiLstmOut out = nn::bilstm_full(g, p.lstm, emb, dropout_p);
  return concat({out.fwd_final.h, out.bwd_final.h}, 1);
}

}  // namespace

QuestionWeights score_questions(Graph& g, const EvalMechParams& p,
                                const std::vector<std::string>& keyword_tokens,
                                const std::vector<std::vector<std::string>>& candidates,
                                Scalar dropout_p) {
  if (candidates.empty()) throw ShapeError("score_questions", "no candidates");
  QuestionWeights qw;
  qw.query_summary = summarize(g, p, keyword_tokens, dropout_p);
  std::vector<Tensor> scores;
  scores.reserve(candidates.size());
  Tensor v = g.param(*p.v_score);
  for (const auto& cand : candidates) {
    Tensor hg = summarize(g, p, cand, dropout_p);
    qw.summaries.push_back(hg);
    Tensor feats = concat(
        {qw.query_summary, hg, cmul(qw.query_summary, hg), sub(qw.query_summary, hg)}, 1);
    scores.push_back(matmul(feats, v));
  }
  qw.scores = scores.size() == 1 ? scores[0] : concat(std::span<const Tensor>(scores), 1);
  qw.weights = softmax(qw.scores, 1);
  return qw;
}

std::vector<WeightedAnswer> candidate_answers(const Mat& p_start, const Mat& p_end,
                                              Index max_span_len, int top_k) {
  if (top_k < 1) throw ShapeError("candidate_answers", "top_k must be >= 1");
  const Index n = p_start.cols();
  std::vector<WeightedAnswer> spans;
  for (Index i = 0; i < n; ++i) {
    for (Index j = i; j < std::min(n, i + max_span_len); ++j) {
      WeightedAnswer a;
      a.start = i;
      a.end = j;
      a.per_question_prob = p_start(0, i) * p_end(0, j);
      spans.push_back(a);
    }
  }
  std::stable_sort(spans.begin(), spans.end(), [](const WeightedAnswer& a, const WeightedAnswer& b) {
    return a.per_question_prob > b.per_question_prob;  // stable: ties keep (start, end) order
  });
  if (static_cast<int>(spans.size()) > top_k) spans.resize(static_cast<std::size_t>(top_k));
  Scalar total = 0.0;
  for (const auto& a : spans) total += a.per_question_prob;
  if (total > 0.0) {
    for (auto& a : spans) a.per_question_prob /= total;
  } else {
    for (auto& a : spans) a.per_question_prob = 1.0 / static_cast<Scalar>(spans.size());
  }
  return spans;
}

std::vector<WeightedAnswer> answer_mixture(
    const std::vector<std::vector<WeightedAnswer>>& per_question,
    const std::vector<Scalar>& weights) {
  if (per_question.empty()) throw ShapeError("answer_mixture", "no candidates");
  if (per_question.size() != weights.size()) {
    throw ShapeError("answer_mixture", "answers and weights disagree in length");
  }
  std::map<std::pair<Index, Index>, WeightedAnswer> by_span;
  for (std::size_t q = 0; q < per_question.size(); ++q) {
    for (const WeightedAnswer& a : per_question[q]) {
      auto key = std::make_pair(a.start, a.end);
      auto it = by_span.find(key);
      if (it == by_span.end()) {
        WeightedAnswer merged = a;
        merged.mixture_prob = weights[q] * a.per_question_prob;
        by_span.emplace(key, merged);
      } else {
        it->second.mixture_prob += weights[q] * a.per_question_prob;
      }
    }
  }
  std::vector<WeightedAnswer> ranked;
  ranked.reserve(by_span.size());
  for (auto& [key, a] : by_span) ranked.push_back(a);
  // by_span iterates in (start, end) order, so the stable sort breaks
  // mixture ties toward the earlier start then end.
  std::stable_sort(ranked.begin(), ranked.end(), [](const WeightedAnswer& a, const WeightedAnswer& b) {
    return a.mixture_prob > b.mixture_prob;
  });
  return ranked;
}

E2eForward end_to_end_loss(Graph& g, const reader::ReaderContext& reader_ctx,
                           const EvalMechParams& eval_params,
                           const std::vector<std::string>& passage_tokens,
                           const std::vector<std::string>& keyword_tokens,
                           const std::vector<std::vector<std::string>>& candidates,
                           Index gold_start, Index gold_end) {
  if (gold_start < 0 || gold_end < gold_start ||
      gold_end >= static_cast<Index>(passage_tokens.size())) {
    throw ShapeError("end_to_end_loss", "gold span outside passage");
  }
  E2eForward fwd;
  fwd.weights = score_questions(g, eval_params, keyword_tokens, candidates,
                                reader_ctx.dims.dropout);
  std::vector<Tensor> gold_probs;
  gold_probs.reserve(candidates.size());
  for (const auto& cand : candidates) {
    reader::SpanDistribution dist = reader::forward(g, reader_ctx, passage_tokens, cand);
    gold_probs.push_back(cmul(slice(dist.p_start, 0, 1, gold_start, gold_start + 1),
                              slice(dist.p_end, 0, 1, gold_end, gold_end + 1)));
    fwd.spans.push_back(std::move(dist));
  }
  Tensor probs_row = gold_probs.size() == 1 ? gold_probs[0]
                                            : concat(std::span<const Tensor>(gold_probs), 1);
  fwd.loss = neg(log(sum(cmul(fwd.weights.weights, probs_row))));
  return fwd;
}

// --- metrics ---

std::string normalize_answer(const std::string& text) {
  std::string lowered;
  lowered.reserve(text.size());
  for (char c : text) {
    if (std::ispunct(static_cast<unsigned char>(c))) continue;
    lowered.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  std::istringstream ss(lowered);
  std::string word, out;
  while (ss >> word) {
    if (word == "a" || word == "an" || word == "the") continue;
    if (!out.empty()) out += ' ';
    out += word;
  }
  return out;
}

namespace {

std::vector<std::string> normalized_tokens(const std::string& text) {
  std::istringstream ss(normalize_answer(text));
  std::vector<std::string> toks;
  std::string w;
  while (ss >> w) toks.push_back(w);
  return toks;
}

Scalar token_bag_f1(const std::vector<std::string>& pred, const std::vector<std::string>& gold) {
  if (pred.empty() || gold.empty()) return pred == gold ? 1.0 : 0.0;
  std::map<std::string, int> counts;
  for (const auto& t : gold) ++counts[t];
  int overlap = 0;
  for (const auto& t : pred) {
    auto it = counts.find(t);
    if (it != counts.end() && it->second > 0) {
      --it->second;
      ++overlap;
    }
  }
  if (overlap == 0) return 0.0;
  const Scalar precision = static_cast<Scalar>(overlap) / static_cast<Scalar>(pred.size());
  const Scalar recall = static_cast<Scalar>(overlap) / static_cast<Scalar>(gold.size());
  return 2.0 * precision * recall / (precision + recall);
}

}  // namespace

int em_metric(const std::string& prediction, const std::vector<std::string>& golds) {
  const std::string norm = normalize_answer(prediction);
  for (const auto& g : golds) {
    if (normalize_answer(g) == norm) return 1;
  }
  return 0;
}

Scalar f1_metric(const std::string& prediction, const std::vector<std::string>& golds) {
  const auto pred = normalized_tokens(prediction);
  Scalar best = 0.0;
  for (const auto& g : golds) {
    best = std::max(best, token_bag_f1(pred, normalized_tokens(g)));
  }
  return best;
}

}  // namespace krd::pipeline
