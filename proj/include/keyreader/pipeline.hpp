#pragma once

#include <string>
#include <vector>

#include "keyreader/dom.hpp"
#include "keyreader/reader.hpp"

namespace krd::pipeline {

// ---------------------------------------------------------------------------
// Evaluation Mechanism: weights candidate questions by fidelity to the
// keyword query.
// ---------------------------------------------------------------------------

struct EvalMechParams {
  nn::Embeddings emb;
  nn::BiLstmParams lstm;
  Parameter* v_score = nullptr;  // 4*2h x 1

  std::vector<Parameter*> all() const;
};

EvalMechParams make_eval_mech(ParamStore& store, const nn::Embeddings& emb, Index hidden,
                              Rng& rng);

struct QuestionWeights {
  Tensor query_summary;             // h_f: 1 x 2h
  std::vector<Tensor> summaries;    // h_g per candidate
  Tensor scores;                    // I: 1 x k
  Tensor weights;                   // softmax(I): 1 x k, sums to 1
};

QuestionWeights score_questions(Graph& g, const EvalMechParams& p,
                                const std::vector<std::string>& keyword_tokens,
                                const std::vector<std::vector<std::string>>& candidates,
                                Scalar dropout_p = 0.0);

// ---------------------------------------------------------------------------
// Answers.
// ---------------------------------------------------------------------------

struct WeightedAnswer {
  Index start = 0;
  Index end = 0;  // inclusive
  std::string text;
  Scalar per_question_prob = 0.0;  // p(a | P, Q_i), renormalized over the kept set
  Scalar mixture_prob = 0.0;       // p(a | P, F)
};

// Top-k spans by p_start[i]*p_end[j] within max_span_len, probabilities
// renormalized over the kept set. Ties order by earlier start then end.
std::vector<WeightedAnswer> candidate_answers(const Mat& p_start, const Mat& p_end,
                                              Index max_span_len, int top_k);

// mixture(span) = sum_i weight_i * p(span | P, Q_i); spans missing from a
// candidate's list contribute zero. Result ranks by descending mixture
// probability, ties toward the earlier start then end.
std::vector<WeightedAnswer> answer_mixture(
    const std::vector<std::vector<WeightedAnswer>>& per_question,
    const std::vector<Scalar>& weights);

// ---------------------------------------------------------------------------
// End-to-end objective: J = -log sum_i p(a*|P,Q_i) p(Q_i|P,F).
// ---------------------------------------------------------------------------

struct E2eForward {
  QuestionWeights weights;
  std::vector<reader::SpanDistribution> spans;  // per candidate
  Tensor loss;
};

E2eForward end_to_end_loss(Graph& g, const reader::ReaderContext& reader_ctx,
                           const EvalMechParams& eval_params,
                           const std::vector<std::string>& passage_tokens,
                           const std::vector<std::string>& keyword_tokens,
                           const std::vector<std::vector<std::string>>& candidates,
                           Index gold_start, Index gold_end);

// ---------------------------------------------------------------------------
// Metrics (SQuAD conventions): normalization lowercases, strips punctuation
// and articles, and collapses whitespace.
// ---------------------------------------------------------------------------

std::string normalize_answer(const std::string& text);
int em_metric(const std::string& prediction, const std::vector<std::string>& golds);
Scalar f1_metric(const std::string& prediction, const std::vector<std::string>& golds);

}  // namespace krd::pipeline
