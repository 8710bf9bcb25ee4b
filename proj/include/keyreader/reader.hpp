#pragma once

#include <array>
#include <string>
#include <vector>

#include "keyreader/nn/layers.hpp"
#include "keyreader/text/taggers.hpp"

namespace krd::reader {

struct HopParams {
  Parameter* v_align = nullptr;  // 3*2h x 1
  Parameter* w_fuse = nullptr;   // 4*2h x fusion dim
  nn::BiLstmParams lstm;         // fusion dim -> 2h
};

struct ReaderParams {
  nn::Embeddings emb;
  nn::CharCnnParams char_cnn;
  Parameter* pos_table = nullptr;  // |T_pos| x tag_dim
  Parameter* ner_table = nullptr;  // |T_ner| x tag_dim
  nn::BiLstmParams enc_passage;
  nn::BiLstmParams enc_question;
  std::vector<HopParams> hops;    // fresh parameters per hop
  nn::BiLstmParams end_lstm;      // O -> O'
  Parameter* v_start = nullptr;   // 3*2h x 1
  Parameter* v_end = nullptr;     // 3*2h x 1

  std::vector<Parameter*> all() const;
};

struct ReaderDims {
  Index word_dim = 0;
  Index char_dim = 16;
  Index char_filters = 100;
  Index filter_width = 5;
  Index hidden = 100;
  Index tag_dim = 20;
  int hops = 2;
  Scalar dropout = 0.2;
  Index max_span_len = 15;

  Index token_dim() const { return word_dim + char_filters + 2 * tag_dim + 3; }
};

// Tag tables are created from pretrained skip-gram embeddings when given
// (empty matrices fall back to random init) and keep training afterwards.
ReaderParams make_reader(ParamStore& store, const nn::Embeddings& emb, Index char_vocab,
                         Index pos_tags, Index ner_tags, const ReaderDims& dims, Rng& rng,
                         const Mat& pos_init = {}, const Mat& ner_init = {});

struct ReaderContext {
  const ReaderParams* params = nullptr;
  const text::CharVocab* chars = nullptr;
  const text::Tagger* pos_tagger = nullptr;
  const text::Tagger* ner_tagger = nullptr;
  ReaderDims dims;
};

struct ReaderEncoding {
  Tensor passage_states;   // C: n x 2h
  Tensor question_states;  // G: l x 2h
  Tensor passage_inputs;   // [w; c; s] rows actually fed to the BiLSTM
  Tensor question_inputs;
};

// Per-token input is [word; char-cnn; pos; ner; 3 match bits]; question
// tokens carry zero match bits.
ReaderEncoding encode(Graph& g, const ReaderContext& ctx,
                      const std::vector<std::string>& passage_tokens,
                      const std::vector<std::string>& question_tokens);

struct HopState {
  Tensor alignment;    // A: n x l
  Tensor row_max;      // e: n x 1
  Tensor query_focus;  // d: 1 x n, sums to 1
  Tensor summary;      // m1: 1 x 2h
  Tensor summary_tiled;  // M1: n x 2h, identical rows
  Tensor row_softmax;  // D: n x l, rows sum to 1
  Tensor aligned;      // M2: n x 2h
  Tensor fused;        // M: n x fusion dim
  Tensor output;       // C~: n x 2h
};

HopState interaction_hop(Graph& g, const ReaderContext& ctx, const HopParams& hop,
                         const Tensor& passage, const Tensor& question);

// Runs `hops` interaction layers (fresh parameters each) and returns O.
Tensor memory_forward(Graph& g, const ReaderContext& ctx, const ReaderEncoding& enc, int hops);

struct SpanDistribution {
  Tensor p_start;  // 1 x n
  Tensor p_end;    // 1 x n
  Tensor memory;      // O
  Tensor memory_end;  // O' = BiLSTM(O)
};

SpanDistribution predict_spans(Graph& g, const ReaderContext& ctx, const Tensor& passage_states,
                               const Tensor& memory);

struct Span {
  Index start = 0;
  Index end = 0;  // inclusive
  Scalar log_prob = 0.0;
};

// Maximizes p_start[i]*p_end[j] over i <= j < i + max_span_len; ties break
// toward the smaller i, then the smaller j.
Span best_span(const Mat& p_start, const Mat& p_end, Index max_span_len);
Span best_span(const SpanDistribution& dist, Index max_span_len);

// -log p_start[s*] - log p_end[e*] for the first gold span.
Tensor span_loss(Graph& g, const SpanDistribution& dist, Index gold_start, Index gold_end);

// Convenience: encode + memory + spans for one (passage, question) pair.
SpanDistribution forward(Graph& g, const ReaderContext& ctx,
                         const std::vector<std::string>& passage_tokens,
                         const std::vector<std::string>& question_tokens);

}  // namespace krd::reader
