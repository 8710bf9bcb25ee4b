#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "keyreader/nn/layers.hpp"

namespace krd::dom {

// Extended output vocabulary: the generation vocabulary plus one entry per
// distinct out-of-vocabulary source token, so the copy path can emit tokens
// the generator cannot.
struct ExtendedVocab {
  const text::Vocabulary* base = nullptr;
  std::vector<std::string> oov_tokens;
  std::unordered_map<std::string, int> oov_ids;   // token -> |V| + k
  std::vector<int> source_ext_ids;                // per source position

  static ExtendedVocab build(const text::Vocabulary& vocab,
                             const std::vector<std::string>& source_tokens);
  int size() const { return base->size() + static_cast<int>(oov_tokens.size()); }
  // Vocab id, else extended id, else UNK.
  int ext_id(const std::string& token) const;
  std::string token_text(int ext_id) const;
};

struct DomParams {
  nn::Embeddings emb;
  nn::CharCnnParams char_cnn;
  nn::BiLstmParams enc_query;    // F_i = BiLSTM([w; c])
  nn::BiLstmParams enc_passage;  // P_j = BiLSTM([w; c])
  nn::MatchParams match_qp;      // match(F_i, P_j)
  Parameter* w_g = nullptr;      // [F; F*a] -> fused input g
  nn::BiLstmParams enc_fused;    // h_i = BiLSTM(g_i)
  nn::LstmCellParams dec_cell;   // input [emb(prev); c_t]
  nn::MatchParams match_dec;     // match(s_{t-1}, h_i), projected
  Parameter* w_init_h = nullptr;  // mean(h) -> initial decoder state
  Parameter* b_init_h = nullptr;
  Parameter* w_init_c = nullptr;
  Parameter* b_init_c = nullptr;
  Parameter* w_out = nullptr;  // [s_t; emb(prev); c_t] -> generation scores
  Parameter* b_out = nullptr;
  Parameter* w_copy = nullptr;  // [h_i; s_t] -> copy feature
  Parameter* v_copy = nullptr;

  std::vector<Parameter*> all() const;
};

struct DomDims {
  Index word_dim = 0;
  Index char_dim = 16;
  Index char_filters = 100;
  Index filter_width = 5;
  Index hidden = 100;
  Index match_hidden = 100;
  Scalar dropout = 0.2;
};

DomParams make_dom(ParamStore& store, const nn::Embeddings& emb, Index char_vocab,
                   const DomDims& dims, Rng& rng);

// Encoder outputs (query length m, passage length n, encoder width 2h).
struct DomEncoding {
  Tensor query_states;    // F: m x 2h
  Tensor passage_states;  // P: n x 2h
  Tensor attention;       // s: m x n, rows sum to 1
  Tensor attended;        // a: m x 2h
  Tensor fused;           // g: m x 2h
  Tensor states;          // h: m x 2h
};

struct DomContext {
  const DomParams* params = nullptr;
  const text::CharVocab* chars = nullptr;
  DomDims dims;
};

DomEncoding encode(Graph& g, const DomContext& ctx, const std::vector<std::string>& query_tokens,
                   const std::vector<std::string>& passage_tokens);

struct DecoderStep {
  nn::LstmState state;  // s_t
  Tensor context;       // c_t: 1 x 2h
  Tensor alpha;         // 1 x m attention over h
  Tensor dist;          // 1 x |V_ext|, sums to 1
};

nn::LstmState decoder_init_state(Graph& g, const DomContext& ctx, const DomEncoding& enc);

// Constant 0/1 matrix mapping [generate | copy-slot] positions onto the
// extended vocabulary; reusable across the decode steps of one example.
Tensor copy_aggregator(Graph& g, const ExtendedVocab& ext, Index source_len);

// One decoding step. prev_token is an extended-vocab id (OOV copies embed
// as UNK); decoding starts from EOS. Pass a cached aggregator to avoid
// rebuilding it per step.
DecoderStep decode_step(Graph& g, const DomContext& ctx, int prev_token,
                        const nn::LstmState& prev_state, const DomEncoding& enc,
                        const ExtendedVocab& ext, const Tensor* agg = nullptr);

struct CandidateQuestion {
  std::vector<std::string> tokens;  // EOS stripped
  Scalar log_score = 0.0;           // sum of per-step log probabilities
  Scalar normalized_score = 0.0;    // log_score / emitted token count (EOS included)
  bool truncated = false;           // hit max_len without EOS
};

struct BeamConfig {
  int beam_k = 12;
  int max_len = 20;
  int out_count = 6;
};

// Standard beam search on summed log probabilities; finished hypotheses are
// ranked by length-normalized score and deduplicated by token sequence. If
// nothing finishes, returns max-len-truncated beams and sets *warned.
std::vector<CandidateQuestion> beam_search(Graph& g, const DomContext& ctx,
                                           const DomEncoding& enc, const ExtendedVocab& ext,
                                           const BeamConfig& beam, bool* warned = nullptr);

// Teacher-forced negative log likelihood of the gold question (EOS
// appended). Optionally reports greedy per-step token accuracy.
Tensor teacher_forced_loss(Graph& g, const DomContext& ctx, const DomEncoding& enc,
                           const ExtendedVocab& ext, const std::vector<std::string>& gold_tokens,
                           int* correct = nullptr, int* total = nullptr);

}  // namespace krd::dom
