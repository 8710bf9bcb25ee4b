#pragma once

#include <string>
#include <vector>

#include "keyreader/graph.hpp"
#include "keyreader/optim.hpp"
#include "keyreader/text/vocab.hpp"

namespace krd::nn {

// ---------------------------------------------------------------------------
// LSTM cell. Gates pack along columns as [input | forget | output | cand].
// Parameters are stored pre-transposed (input-dim x 4h) so a row vector
// feeds matmul directly.
// ---------------------------------------------------------------------------

struct LstmCellParams {
  Parameter* w_x = nullptr;  // in x 4h
  Parameter* w_h = nullptr;  // h x 4h
  Parameter* b = nullptr;    // 1 x 4h
  Index hidden = 0;
};

LstmCellParams make_lstm_cell(ParamStore& store, const std::string& prefix, Index input_dim,
                              Index hidden, Rng& rng);

struct LstmState {
  Tensor h;  // 1 x hidden
  Tensor c;  // 1 x hidden
};

LstmState lstm_zero_state(Graph& g, Index hidden);
LstmState lstm_cell_step(Graph& g, const LstmCellParams& p, const Tensor& x_row,
                         const LstmState& prev);

// ---------------------------------------------------------------------------
// Bidirectional LSTM over a sequence matrix (n x d) -> (n x 2h).
// ---------------------------------------------------------------------------

struct BiLstmParams {
  LstmCellParams fwd;
  LstmCellParams bwd;
  Index hidden = 0;  // per direction; output dim is 2h
};

BiLstmParams make_bilstm(ParamStore& store, const std::string& prefix, Index input_dim,
                         Index hidden, Rng& rng);

struct BiLstmOut {
  Tensor outputs;       // n x 2h, row t = [fwd_t ; bwd_t]
  LstmState fwd_final;  // state after reading position n-1
  LstmState bwd_final;  // state after reading position 0
};

// Dropout is applied to the inputs in training mode, then both directions
// read the same dropped sequence from zero states.
BiLstmOut bilstm_full(Graph& g, const BiLstmParams& p, const Tensor& inputs, Scalar dropout_p);
Tensor bilstm(Graph& g, const BiLstmParams& p, const Tensor& inputs, Scalar dropout_p);

// ---------------------------------------------------------------------------
// Character convolution embedding: embed chars, convolve each filter across
// positions, max-pool over positions, add bias, tanh.
// ---------------------------------------------------------------------------

struct CharCnnParams {
  Parameter* char_table = nullptr;  // |C| x char_dim
  Parameter* filters = nullptr;     // (width*char_dim) x n_filters
  Parameter* bias = nullptr;        // 1 x n_filters
  Index width = 5;
  Index n_filters = 100;
};

CharCnnParams make_char_cnn(ParamStore& store, const std::string& prefix, Index char_vocab,
                            Index char_dim, Index width, Index n_filters, Rng& rng);

// char_ids shorter than the filter width are padded with PAD (id 0).
Tensor char_cnn(Graph& g, const CharCnnParams& p, std::vector<int> char_ids);

// Per-token char features for a sequence: n x n_filters.
Tensor char_cnn_rows(Graph& g, const CharCnnParams& p, const text::CharVocab& chars,
                     const std::vector<std::string>& tokens);

// ---------------------------------------------------------------------------
// match(x, y) = v' tanh(W [x; y; x*y]). When x and y widths differ the
// declared projection maps x into y's space first.
// ---------------------------------------------------------------------------

struct MatchParams {
  Parameter* w = nullptr;     // 3d x k
  Parameter* v = nullptr;     // k x 1
  Parameter* proj = nullptr;  // optional: dx x d
};

MatchParams make_match(ParamStore& store, const std::string& prefix, Index dim, Index hidden,
                       Rng& rng, Index project_from = 0);

Tensor match(Graph& g, const MatchParams& p, const Tensor& x, const Tensor& y);
// x (1 x dx) against every row of Y (n x d) -> n x 1 scores.
Tensor match_many(Graph& g, const MatchParams& p, const Tensor& x, const Tensor& Y);

// softmax(scores)-weighted sum of value rows: (1 x k, k x d) -> 1 x d.
Tensor attend(Graph& g, const Tensor& scores, const Tensor& values);

// ---------------------------------------------------------------------------
// Word embeddings: frozen table rows plus a small trainable table for the
// special symbols (PAD/UNK/EOS; row 3 is a zero stand-in for non-specials
// that a mask keeps inert).
// ---------------------------------------------------------------------------

struct Embeddings {
  const text::Vocabulary* vocab = nullptr;
  Parameter* special = nullptr;  // 4 x word_dim
  Index word_dim = 0;
};

Embeddings make_embeddings(ParamStore& store, const text::Vocabulary& vocab, Rng& rng);

// n x word_dim rows for vocab ids (ids >= |V| -- extended-vocab copies --
// embed as UNK).
Tensor embed_words(Graph& g, const Embeddings& e, const std::vector<int>& ids);

}  // namespace krd::nn
