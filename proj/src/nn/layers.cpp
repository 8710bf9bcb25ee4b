#include "keyreader/nn/layers.hpp"

#include <cmath>

namespace krd::nn {

LstmCellParams make_lstm_cell(ParamStore& store, const std::string& prefix, Index input_dim,
                              Index hidden, Rng& rng) {
  LstmCellParams p;
  p.w_x = &store.create(prefix + ".w_x", input_dim, 4 * hidden, Init::kGlorotUniform, rng);
  p.w_h = &store.create(prefix + ".w_h", hidden, 4 * hidden, Init::kGlorotUniform, rng);
  p.b = &store.create(prefix + ".b", 1, 4 * hidden, Init::kZero, rng);
  p.hidden = hidden;
  return p;
}

LstmState lstm_zero_state(Graph& g, Index hidden) {
  return {g.constant(Mat::Zero(1, hidden)), g.constant(Mat::Zero(1, hidden))};
}

LstmState lstm_cell_step(Graph& g, const LstmCellParams& p, const Tensor& x_row,
                         const LstmState& prev) {
  const Index h = p.hidden;
  Tensor z = add(add(matmul(x_row, g.param(*p.w_x)), matmul(prev.h, g.param(*p.w_h))),
                 g.param(*p.b));
  Tensor gi = sigmoid(cols(z, 0, h));
  Tensor gf = sigmoid(cols(z, h, 2 * h));
  Tensor go = sigmoid(cols(z, 2 * h, 3 * h));
  Tensor gc = tanh(cols(z, 3 * h, 4 * h));
  Tensor c = add(cmul(gf, prev.c), cmul(gi, gc));
  Tensor out = cmul(go, tanh(c));
  return {out, c};
}

BiLstmParams make_bilstm(ParamStore& store, const std::string& prefix, Index input_dim,
                         Index hidden, Rng& rng) {
  BiLstmParams p;
  p.fwd = make_lstm_cell(store, prefix + ".fwd", input_dim, hidden, rng);
  p.bwd = make_lstm_cell(store, prefix + ".bwd", input_dim, hidden, rng);
  p.hidden = hidden;
  return p;
}

BiLstmOut bilstm_full(Graph& g, const BiLstmParams& p, const Tensor& inputs, Scalar dropout_p) {
  if (inputs.rows() < 1) throw ShapeError("bilstm", "empty sequence");
  Tensor x = dropout(inputs, dropout_p);
  const Index n = x.rows();
  std::vector<Tensor> fwd(static_cast<std::size_t>(n)), bwd(static_cast<std::size_t>(n));
  LstmState fs = lstm_zero_state(g, p.hidden);
  for (Index t = 0; t < n; ++t) {
    fs = lstm_cell_step(g, p.fwd, row(x, t), fs);
    fwd[static_cast<std::size_t>(t)] = fs.h;
  }
  LstmState bs = lstm_zero_state(g, p.hidden);
  for (Index t = n - 1; t >= 0; --t) {
    bs = lstm_cell_step(g, p.bwd, row(x, t), bs);
    bwd[static_cast<std::size_t>(t)] = bs.h;
  }
  std::vector<Tensor> rows_cat;
  rows_cat.reserve(static_cast<std::size_t>(n));
  for (Index t = 0; t < n; ++t) {
    rows_cat.push_back(concat({fwd[static_cast<std::size_t>(t)], bwd[static_cast<std::size_t>(t)]}, 1));
  }
  BiLstmOut out;
  out.outputs = concat(std::span<const Tensor>(rows_cat), 0);
  out.fwd_final = fs;
  out.bwd_final = bs;
  return out;
}

Tensor bilstm(Graph& g, const BiLstmParams& p, const Tensor& inputs, Scalar dropout_p) {
  return bilstm_full(g, p, inputs, dropout_p).outputs;
}

CharCnnParams make_char_cnn(ParamStore& store, const std::string& prefix, Index char_vocab,
                            Index char_dim, Index width, Index n_filters, Rng& rng) {
  CharCnnParams p;
  p.char_table = &store.create(prefix + ".chars", char_vocab, char_dim, Init::kGlorotUniform, rng);
  p.filters = &store.create(prefix + ".filters", width * char_dim, n_filters,
                            Init::kGlorotUniform, rng);
  p.bias = &store.create(prefix + ".bias", 1, n_filters, Init::kZero, rng);
  p.width = width;
  p.n_filters = n_filters;
  return p;
}

Tensor char_cnn(Graph& g, const CharCnnParams& p, std::vector<int> char_ids) {
  while (static_cast<Index>(char_ids.size()) < p.width) {
    char_ids.push_back(text::CharVocab::kPad);
  }
  Tensor emb = embedding(g.param(*p.char_table), std::move(char_ids));
  const Index positions = emb.rows() - p.width + 1;
  std::vector<Tensor> windows;
  windows.reserve(static_cast<std::size_t>(positions));
  for (Index pos = 0; pos < positions; ++pos) {
    std::vector<Tensor> span_rows;
    span_rows.reserve(static_cast<std::size_t>(p.width));
    for (Index k = 0; k < p.width; ++k) span_rows.push_back(row(emb, pos + k));
    windows.push_back(concat(std::span<const Tensor>(span_rows), 1));
  }
  Tensor stacked = windows.size() == 1 ? windows[0] : concat(std::span<const Tensor>(windows), 0);
  Tensor conv = matmul(stacked, g.param(*p.filters));  // positions x n_filters
  Tensor pooled = max(conv, 0);                        // 1 x n_filters
  return tanh(add(pooled, g.param(*p.bias)));
}

Tensor char_cnn_rows(Graph& g, const CharCnnParams& p, const text::CharVocab& chars,
                     const std::vector<std::string>& tokens) {
  std::vector<Tensor> rows_cat;
  rows_cat.reserve(tokens.size());
  for (const std::string& tok : tokens) {
    rows_cat.push_back(char_cnn(g, p, chars.encode(tok, static_cast<std::size_t>(p.width))));
  }
  return rows_cat.size() == 1 ? rows_cat[0] : concat(std::span<const Tensor>(rows_cat), 0);
}

MatchParams make_match(ParamStore& store, const std::string& prefix, Index dim, Index hidden,
                       Rng& rng, Index project_from) {
  MatchParams p;
  p.w = &store.create(prefix + ".w", 3 * dim, hidden, Init::kGlorotUniform, rng);
  p.v = &store.create(prefix + ".v", hidden, 1, Init::kGlorotUniform, rng);
  if (project_from > 0) {
    p.proj = &store.create(prefix + ".proj", project_from, dim, Init::kGlorotUniform, rng);
  }
  return p;
}

namespace {

Tensor match_project(Graph& g, const MatchParams& p, const Tensor& x, Index target_dim) {
  if (x.cols() == target_dim) return x;
  if (!p.proj) {
    throw ShapeError("match", "x has width " + std::to_string(x.cols()) + ", y has width " +
                                  std::to_string(target_dim) + " and no projection is declared");
  }
  return matmul(x, g.param(*p.proj));
}

}  // namespace

Tensor match(Graph& g, const MatchParams& p, const Tensor& x, const Tensor& y) {
  Tensor xs = match_project(g, p, x, y.cols());
  Tensor feats = concat({xs, y, cmul(xs, y)}, 1);
  return matmul(tanh(matmul(feats, g.param(*p.w))), g.param(*p.v));
}

Tensor match_many(Graph& g, const MatchParams& p, const Tensor& x, const Tensor& Y) {
  Tensor xs = match_project(g, p, x, Y.cols());
  Tensor tiled = tile(xs, 0, Y.rows());
  Tensor feats = concat({tiled, Y, cmul(tiled, Y)}, 1);
  return matmul(tanh(matmul(feats, g.param(*p.w))), g.param(*p.v));
}

Tensor attend(Graph& g, const Tensor& scores, const Tensor& values) {
  if (scores.rows() != 1 || scores.cols() != values.rows()) {
    throw ShapeError("attend", scores.value(), values.value());
  }
  return matmul(softmax(scores, 1), values);
}

Embeddings make_embeddings(ParamStore& store, const text::Vocabulary& vocab, Rng& rng) {
  Embeddings e;
  e.vocab = &vocab;
  e.word_dim = vocab.embeddings.cols();
  if (e.word_dim == 0) {
    throw ConfigError("vocabulary has no embedding table; load or initialize embeddings first");
  }
  Mat special(4, e.word_dim);
  const Scalar bound = std::sqrt(3.0 / static_cast<Scalar>(e.word_dim));
  for (Index r = 0; r < 3; ++r) {
    for (Index c = 0; c < e.word_dim; ++c) special(r, c) = rng.uniform(-bound, bound);
  }
  special.row(3).setZero();  // inert stand-in row for non-special positions
  e.special = &store.create_from("embeddings.special", std::move(special));
  return e;
}

Tensor embed_words(Graph& g, const Embeddings& e, const std::vector<int>& ids) {
  const int v = e.vocab->size();
  std::vector<int> base_ids, special_ids;
  base_ids.reserve(ids.size());
  special_ids.reserve(ids.size());
  Mat mask(static_cast<Index>(ids.size()), e.word_dim);
  bool any_special = false;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    int id = ids[i];
    if (id >= v) id = text::Vocabulary::kUnk;  // extended-vocab copies
    const bool special = id < 3;
    base_ids.push_back(special ? text::Vocabulary::kPad : id);
    special_ids.push_back(special ? id : 3);
    mask.row(static_cast<Index>(i)).setConstant(special ? 1.0 : 0.0);
    any_special |= special;
  }
  // Frozen rows for specials are zero, so the sum keeps exactly one source
  // per row.
  Tensor base = embedding(g.constant(e.vocab->embeddings), std::move(base_ids));
  if (!any_special) return base;
  Tensor spec = embedding(g.param(*e.special), std::move(special_ids));
  return add(base, cmul(spec, g.constant(std::move(mask))));
}

}  // namespace krd::nn
