#include "keyreader/dom.hpp"

#include <algorithm>
#include <cmath>

namespace krd::dom {

ExtendedVocab ExtendedVocab::build(const text::Vocabulary& vocab,
                                   const std::vector<std::string>& source_tokens) {
  ExtendedVocab ext;
  ext.base = &vocab;
  ext.source_ext_ids.reserve(source_tokens.size());
  for (const std::string& tok : source_tokens) {
    if (vocab.contains(tok)) {
      ext.source_ext_ids.push_back(vocab.token_to_id.at(tok));
      continue;
    }
    auto it = ext.oov_ids.find(tok);
    int id;
    if (it == ext.oov_ids.end()) {
      id = vocab.size() + static_cast<int>(ext.oov_tokens.size());
      ext.oov_ids.emplace(tok, id);
      ext.oov_tokens.push_back(tok);
    } else {
      id = it->second;
    }
    ext.source_ext_ids.push_back(id);
  }
  return ext;
}

int ExtendedVocab::ext_id(const std::string& token) const {
  if (base->contains(token)) return base->token_to_id.at(token);
  auto it = oov_ids.find(token);
  return it == oov_ids.end() ? text::Vocabulary::kUnk : it->second;
}

std::string ExtendedVocab::token_text(int id) const {
  if (id < base->size()) return base->token(id);
  return oov_tokens.at(static_cast<std::size_t>(id - base->size()));
}

std::vector<Parameter*> DomParams::all() const {
  std::vector<Parameter*> out = {
      emb.special,     char_cnn.char_table, char_cnn.filters, char_cnn.bias,
      enc_query.fwd.w_x,  enc_query.fwd.w_h,  enc_query.fwd.b,
      enc_query.bwd.w_x,  enc_query.bwd.w_h,  enc_query.bwd.b,
      enc_passage.fwd.w_x, enc_passage.fwd.w_h, enc_passage.fwd.b,
      enc_passage.bwd.w_x, enc_passage.bwd.w_h, enc_passage.bwd.b,
      match_qp.w,      match_qp.v,
      w_g,
      enc_fused.fwd.w_x, enc_fused.fwd.w_h, enc_fused.fwd.b,
      enc_fused.bwd.w_x, enc_fused.bwd.w_h, enc_fused.bwd.b,
      dec_cell.w_x,    dec_cell.w_h,        dec_cell.b,
      match_dec.w,     match_dec.v,         match_dec.proj,
      w_init_h,        b_init_h,            w_init_c,         b_init_c,
      w_out,           b_out,               w_copy,           v_copy};
  std::erase(out, nullptr);
  return out;
}

DomParams make_dom(ParamStore& store, const nn::Embeddings& emb, Index char_vocab,
                   const DomDims& dims, Rng& rng) {
  DomParams p;
  p.emb = emb;
  const Index token_dim = dims.word_dim + dims.char_filters;
  const Index enc = 2 * dims.hidden;
  p.char_cnn = nn::make_char_cnn(store, "dom.char_cnn", char_vocab, dims.char_dim,
                                 dims.filter_width, dims.char_filters, rng);
  p.enc_query = nn::make_bilstm(store, "dom.enc_query", token_dim, dims.hidden, rng);
  p.enc_passage = nn::make_bilstm(store, "dom.enc_passage", token_dim, dims.hidden, rng);
  p.match_qp = nn::make_match(store, "dom.match_qp", enc, dims.match_hidden, rng);
  p.w_g = &store.create("dom.w_g", 2 * enc, enc, Init::kGlorotUniform, rng);
  p.enc_fused = nn::make_bilstm(store, "dom.enc_fused", enc, dims.hidden, rng);
  p.dec_cell = nn::make_lstm_cell(store, "dom.dec_cell", dims.word_dim + enc, dims.hidden, rng);
  p.match_dec = nn::make_match(store, "dom.match_dec", enc, dims.match_hidden, rng,
                               /*project_from=*/dims.hidden);
  p.w_init_h = &store.create("dom.w_init_h", enc, dims.hidden, Init::kGlorotUniform, rng);
  p.b_init_h = &store.create("dom.b_init_h", 1, dims.hidden, Init::kZero, rng);
  p.w_init_c = &store.create("dom.w_init_c", enc, dims.hidden, Init::kGlorotUniform, rng);
  p.b_init_c = &store.create("dom.b_init_c", 1, dims.hidden, Init::kZero, rng);
  const int vocab_size = emb.vocab->size();
  p.w_out = &store.create("dom.w_out", dims.hidden + dims.word_dim + enc, vocab_size,
                          Init::kGlorotUniform, rng);
  p.b_out = &store.create("dom.b_out", 1, vocab_size, Init::kZero, rng);
  p.w_copy = &store.create("dom.w_copy", enc + dims.hidden, dims.match_hidden,
                           Init::kGlorotUniform, rng);
  p.v_copy = &store.create("dom.v_copy", dims.match_hidden, 1, Init::kGlorotUniform, rng);
  return p;
}

namespace {

Tensor embed_sequence(Graph& g, const DomContext& ctx, const std::vector<std::string>& tokens) {
  const DomParams& p = *ctx.params;
  Tensor words = nn::embed_words(g, p.emb, p.emb.vocab->ids(tokens));
  Tensor chars = nn::char_cnn_rows(g, p.char_cnn, *ctx.chars, tokens);
  return concat({words, chars}, 1);
}

}  // namespace

DomEncoding encode(Graph& g, const DomContext& ctx, const std::vector<std::string>& query_tokens,
                   const std::vector<std::string>& passage_tokens) {
  if (query_tokens.empty() || passage_tokens.empty()) {
    throw ShapeError("dom.encode", "query and passage must be non-empty");
  }
  const DomParams& p = *ctx.params;
  DomEncoding enc;
  enc.query_states = nn::bilstm(g, p.enc_query, embed_sequence(g, ctx, query_tokens), ctx.dims.dropout);
  enc.passage_states =
      nn::bilstm(g, p.enc_passage, embed_sequence(g, ctx, passage_tokens), ctx.dims.dropout);

  // s: row i = softmax over j of match(F_i, P_j).
  const Index m = enc.query_states.rows();
  std::vector<Tensor> score_rows;
  score_rows.reserve(static_cast<std::size_t>(m));
  for (Index i = 0; i < m; ++i) {
    Tensor scores = nn::match_many(g, p.match_qp, row(enc.query_states, i), enc.passage_states);
    score_rows.push_back(to_row(scores));
  }
  Tensor raw = score_rows.size() == 1 ? score_rows[0]
                                      : concat(std::span<const Tensor>(score_rows), 0);
  enc.attention = softmax(raw, 1);
  enc.attended = matmul(enc.attention, enc.passage_states);  // a_i = sum_j s_i^j P_j
  enc.fused = matmul(concat({enc.query_states, cmul(enc.query_states, enc.attended)}, 1),
                     g.param(*p.w_g));
  enc.states = nn::bilstm(g, p.enc_fused, enc.fused, ctx.dims.dropout);
  return enc;
}

nn::LstmState decoder_init_state(Graph& g, const DomContext& ctx, const DomEncoding& enc) {
  const DomParams& p = *ctx.params;
  Tensor pooled = mean_rows(enc.states);
  return {tanh(add(matmul(pooled, g.param(*p.w_init_h)), g.param(*p.b_init_h))),
          tanh(add(matmul(pooled, g.param(*p.w_init_c)), g.param(*p.b_init_c)))};
}

DecoderStep decode_step(Graph& g, const DomContext& ctx, int prev_token,
                        const nn::LstmState& prev_state, const DomEncoding& enc,
                        const ExtendedVocab& ext, const Tensor* agg) {
  const DomParams& p = *ctx.params;
  const Index m = enc.states.rows();

  DecoderStep step;
  step.alpha = softmax(to_row(nn::match_many(g, p.match_dec, prev_state.h, enc.states)), 1);
  step.context = matmul(step.alpha, enc.states);

  Tensor prev_emb = nn::embed_words(g, p.emb, {prev_token});
  Tensor x = dropout(concat({prev_emb, step.context}, 1), ctx.dims.dropout);
  step.state = nn::lstm_cell_step(g, p.dec_cell, x, prev_state);

  Tensor gen_scores = add(
      matmul(concat({step.state.h, prev_emb, step.context}, 1), g.param(*p.w_out)),
      g.param(*p.b_out));

  // Copy score per source position: v' tanh(W [h_i; s_t]).
  Tensor copy_feats = concat({enc.states, tile(step.state.h, 0, m)}, 1);
  Tensor phi = matmul(tanh(matmul(copy_feats, g.param(*p.w_copy))), g.param(*p.v_copy));
  Tensor joint = softmax(concat({gen_scores, to_row(phi)}, 1), 1);

  Tensor collapse = agg ? *agg : copy_aggregator(g, ext, m);
  step.dist = matmul(joint, collapse);
  return step;
}

Tensor copy_aggregator(Graph& g, const ExtendedVocab& ext, Index m) {
  // Collapses the joint [generate | copy-slot] distribution onto the
  // extended vocabulary; mass for repeated source tokens pools on one entry.
  const int v = ext.base->size();
  Mat agg = Mat::Zero(v + m, ext.size());
  for (int j = 0; j < v; ++j) agg(j, j) = 1.0;
  for (Index i = 0; i < m; ++i) {
    agg(v + i, ext.source_ext_ids[static_cast<std::size_t>(i)]) = 1.0;
  }
  return g.constant(std::move(agg));
}

namespace {

struct Hypothesis {
  std::vector<int> tokens;  // emitted extended ids, EOS excluded
  Scalar log_prob = 0.0;
  nn::LstmState state;
};

Scalar normalized(Scalar log_prob, std::size_t emitted, bool finished) {
  // Emitted count includes the EOS step for finished hypotheses.
  const std::size_t len = emitted + (finished ? 1 : 0);
  return log_prob / static_cast<Scalar>(std::max<std::size_t>(len, 1));
}

}  // namespace

std::vector<CandidateQuestion> beam_search(Graph& g, const DomContext& ctx,
                                           const DomEncoding& enc, const ExtendedVocab& ext,
                                           const BeamConfig& beam, bool* warned) {
  if (beam.beam_k < beam.out_count) {
    throw ShapeError("beam_search", "beam_k must be >= out_count");
  }
  if (beam.max_len < 1) throw ShapeError("beam_search", "max_len must be >= 1");
  if (warned) *warned = false;

  Tensor agg = copy_aggregator(g, ext, enc.states.rows());
  std::vector<Hypothesis> live;
  live.push_back({{}, 0.0, decoder_init_state(g, ctx, enc)});

  struct Finished {
    std::vector<int> tokens;
    Scalar log_prob;
    Scalar norm;
    bool truncated;
  };
  std::vector<Finished> finished;
  auto offer_finished = [&](std::vector<int> tokens, Scalar lp, bool truncated) {
    Scalar norm = normalized(lp, tokens.size(), !truncated);
    for (Finished& f : finished) {
      if (f.tokens == tokens) {
        if (norm > f.norm) {
          f.log_prob = lp;
          f.norm = norm;
          f.truncated = truncated;
        }
        return;
      }
    }
    finished.push_back({std::move(tokens), lp, norm, truncated});
  };

  for (int t = 0; t < beam.max_len && !live.empty(); ++t) {
    struct Expansion {
      std::size_t hyp;
      int token;
      Scalar log_prob;
    };
    std::vector<Expansion> expansions;
    std::vector<DecoderStep> steps(live.size());
    for (std::size_t hi = 0; hi < live.size(); ++hi) {
      const Hypothesis& h = live[hi];
      const int prev = h.tokens.empty() ? text::Vocabulary::kEos : h.tokens.back();
      steps[hi] = decode_step(g, ctx, prev, h.state, enc, ext, &agg);
      const Mat& dist = steps[hi].dist.value();
      for (Index tok = 0; tok < dist.cols(); ++tok) {
        const Scalar prob = dist(0, tok);
        if (prob <= 0.0) continue;
        if (tok == text::Vocabulary::kEos && h.tokens.empty()) continue;  // no empty questions
        expansions.push_back({hi, static_cast<int>(tok), h.log_prob + std::log(prob)});
      }
    }
    std::stable_sort(expansions.begin(), expansions.end(),
                     [](const Expansion& a, const Expansion& b) { return a.log_prob > b.log_prob; });
    if (static_cast<int>(expansions.size()) > beam.beam_k) {
      expansions.resize(static_cast<std::size_t>(beam.beam_k));
    }
    std::vector<Hypothesis> next;
    for (const Expansion& e : expansions) {
      const Hypothesis& h = live[e.hyp];
      if (e.token == text::Vocabulary::kEos) {
        offer_finished(h.tokens, e.log_prob, /*truncated=*/false);
        continue;
      }
      Hypothesis nh;
      nh.tokens = h.tokens;
      nh.tokens.push_back(e.token);
      nh.log_prob = e.log_prob;
      nh.state = steps[e.hyp].state;
      next.push_back(std::move(nh));
    }
    live = std::move(next);
  }

  if (finished.empty()) {
    if (warned) *warned = true;
    for (const Hypothesis& h : live) {
      offer_finished(h.tokens, h.log_prob, /*truncated=*/true);
    }
  }

  std::stable_sort(finished.begin(), finished.end(), [](const Finished& a, const Finished& b) {
    if (a.norm != b.norm) return a.norm > b.norm;
    return a.tokens < b.tokens;
  });
  std::vector<CandidateQuestion> out;
  for (const Finished& f : finished) {
    if (static_cast<int>(out.size()) >= beam.out_count) break;
    CandidateQuestion c;
    for (int id : f.tokens) c.tokens.push_back(ext.token_text(id));
    c.log_score = f.log_prob;
    c.normalized_score = f.norm;
    c.truncated = f.truncated;
    out.push_back(std::move(c));
  }
  return out;
}

Tensor teacher_forced_loss(Graph& g, const DomContext& ctx, const DomEncoding& enc,
                           const ExtendedVocab& ext, const std::vector<std::string>& gold_tokens,
                           int* correct, int* total) {
  if (gold_tokens.empty()) {
    throw ShapeError("dom.loss", "empty gold question");
  }
  std::vector<int> gold_ids;
  gold_ids.reserve(gold_tokens.size() + 1);
  for (const std::string& tok : gold_tokens) gold_ids.push_back(ext.ext_id(tok));
  gold_ids.push_back(text::Vocabulary::kEos);

  Tensor agg = copy_aggregator(g, ext, enc.states.rows());
  nn::LstmState state = decoder_init_state(g, ctx, enc);
  int prev = text::Vocabulary::kEos;
  std::vector<Tensor> step_logs;
  step_logs.reserve(gold_ids.size());
  for (int gold : gold_ids) {
    DecoderStep step = decode_step(g, ctx, prev, state, enc, ext, &agg);
    if (correct && total) {
      Index argmax = 0;
      step.dist.value().row(0).maxCoeff(&argmax);
      if (static_cast<int>(argmax) == gold) ++*correct;
      ++*total;
    }
    step_logs.push_back(log(slice(step.dist, 0, 1, gold, gold + 1)));
    state = step.state;
    prev = gold;
  }
  Tensor total_log = step_logs.size() == 1 ? step_logs[0]
                                           : sum(concat(std::span<const Tensor>(step_logs), 1));
  return neg(total_log);
}

}  // namespace krd::dom
