#include "keyreader/reader.hpp"

#include <cmath>

namespace krd::reader {

std::vector<Parameter*> ReaderParams::all() const {
  std::vector<Parameter*> out = {emb.special,       char_cnn.char_table, char_cnn.filters,
                                 char_cnn.bias,     pos_table,           ner_table,
                                 enc_passage.fwd.w_x, enc_passage.fwd.w_h, enc_passage.fwd.b,
                                 enc_passage.bwd.w_x, enc_passage.bwd.w_h, enc_passage.bwd.b,
                                 enc_question.fwd.w_x, enc_question.fwd.w_h, enc_question.fwd.b,
                                 enc_question.bwd.w_x, enc_question.bwd.w_h, enc_question.bwd.b,
                                 end_lstm.fwd.w_x,  end_lstm.fwd.w_h,    end_lstm.fwd.b,
                                 end_lstm.bwd.w_x,  end_lstm.bwd.w_h,    end_lstm.bwd.b,
                                 v_start,           v_end};
  for (const HopParams& h : hops) {
    out.insert(out.end(), {h.v_align, h.w_fuse, h.lstm.fwd.w_x, h.lstm.fwd.w_h, h.lstm.fwd.b,
                           h.lstm.bwd.w_x, h.lstm.bwd.w_h, h.lstm.bwd.b});
  }
  std::erase(out, nullptr);
  return out;
}

ReaderParams make_reader(ParamStore& store, const nn::Embeddings& emb, Index char_vocab,
                         Index pos_tags, Index ner_tags, const ReaderDims& dims, Rng& rng,
                         const Mat& pos_init, const Mat& ner_init) {
  ReaderParams p;
  p.emb = emb;
  const Index enc = 2 * dims.hidden;
  p.char_cnn = nn::make_char_cnn(store, "reader.char_cnn", char_vocab, dims.char_dim,
                                 dims.filter_width, dims.char_filters, rng);
  auto tag_table = [&](const std::string& name, Index count, const Mat& init) -> Parameter* {
    if (init.size() > 0) {
      if (init.rows() != count || init.cols() != dims.tag_dim) {
        throw ConfigError("pretrained tag table " + name + " has shape " + shape_str(init) +
                          ", expected " + shape_str(count, dims.tag_dim));
      }
      return &store.create_from(name, init);
    }
    return &store.create(name, count, dims.tag_dim, Init::kGlorotUniform, rng);
  };
  p.pos_table = tag_table("reader.pos_table", pos_tags, pos_init);
  p.ner_table = tag_table("reader.ner_table", ner_tags, ner_init);
  p.enc_passage = nn::make_bilstm(store, "reader.enc_passage", dims.token_dim(), dims.hidden, rng);
  p.enc_question = nn::make_bilstm(store, "reader.enc_question", dims.token_dim(), dims.hidden, rng);
  for (int k = 0; k < dims.hops; ++k) {
    HopParams hop;
    const std::string prefix = "reader.hop" + std::to_string(k);
    hop.v_align = &store.create(prefix + ".v_align", 3 * enc, 1, Init::kGlorotUniform, rng);
    hop.w_fuse = &store.create(prefix + ".w_fuse", 4 * enc, enc, Init::kGlorotUniform, rng);
    hop.lstm = nn::make_bilstm(store, prefix + ".lstm", enc, dims.hidden, rng);
    p.hops.push_back(hop);
  }
  p.end_lstm = nn::make_bilstm(store, "reader.end_lstm", enc, dims.hidden, rng);
  p.v_start = &store.create("reader.v_start", 3 * enc, 1, Init::kGlorotUniform, rng);
  p.v_end = &store.create("reader.v_end", 3 * enc, 1, Init::kGlorotUniform, rng);
  return p;
}

namespace {

Tensor encode_side(Graph& g, const ReaderContext& ctx, const std::vector<std::string>& tokens,
                   const std::vector<std::string>& match_against, bool zero_match_bits) {
  const ReaderParams& p = *ctx.params;
  Tensor words = nn::embed_words(g, p.emb, p.emb.vocab->ids(tokens));
  Tensor chars = nn::char_cnn_rows(g, p.char_cnn, *ctx.chars, tokens);
  Tensor pos = embedding(g.param(*p.pos_table), ctx.pos_tagger->tag(tokens));
  Tensor ner = embedding(g.param(*p.ner_table), ctx.ner_tagger->tag(tokens));
  Mat bits = Mat::Zero(static_cast<Index>(tokens.size()), 3);
  if (!zero_match_bits) {
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      const auto b = text::exact_match_features(tokens[i], match_against);
      for (int k = 0; k < 3; ++k) bits(static_cast<Index>(i), k) = b[static_cast<std::size_t>(k)] ? 1.0 : 0.0;
    }
  }
  return concat({words, chars, pos, ner, g.constant(std::move(bits))}, 1);
}

}  // namespace

ReaderEncoding encode(Graph& g, const ReaderContext& ctx,
                      const std::vector<std::string>& passage_tokens,
                      const std::vector<std::string>& question_tokens) {
  if (passage_tokens.empty() || question_tokens.empty()) {
    throw ShapeError("reader.encode", "passage and question must be non-empty");
  }
  const ReaderParams& p = *ctx.params;
  ReaderEncoding enc;
  enc.passage_inputs = encode_side(g, ctx, passage_tokens, question_tokens, false);
  enc.question_inputs = encode_side(g, ctx, question_tokens, {}, true);
  enc.passage_states = nn::bilstm(g, p.enc_passage, enc.passage_inputs, ctx.dims.dropout);
  enc.question_states = nn::bilstm(g, p.enc_question, enc.question_inputs, ctx.dims.dropout);
  return enc;
}

HopState interaction_hop(Graph& g, const ReaderContext& ctx, const HopParams& hop,
                         const Tensor& passage, const Tensor& question) {
  const Index n = passage.rows();
  HopState state;

  // A_ij = v' [C_i; G_j; C_i * G_j], built row by row.
  std::vector<Tensor> align_rows;
  align_rows.reserve(static_cast<std::size_t>(n));
  Tensor v_align = g.param(*hop.v_align);
  for (Index i = 0; i < n; ++i) {
    Tensor ci = tile(row(passage, i), 0, question.rows());
    Tensor feats = concat({ci, question, cmul(ci, question)}, 1);
    align_rows.push_back(to_row(matmul(feats, v_align)));
  }
  state.alignment = align_rows.size() == 1 ? align_rows[0]
                                           : concat(std::span<const Tensor>(align_rows), 0);

  // First orientation: most representative passage positions.
  state.row_max = max(state.alignment, 1);
  state.query_focus = softmax(to_row(state.row_max), 1);
  state.summary = matmul(state.query_focus, passage);  // m1 = sum_i d_i C_i
  state.summary_tiled = tile(state.summary, 0, n);

  // Second orientation: per-passage-token question summaries.
  state.row_softmax = softmax(state.alignment, 1);
  state.aligned = matmul(state.row_softmax, question);  // M2 = D G

  Tensor parts = concat({cmul(state.summary_tiled, passage), cmul(state.aligned, passage),
                         sub(state.aligned, passage), passage},
                        1);
  state.fused = matmul(parts, g.param(*hop.w_fuse));
  state.output = nn::bilstm(g, hop.lstm, state.fused, ctx.dims.dropout);
  return state;
}

Tensor memory_forward(Graph& g, const ReaderContext& ctx, const ReaderEncoding& enc, int hops) {
  if (hops < 1) throw ShapeError("memory_forward", "hops must be >= 1");
  if (hops > static_cast<int>(ctx.params->hops.size())) {
    throw ShapeError("memory_forward", "model has " + std::to_string(ctx.params->hops.size()) +
                                           " hop parameter sets, requested " +
                                           std::to_string(hops));
  }
  Tensor current = enc.passage_states;
  for (int k = 0; k < hops; ++k) {
    current = interaction_hop(g, ctx, ctx.params->hops[static_cast<std::size_t>(k)], current,
                              enc.question_states)
                  .output;
  }
  return current;
}

SpanDistribution predict_spans(Graph& g, const ReaderContext& ctx, const Tensor& passage_states,
                               const Tensor& memory) {
  const ReaderParams& p = *ctx.params;
  SpanDistribution dist;
  dist.memory = memory;
  dist.memory_end = nn::bilstm(g, p.end_lstm, memory, ctx.dims.dropout);
  Tensor start_feats = concat({passage_states, memory, sub(passage_states, memory)}, 1);
  dist.p_start = softmax(to_row(matmul(start_feats, g.param(*p.v_start))), 1);
  Tensor end_feats =
      concat({passage_states, dist.memory_end, sub(passage_states, dist.memory_end)}, 1);
  dist.p_end = softmax(to_row(matmul(end_feats, g.param(*p.v_end))), 1);
  return dist;
}

Span best_span(const Mat& p_start, const Mat& p_end, Index max_span_len) {
  if (max_span_len < 1) throw ShapeError("best_span", "max_span_len must be >= 1");
  const Index n = p_start.cols();
  Span best;
  Scalar best_prob = -1.0;
  for (Index i = 0; i < n; ++i) {
    for (Index j = i; j < std::min(n, i + max_span_len); ++j) {
      const Scalar prob = p_start(0, i) * p_end(0, j);
      if (prob > best_prob) {  // strict: ties keep the earlier (i, j)
        best_prob = prob;
        best.start = i;
        best.end = j;
      }
    }
  }
  best.log_prob = std::log(p_start(0, best.start)) + std::log(p_end(0, best.end));
  return best;
}

Span best_span(const SpanDistribution& dist, Index max_span_len) {
  return best_span(dist.p_start.value(), dist.p_end.value(), max_span_len);
}

Tensor span_loss(Graph& g, const SpanDistribution& dist, Index gold_start, Index gold_end) {
  if (gold_start < 0 || gold_end < gold_start || gold_end >= dist.p_start.cols()) {
    throw ShapeError("span_loss", "gold span out of range");
  }
  (void)g;
  Tensor lp = log(slice(dist.p_start, 0, 1, gold_start, gold_start + 1));
  Tensor le = log(slice(dist.p_end, 0, 1, gold_end, gold_end + 1));
  return neg(add(lp, le));
}

SpanDistribution forward(Graph& g, const ReaderContext& ctx,
                         const std::vector<std::string>& passage_tokens,
                         const std::vector<std::string>& question_tokens) {
  ReaderEncoding enc = encode(g, ctx, passage_tokens, question_tokens);
  Tensor memory = memory_forward(g, ctx, enc, ctx.dims.hops);
  return predict_spans(g, ctx, enc.passage_states, memory);
}

}  // namespace krd::reader
