#include "keyreader/gradsuite.hpp"

#include <iostream>

#include "keyreader/dom.hpp"
#include "keyreader/pipeline.hpp"
#include "keyreader/reader.hpp"

namespace krd::gradcheck {

namespace {

// Self-contained toy world: tiny vocabulary, tiny dims, seeded parameters.
struct ToyWorld {
  text::Vocabulary vocab;
  text::CharVocab chars;
  text::RulePosTagger pos_tagger;
  text::GazetteerNerTagger ner_tagger;
  ParamStore store;
  nn::Embeddings emb;
  dom::DomParams dom;
  dom::DomDims dom_dims;
  reader::ReaderParams reader;
  reader::ReaderDims reader_dims;
  pipeline::EvalMechParams evalmech;

  std::vector<std::string> passage{"anna", "found", "the", "lamp", "near", "door", "."};
  std::vector<std::string> query{"found", "lamp"};
  std::vector<std::string> question{"who", "found", "the", "lamp", "?"};

  ToyWorld() {
    std::vector<std::vector<std::string>> seqs{passage, question, query};
    vocab = text::build_vocabulary(seqs);
    chars = text::build_char_vocab(seqs);
    Rng rng(99);
    text::random_embeddings(vocab, 6, rng);
    emb = nn::make_embeddings(store, vocab, rng);
    dom_dims = dom::DomDims{.word_dim = 6,
                            .char_dim = 3,
                            .char_filters = 5,
                            .filter_width = 3,
                            .hidden = 4,
                            .match_hidden = 4,
                            .dropout = 0.0};
    dom = dom::make_dom(store, emb, chars.size(), dom_dims, rng);
    reader_dims = reader::ReaderDims{.word_dim = 6,
                                     .char_dim = 3,
                                     .char_filters = 5,
                                     .filter_width = 3,
                                     .hidden = 4,
                                     .tag_dim = 3,
                                     .hops = 2,
                                     .dropout = 0.0,
                                     .max_span_len = 5};
    reader = reader::make_reader(store, emb, chars.size(), pos_tagger.vocab().size(),
                                 ner_tagger.vocab().size(), reader_dims, rng);
    evalmech = pipeline::make_eval_mech(store, emb, 4, rng);
  }

  dom::DomContext dom_ctx() const { return {&dom, &chars, dom_dims}; }
  reader::ReaderContext reader_ctx() const {
    return {&reader, &chars, &pos_tagger, &ner_tagger, reader_dims};
  }
};

// Deterministic weights turn a non-scalar output into a scalar probe; a
// plain sum could hide sign-cancelling gradient errors.
Tensor weighted_sum(Graph& g, const Tensor& x, std::uint64_t salt) {
  Rng rng(salt);
  Mat w(x.rows(), x.cols());
  for (Index r = 0; r < w.rows(); ++r) {
    for (Index c = 0; c < w.cols(); ++c) w(r, c) = rng.uniform(-1.0, 1.0);
  }
  return sum(cmul(x, g.constant(std::move(w))));
}

}  // namespace

std::vector<SuiteEntry> run_suite(std::ostream& out, Scalar tolerance) {
  std::vector<SuiteEntry> entries;
  ToyWorld world;
  auto add_check = [&](const std::string& name, const std::vector<Parameter*>& params,
                 const std::function<Tensor(Graph&)>& build) {
    SuiteEntry e;
    e.name = name;
    e.report = check(params, build, 1e-4, 6);
    entries.push_back(e);
    out << "gradcheck " << name << ": max_rel_err=" << e.report.max_rel_err << " over "
        << e.report.entries_checked << " entries "
        << (e.report.ok(tolerance) ? "PASS" : ("FAIL at " + e.report.worst)) << "\n";
  };

  // Composite expression over the closed op set.
  {
    ParamStore ops_store;
    Rng rng(5);
    Parameter& a = ops_store.create("a", 3, 4, Init::kGlorotUniform, rng);
    Parameter& b = ops_store.create("b", 3, 4, Init::kGlorotUniform, rng);
    Parameter& w = ops_store.create("w", 4, 3, Init::kGlorotUniform, rng);
    Parameter& table = ops_store.create("table", 5, 4, Init::kGlorotUniform, rng);
    add_check("composite_ops", {&a, &b, &w, &table}, [&](Graph& g) {
      Tensor ta = g.param(a), tb = g.param(b);
      Tensor mix = add(cmul(tanh(ta), sigmoid(tb)), scale(sub(ta, tb), 0.5));
      Tensor prod = matmul(mix, g.param(w));                  // 3x3
      Tensor cat = concat({prod, exp(scale(prod, 0.1))}, 1);  // 3x6
      Tensor sm = softmax(cat, 1);
      Tensor looked = embedding(g.param(table), {0, 2, 2, 4});  // duplicate rows
      Tensor pooled = max(looked, 0);                           // 1x4
      Tensor tiled = tile(pooled, 0, 3);
      Tensor mixed = cmul(tiled, slice(cat, 0, 3, 0, 4));
      Tensor safe = log(add(sm, g.constant(Mat::Constant(3, 6, 0.05))));
      return add(weighted_sum(g, mixed, 11), weighted_sum(g, safe, 12));
    });
  }

  // char_cnn
  add_check("layer_char_cnn",
      {world.dom.char_cnn.char_table, world.dom.char_cnn.filters, world.dom.char_cnn.bias},
      [&](Graph& g) {
        Tensor v = nn::char_cnn(g, world.dom.char_cnn, world.chars.encode("lamp", 3));
        return weighted_sum(g, v, 21);
      });

  // bilstm
  {
    const auto& p = world.dom.enc_query;
    add_check("layer_bilstm",
        {p.fwd.w_x, p.fwd.w_h, p.fwd.b, p.bwd.w_x, p.bwd.w_h, p.bwd.b}, [&](Graph& g) {
          Rng rng(31);
          Mat x(3, world.dom_dims.word_dim + world.dom_dims.char_filters);
          for (Index r = 0; r < x.rows(); ++r) {
            for (Index c = 0; c < x.cols(); ++c) x(r, c) = rng.uniform(-1.0, 1.0);
          }
          Tensor seq = g.leaf(std::move(x), false);
          return weighted_sum(g, nn::bilstm(g, p, seq, 0.0), 22);
        });
  }

  // match (with projection) and attend
  add_check("layer_match_attend", {world.dom.match_dec.w, world.dom.match_dec.v, world.dom.match_dec.proj},
      [&](Graph& g) {
        Rng rng(41);
        Mat x(1, world.dom_dims.hidden), values(3, 2 * world.dom_dims.hidden);
        for (Index c = 0; c < x.cols(); ++c) x(0, c) = rng.uniform(-1.0, 1.0);
        for (Index r = 0; r < values.rows(); ++r) {
          for (Index c = 0; c < values.cols(); ++c) values(r, c) = rng.uniform(-1.0, 1.0);
        }
        Tensor tx = g.leaf(std::move(x), false);
        Tensor tv = g.leaf(std::move(values), false);
        Tensor scores = to_row(nn::match_many(g, world.dom.match_dec, tx, tv));
        return weighted_sum(g, nn::attend(g, scores, tv), 23);
      });

  // dom loss (teacher forced, includes encoder, decoder, copy path)
  add_check("dom_loss", world.dom.all(), [&](Graph& g) {
    auto ctx = world.dom_ctx();
    auto ext = dom::ExtendedVocab::build(world.vocab, world.query);
    auto enc = dom::encode(g, ctx, world.query, world.passage);
    return dom::teacher_forced_loss(g, ctx, enc, ext, world.question);
  });

  // reader loss
  add_check("reader_loss", world.reader.all(), [&](Graph& g) {
    auto ctx = world.reader_ctx();
    auto dist = reader::forward(g, ctx, world.passage, world.question);
    return reader::span_loss(g, dist, 3, 3);
  });

  // end-to-end loss (reader + evaluation mechanism)
  {
    std::vector<Parameter*> params = world.reader.all();
    for (Parameter* p : world.evalmech.all()) {
      if (std::find(params.begin(), params.end(), p) == params.end()) params.push_back(p);
    }
    add_check("end_to_end_loss", params, [&](Graph& g) {
      std::vector<std::vector<std::string>> candidates{world.question,
                                                       {"what", "did", "anna", "find", "?"}};
      auto fwd = pipeline::end_to_end_loss(g, world.reader_ctx(), world.evalmech, world.passage,
                                           world.query, candidates, 3, 3);
      return fwd.loss;
    });
  }

  return entries;
}

bool suite_passed(const std::vector<SuiteEntry>& entries, Scalar tolerance) {
  if (entries.empty()) return false;
  for (const auto& e : entries) {
    if (!e.report.ok(tolerance)) return false;
  }
  return true;
}

}  // namespace krd::gradcheck
