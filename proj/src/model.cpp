#include "keyreader/model.hpp"

#include <iostream>

#include "keyreader/text/skipgram.hpp"
#include "keyreader/text/vocab.hpp"

namespace krd::model {

std::vector<Parameter*> Bundle::phase2_params() const {
  std::vector<Parameter*> out = reader.all();
  for (Parameter* p : evalmech.all()) {
    if (std::find(out.begin(), out.end(), p) == out.end()) out.push_back(p);
  }
  return out;
}

void Bundle::set_dom_trainable(bool trainable) {
  // The shared special-embedding rows keep training with phase 2.
  for (Parameter* p : dom.all()) {
    if (p != emb.special) p->trainable = trainable;
  }
}

std::unique_ptr<Bundle> build(const RunConfig& config, const text::Dataset& train) {
  config.validate();
  auto bundle = std::make_unique<Bundle>();
  bundle->config = config;

  std::vector<std::vector<std::string>> sequences;
  for (const text::Example& ex : train.examples) {
    sequences.push_back(text::token_texts(ex.passage_tokens));
    sequences.push_back(ex.question_tokens);
    if (!ex.keyword_tokens.empty()) sequences.push_back(ex.keyword_tokens);
  }
  bundle->vocab = text::build_vocabulary(sequences);
  bundle->chars = text::build_char_vocab(sequences);

  Rng emb_rng(mix_seed(config.seed, 101));
  if (!config.embeddings_path.empty()) {
    auto report = text::load_embeddings(config.embeddings_path, bundle->vocab, emb_rng);
    for (const std::string& w : report.warnings) std::cerr << "warning: " << w << "\n";
  } else {
    text::random_embeddings(bundle->vocab, config.word_dim, emb_rng);
  }
  const Index word_dim = bundle->vocab.embeddings.cols();

  // Tag-embedding pretraining over the training sentences as tag sequences.
  text::SkipGramConfig sg;
  sg.window = config.skip_window;
  sg.dim = config.tag_dim;
  sg.epochs = config.skipgram_epochs;
  sg.negatives = config.negatives;
  sg.min_sentence_len = config.min_sentence_len;
  sg.seed = mix_seed(config.seed, 102);
  std::vector<std::vector<int>> pos_sentences, ner_sentences;
  for (const auto& seq : sequences) {
    pos_sentences.push_back(bundle->pos_tagger.tag(seq));
    ner_sentences.push_back(bundle->ner_tagger.tag(seq));
  }
  Mat pos_init = text::train_tag_embeddings(pos_sentences, bundle->pos_tagger.vocab().size(), sg);
  sg.seed = mix_seed(config.seed, 103);
  Mat ner_init = text::train_tag_embeddings(ner_sentences, bundle->ner_tagger.vocab().size(), sg);

  Rng param_rng(mix_seed(config.seed, 104));
  bundle->emb = nn::make_embeddings(bundle->store, bundle->vocab, param_rng);

  bundle->dom_dims = dom::DomDims{.word_dim = word_dim,
                                  .char_dim = config.char_dim,
                                  .char_filters = config.char_filters,
                                  .filter_width = config.filter_width,
                                  .hidden = config.hidden,
                                  .match_hidden = config.match_hidden,
                                  .dropout = config.dropout};
  bundle->dom = dom::make_dom(bundle->store, bundle->emb, bundle->chars.size(), bundle->dom_dims,
                              param_rng);

  bundle->reader_dims = reader::ReaderDims{.word_dim = word_dim,
                                           .char_dim = config.char_dim,
                                           .char_filters = config.char_filters,
                                           .filter_width = config.filter_width,
                                           .hidden = config.hidden,
                                           .tag_dim = config.tag_dim,
                                           .hops = config.hops,
                                           .dropout = config.dropout,
                                           .max_span_len = config.max_span_len};
  bundle->reader = reader::make_reader(bundle->store, bundle->emb, bundle->chars.size(),
                                       bundle->pos_tagger.vocab().size(),
                                       bundle->ner_tagger.vocab().size(), bundle->reader_dims,
                                       param_rng, pos_init, ner_init);

  bundle->evalmech = pipeline::make_eval_mech(bundle->store, bundle->emb, config.hidden,
                                              param_rng);
  return bundle;
}

}  // namespace krd::model
