#pragma once

#include <memory>

#include "keyreader/config.hpp"
#include "keyreader/dom.hpp"
#include "keyreader/pipeline.hpp"
#include "keyreader/reader.hpp"
#include "keyreader/text/squad.hpp"

namespace krd::model {

// Everything a run needs: vocabularies, taggers and the three parameter
// groups. Deterministic given (config, train data). Not movable -- component
// contexts point into the bundle.
struct Bundle {
  RunConfig config;
  ParamStore store;
  text::Vocabulary vocab;
  text::CharVocab chars;
  text::RulePosTagger pos_tagger;
  text::GazetteerNerTagger ner_tagger;
  nn::Embeddings emb;
  dom::DomParams dom;
  dom::DomDims dom_dims;
  reader::ReaderParams reader;
  reader::ReaderDims reader_dims;
  pipeline::EvalMechParams evalmech;

  Bundle() = default;
  Bundle(const Bundle&) = delete;
  Bundle& operator=(const Bundle&) = delete;

  dom::DomContext dom_ctx() const {
    return {&dom, &chars, dom_dims};
  }
  reader::ReaderContext reader_ctx() const {
    return {&reader, &chars, &pos_tagger, &ner_tagger, reader_dims};
  }

  std::vector<Parameter*> dom_params() const { return dom.all(); }
  std::vector<Parameter*> phase2_params() const;  // reader + eval mechanism
  void set_dom_trainable(bool trainable);
};

// Vocabulary and char inventory come from the training data in
// first-occurrence order; word embeddings load from config.embeddings_path
// (or a seeded random table); tag tables pretrain with skip-gram over the
// training sentences rewritten as tags.
std::unique_ptr<Bundle> build(const RunConfig& config, const text::Dataset& train);

}  // namespace krd::model
