#include "keyreader/train.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "keyreader/checkpoint.hpp"

namespace krd::train {

namespace {

namespace fs = std::filesystem;

std::string ckpt_path(const TrainOptions& opt, const std::string& which) {
  return (fs::path(opt.out_dir) / (opt.tag + "-" + which + ".krd")).string();
}

void meta_put_u64(std::map<std::string, Scalar>& meta, const std::string& key, std::uint64_t v) {
  meta[key + ".hi"] = static_cast<Scalar>(v >> 32);
  meta[key + ".lo"] = static_cast<Scalar>(v & 0xffffffffULL);
}

std::uint64_t meta_get_u64(const std::map<std::string, Scalar>& meta, const std::string& key) {
  auto hi = meta.find(key + ".hi");
  auto lo = meta.find(key + ".lo");
  if (hi == meta.end() || lo == meta.end()) return 0;
  return (static_cast<std::uint64_t>(hi->second) << 32) | static_cast<std::uint64_t>(lo->second);
}

struct Progress {
  int start_epoch = 0;
  Scalar best_metric = -1.0;
  int best_epoch = -1;
};

Progress maybe_resume(model::Bundle& bundle, const TrainOptions& opt) {
  Progress p;
  if (opt.resume_checkpoint.empty()) return p;
  auto meta = checkpoint::load_model(opt.resume_checkpoint, bundle.store);
  const std::uint64_t hash = meta_get_u64(meta, "config_hash");
  if (hash != 0 && hash != bundle.config.hash()) {
    throw ConfigError("resume checkpoint was produced with a different config");
  }
  p.start_epoch = static_cast<int>(meta.at("epoch")) + 1;
  if (auto it = meta.find("best_metric"); it != meta.end()) p.best_metric = it->second;
  if (auto it = meta.find("best_epoch"); it != meta.end()) p.best_epoch = static_cast<int>(it->second);
  return p;
}

void save_epoch(model::Bundle& bundle, const TrainOptions& opt, int epoch, Scalar best_metric,
                int best_epoch, bool is_best, TrainResult& result) {
  std::map<std::string, Scalar> meta;
  meta["epoch"] = static_cast<Scalar>(epoch);
  meta["best_metric"] = best_metric;
  meta["best_epoch"] = static_cast<Scalar>(best_epoch);
  meta_put_u64(meta, "config_hash", bundle.config.hash());
  meta_put_u64(meta, "seed", bundle.config.seed);
  result.last_checkpoint = ckpt_path(opt, "last");
  checkpoint::save_model(result.last_checkpoint, bundle.store, meta);
  if (is_best) {
    result.best_checkpoint = ckpt_path(opt, "best");
    checkpoint::save_model(result.best_checkpoint, bundle.store, meta);
  } else if (result.best_checkpoint.empty()) {
    result.best_checkpoint = ckpt_path(opt, "best");
  }
}

std::vector<std::size_t> usable_examples(const text::Dataset& data, bool need_keywords,
                                         std::size_t* skipped) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < data.examples.size(); ++i) {
    const text::Example& ex = data.examples[i];
    const bool ok = !ex.passage_tokens.empty() && !ex.question_tokens.empty() &&
                    !ex.answers.empty() && (!need_keywords || !ex.keyword_tokens.empty());
    if (ok) {
      idx.push_back(i);
    } else if (skipped) {
      ++*skipped;
    }
  }
  return idx;
}

std::uint64_t example_seed(const RunConfig& config, int epoch, std::size_t index) {
  return mix_seed(mix_seed(config.seed, 7000 + static_cast<std::uint64_t>(epoch)), index);
}

}  // namespace

void write_metric_log(const std::string& path, const std::vector<EpochMetrics>& rows,
                      const std::string& split, const RunConfig& config) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw ConfigError("cannot open metric log for writing: " + path);
  os << "# config_hash=" << std::hex << std::setw(16) << std::setfill('0') << config.hash()
     << std::dec << " seed=" << config.seed << "\n";
  os << "epoch,split,em,f1,loss\n";
  os << std::setprecision(17);
  for (const EpochMetrics& r : rows) {
    os << r.epoch << "," << split << "," << r.em << "," << r.f1 << "," << r.loss << "\n";
  }
}

// ---------------------------------------------------------------------------
// Phase 1.
// ---------------------------------------------------------------------------

namespace {

// Teacher-forced token accuracy (percent) in eval mode.
Scalar dom_token_accuracy(model::Bundle& bundle, const text::Dataset& data,
                          const std::vector<std::size_t>& idx) {
  dom::DomContext ctx = bundle.dom_ctx();
  int correct = 0, total = 0;
  for (std::size_t i : idx) {
    const text::Example& ex = data.examples[i];
    Graph g(0);
    g.training = false;
    auto ext = dom::ExtendedVocab::build(bundle.vocab, ex.keyword_tokens);
    auto enc = dom::encode(g, ctx, ex.keyword_tokens, text::token_texts(ex.passage_tokens));
    dom::teacher_forced_loss(g, ctx, enc, ext, ex.question_tokens, &correct, &total);
  }
  return total == 0 ? 0.0 : 100.0 * static_cast<Scalar>(correct) / static_cast<Scalar>(total);
}

}  // namespace

TrainResult train_dom(model::Bundle& bundle, const text::Dataset& train, const text::Dataset& dev,
                      const TrainOptions& options) {
  const RunConfig& config = bundle.config;
  fs::create_directories(options.out_dir);
  bundle.set_dom_trainable(true);

  std::size_t unusable = 0;
  std::vector<std::size_t> train_idx = usable_examples(train, true, &unusable);
  std::vector<std::size_t> dev_idx = usable_examples(dev, true, nullptr);
  if (train_idx.empty()) {
    throw ConfigError("train-dom: no keywordified training examples (run keywordify first)");
  }
  if (unusable > 0 && !options.quiet) {
    std::cerr << "train-dom: skipping " << unusable << " unusable examples\n";
  }

  AdaDelta opt{config.rho, config.epsilon};
  dom::DomContext ctx = bundle.dom_ctx();
  TrainResult result;
  Progress prog = maybe_resume(bundle, options);

  for (int epoch = prog.start_epoch; epoch < config.epochs; ++epoch) {
    Scalar epoch_loss = 0.0;
    std::size_t seen = 0;
    std::vector<std::size_t> order = train_idx;
    Rng shuffle_rng(mix_seed(config.seed, 5000 + static_cast<std::uint64_t>(epoch)));
    shuffle_rng.shuffle(order);
    try {
      for (std::size_t at = 0; at < order.size(); at += static_cast<std::size_t>(config.batch)) {
        GradAccumulator acc;
        const std::size_t stop = std::min(order.size(), at + static_cast<std::size_t>(config.batch));
        for (std::size_t k = at; k < stop; ++k) {
          const text::Example& ex = train.examples[order[k]];
          Graph g(example_seed(config, epoch, order[k]));
          g.training = true;
          auto ext = dom::ExtendedVocab::build(bundle.vocab, ex.keyword_tokens);
          auto enc = dom::encode(g, ctx, ex.keyword_tokens, text::token_texts(ex.passage_tokens));
          Tensor loss = dom::teacher_forced_loss(g, ctx, enc, ext, ex.question_tokens);
          epoch_loss += loss.item();
          ++seen;
          g.backward(loss);
          acc.accumulate(g);
        }
        acc.scale_all(1.0 / static_cast<Scalar>(stop - at));
        opt.step(acc);
      }
    } catch (const DomainError& e) {
      if (!options.quiet) std::cerr << "train-dom: diverged at epoch " << epoch << ": " << e.what() << "\n";
      result.diverged = true;
      break;
    }

    EpochMetrics row;
    row.epoch = epoch;
    row.loss = seen == 0 ? 0.0 : epoch_loss / static_cast<Scalar>(seen);
    const Scalar acc_pct = dom_token_accuracy(bundle, dev, dev_idx);
    row.em = acc_pct;
    row.f1 = acc_pct;
    result.log.push_back(row);
    if (!options.quiet) {
      std::cout << "[dom] epoch " << epoch << " loss " << row.loss << " dev-token-acc " << acc_pct
                << "\n";
    }

    const bool is_best = acc_pct > prog.best_metric;
    if (is_best) {
      prog.best_metric = acc_pct;
      prog.best_epoch = epoch;
    }
    save_epoch(bundle, options, epoch, prog.best_metric, prog.best_epoch, is_best, result);
    if (config.target_token_acc > 0.0 && acc_pct >= config.target_token_acc) break;
  }
  result.best_metric = prog.best_metric;
  result.best_epoch = prog.best_epoch;
  return result;
}

// ---------------------------------------------------------------------------
// Phase 2.
// ---------------------------------------------------------------------------

std::vector<dom::CandidateQuestion> generate_candidates(const model::Bundle& bundle,
                                                        const text::Example& example) {
  Graph g(0);
  g.training = false;
  dom::DomContext ctx = bundle.dom_ctx();
  auto ext = dom::ExtendedVocab::build(bundle.vocab, example.keyword_tokens);
  auto enc = dom::encode(g, ctx, example.keyword_tokens, text::token_texts(example.passage_tokens));
  dom::BeamConfig beam{bundle.config.beam_k, bundle.config.max_decode_len,
                       bundle.config.candidates};
  bool warned = false;
  auto candidates = dom::beam_search(g, ctx, enc, ext, beam, &warned);
  if (warned) {
    std::cerr << "warning: no beam hypothesis finished for example '" << example.id
              << "'; using truncated beams\n";
  }
  return candidates;
}

namespace {

std::vector<std::vector<std::string>> candidate_token_lists(
    const std::vector<dom::CandidateQuestion>& candidates,
    const std::vector<std::string>& fallback) {
  std::vector<std::vector<std::string>> out;
  for (const auto& c : candidates) {
    if (!c.tokens.empty()) out.push_back(c.tokens);
  }
  if (out.empty()) out.push_back(fallback);  // degenerate model: read the query itself
  return out;
}

Prediction predict_with_candidates(const model::Bundle& bundle, const text::Example& example,
                                   const std::vector<dom::CandidateQuestion>& candidates) {
  Prediction pred;
  pred.id = example.id;
  pred.candidates = candidates;
  auto questions = candidate_token_lists(candidates, example.keyword_tokens);

  Graph g(0);
  g.training = false;
  auto weights =
      pipeline::score_questions(g, bundle.evalmech, example.keyword_tokens, questions, 0.0);
  const Mat& w = weights.weights.value();
  reader::ReaderContext rctx = bundle.reader_ctx();
  const auto passage = text::token_texts(example.passage_tokens);
  std::vector<std::vector<pipeline::WeightedAnswer>> per_question;
  for (const auto& q : questions) {
    auto dist = reader::forward(g, rctx, passage, q);
    per_question.push_back(pipeline::candidate_answers(dist.p_start.value(), dist.p_end.value(),
                                                       bundle.reader_dims.max_span_len,
                                                       bundle.config.top_k_spans));
  }
  std::vector<Scalar> wv(w.data(), w.data() + w.size());
  pred.weights = wv;
  auto ranked = pipeline::answer_mixture(per_question, wv);
  const pipeline::WeightedAnswer& top = ranked.front();
  pred.text = example.span_text(top.start, top.end);
  return pred;
}

struct DevEval {
  Scalar em = 0.0;
  Scalar f1 = 0.0;
};

DevEval eval_dev(const model::Bundle& bundle, const text::Dataset& dev,
                 const std::vector<std::size_t>& dev_idx,
                 const std::vector<std::vector<dom::CandidateQuestion>>& dev_candidates) {
  DevEval out;
  if (dev_idx.empty()) return out;
  for (std::size_t k = 0; k < dev_idx.size(); ++k) {
    const text::Example& ex = dev.examples[dev_idx[k]];
    Prediction p = predict_with_candidates(bundle, ex, dev_candidates[k]);
    std::vector<std::string> golds;
    for (const auto& a : ex.answers) golds.push_back(a.text);
    out.em += static_cast<Scalar>(pipeline::em_metric(p.text, golds));
    out.f1 += pipeline::f1_metric(p.text, golds);
  }
  out.em = 100.0 * out.em / static_cast<Scalar>(dev_idx.size());
  out.f1 = 100.0 * out.f1 / static_cast<Scalar>(dev_idx.size());
  return out;
}

}  // namespace

TrainResult train_e2e(model::Bundle& bundle, const text::Dataset& train, const text::Dataset& dev,
                      const TrainOptions& options) {
  const RunConfig& config = bundle.config;
  fs::create_directories(options.out_dir);

  std::size_t unusable = 0;
  std::vector<std::size_t> train_idx = usable_examples(train, true, &unusable);
  std::vector<std::size_t> dev_idx = usable_examples(dev, true, nullptr);
  if (train_idx.empty()) throw ConfigError("train-e2e: no keywordified training examples");
  if (unusable > 0 && !options.quiet) {
    std::cerr << "train-e2e: skipping " << unusable << " unusable examples\n";
  }

  // The DOM is pre-trained and frozen here; with it fixed, per-example
  // candidates are the same every epoch, so they are generated once.
  bundle.set_dom_trainable(false);
  std::vector<std::vector<std::vector<std::string>>> train_candidates;
  for (std::size_t i : train_idx) {
    auto cands = generate_candidates(bundle, train.examples[i]);
    train_candidates.push_back(
        candidate_token_lists(cands, train.examples[i].keyword_tokens));
  }
  std::vector<std::vector<dom::CandidateQuestion>> dev_candidates;
  for (std::size_t i : dev_idx) {
    dev_candidates.push_back(generate_candidates(bundle, dev.examples[i]));
  }

  AdaDelta opt{config.rho, config.epsilon};
  reader::ReaderContext rctx = bundle.reader_ctx();
  TrainResult result;
  Progress prog = maybe_resume(bundle, options);

  for (int epoch = prog.start_epoch; epoch < config.epochs; ++epoch) {
    Scalar epoch_loss = 0.0;
    std::size_t seen = 0;
    std::vector<std::size_t> order(train_idx.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;  // index into train_idx
    Rng shuffle_rng(mix_seed(config.seed, 6000 + static_cast<std::uint64_t>(epoch)));
    shuffle_rng.shuffle(order);
    try {
      for (std::size_t at = 0; at < order.size(); at += static_cast<std::size_t>(config.batch)) {
        GradAccumulator acc;
        const std::size_t stop = std::min(order.size(), at + static_cast<std::size_t>(config.batch));
        for (std::size_t k = at; k < stop; ++k) {
          const std::size_t pos = order[k];
          const text::Example& ex = train.examples[train_idx[pos]];
          Graph g(example_seed(config, epoch, train_idx[pos]));
          g.training = true;
          const auto& ans = ex.answers.front();
          auto fwd = pipeline::end_to_end_loss(g, rctx, bundle.evalmech,
                                               text::token_texts(ex.passage_tokens),
                                               ex.keyword_tokens, train_candidates[pos],
                                               ans.start_token, ans.end_token);
          epoch_loss += fwd.loss.item();
          ++seen;
          g.backward(fwd.loss);
          acc.accumulate(g);
        }
        acc.scale_all(1.0 / static_cast<Scalar>(stop - at));
        opt.step(acc);
      }
    } catch (const DomainError& e) {
      if (!options.quiet) std::cerr << "train-e2e: diverged at epoch " << epoch << ": " << e.what() << "\n";
      result.diverged = true;
      break;
    }

    DevEval dev_metrics = eval_dev(bundle, dev, dev_idx, dev_candidates);
    EpochMetrics row;
    row.epoch = epoch;
    row.loss = seen == 0 ? 0.0 : epoch_loss / static_cast<Scalar>(seen);
    row.em = dev_metrics.em;
    row.f1 = dev_metrics.f1;
    result.log.push_back(row);
    if (!options.quiet) {
      std::cout << "[e2e] epoch " << epoch << " loss " << row.loss << " dev-em " << row.em
                << " dev-f1 " << row.f1 << "\n";
    }

    const Scalar metric = dev_metrics.f1 + dev_metrics.em;
    const bool is_best = metric > prog.best_metric;
    if (is_best) {
      prog.best_metric = metric;
      prog.best_epoch = epoch;
    }
    save_epoch(bundle, options, epoch, prog.best_metric, prog.best_epoch, is_best, result);
    if (config.target_em > 0.0 && dev_metrics.em >= config.target_em) break;
  }
  result.best_metric = prog.best_metric;
  result.best_epoch = prog.best_epoch;
  return result;
}

FullTrainResult train_full(model::Bundle& bundle, const text::Dataset& train,
                           const text::Dataset& dev, const TrainOptions& options) {
  FullTrainResult full;
  TrainOptions dom_opt = options;
  dom_opt.tag = "dom";
  full.dom = train_dom(bundle, train, dev, dom_opt);
  if (!full.dom.diverged && !full.dom.best_checkpoint.empty() &&
      fs::exists(full.dom.best_checkpoint)) {
    checkpoint::load_model(full.dom.best_checkpoint, bundle.store);
  }
  TrainOptions e2e_opt = options;
  e2e_opt.tag = "e2e";
  e2e_opt.resume_checkpoint.clear();
  full.e2e = train_e2e(bundle, train, dev, e2e_opt);
  return full;
}

// ---------------------------------------------------------------------------
// Reader-only ablation.
// ---------------------------------------------------------------------------

Prediction predict_reader_only(const model::Bundle& bundle, const text::Example& example) {
  Prediction pred;
  pred.id = example.id;
  Graph g(0);
  g.training = false;
  reader::ReaderContext rctx = bundle.reader_ctx();
  auto dist = reader::forward(g, rctx, text::token_texts(example.passage_tokens),
                              example.keyword_tokens);
  auto span = reader::best_span(dist, bundle.reader_dims.max_span_len);
  pred.text = example.span_text(span.start, span.end);
  return pred;
}

TrainResult train_reader_only(model::Bundle& bundle, const text::Dataset& train,
                              const text::Dataset& dev, const TrainOptions& options) {
  const RunConfig& config = bundle.config;
  fs::create_directories(options.out_dir);
  std::vector<std::size_t> train_idx = usable_examples(train, true, nullptr);
  std::vector<std::size_t> dev_idx = usable_examples(dev, true, nullptr);
  if (train_idx.empty()) throw ConfigError("train-reader-only: no usable training examples");

  AdaDelta opt{config.rho, config.epsilon};
  reader::ReaderContext rctx = bundle.reader_ctx();
  TrainResult result;
  Progress prog = maybe_resume(bundle, options);

  for (int epoch = prog.start_epoch; epoch < config.epochs; ++epoch) {
    Scalar epoch_loss = 0.0;
    std::size_t seen = 0;
    std::vector<std::size_t> order = train_idx;
    Rng shuffle_rng(mix_seed(config.seed, 6500 + static_cast<std::uint64_t>(epoch)));
    shuffle_rng.shuffle(order);
    try {
      for (std::size_t at = 0; at < order.size(); at += static_cast<std::size_t>(config.batch)) {
        GradAccumulator acc;
        const std::size_t stop = std::min(order.size(), at + static_cast<std::size_t>(config.batch));
        for (std::size_t k = at; k < stop; ++k) {
          const text::Example& ex = train.examples[order[k]];
          Graph g(example_seed(config, epoch, order[k]));
          g.training = true;
          auto dist = reader::forward(g, rctx, text::token_texts(ex.passage_tokens),
                                      ex.keyword_tokens);
          const auto& ans = ex.answers.front();
          Tensor loss = reader::span_loss(g, dist, ans.start_token, ans.end_token);
          epoch_loss += loss.item();
          ++seen;
          g.backward(loss);
          acc.accumulate(g);
        }
        acc.scale_all(1.0 / static_cast<Scalar>(stop - at));
        opt.step(acc);
      }
    } catch (const DomainError& e) {
      if (!options.quiet) {
        std::cerr << "train-reader-only: diverged at epoch " << epoch << ": " << e.what() << "\n";
      }
      result.diverged = true;
      break;
    }

    DevEval dev_metrics;
    for (std::size_t i : dev_idx) {
      const text::Example& ex = dev.examples[i];
      Prediction p = predict_reader_only(bundle, ex);
      std::vector<std::string> golds;
      for (const auto& a : ex.answers) golds.push_back(a.text);
      dev_metrics.em += static_cast<Scalar>(pipeline::em_metric(p.text, golds));
      dev_metrics.f1 += pipeline::f1_metric(p.text, golds);
    }
    if (!dev_idx.empty()) {
      dev_metrics.em = 100.0 * dev_metrics.em / static_cast<Scalar>(dev_idx.size());
      dev_metrics.f1 = 100.0 * dev_metrics.f1 / static_cast<Scalar>(dev_idx.size());
    }

    EpochMetrics row;
    row.epoch = epoch;
    row.loss = seen == 0 ? 0.0 : epoch_loss / static_cast<Scalar>(seen);
    row.em = dev_metrics.em;
    row.f1 = dev_metrics.f1;
    result.log.push_back(row);
    if (!options.quiet) {
      std::cout << "[reader] epoch " << epoch << " loss " << row.loss << " dev-em " << row.em
                << "\n";
    }
    const Scalar metric = dev_metrics.f1 + dev_metrics.em;
    const bool is_best = metric > prog.best_metric;
    if (is_best) {
      prog.best_metric = metric;
      prog.best_epoch = epoch;
    }
    save_epoch(bundle, options, epoch, prog.best_metric, prog.best_epoch, is_best, result);
    if (config.target_em > 0.0 && dev_metrics.em >= config.target_em) break;
  }
  result.best_metric = prog.best_metric;
  result.best_epoch = prog.best_epoch;
  return result;
}

// ---------------------------------------------------------------------------
// Prediction files and metrics.
// ---------------------------------------------------------------------------

Prediction predict_example(const model::Bundle& bundle, const text::Example& example) {
  return predict_with_candidates(bundle, example, generate_candidates(bundle, example));
}

EvalResult evaluate_predictions(const std::map<std::string, std::string>& predictions,
                                const text::Dataset& dataset) {
  EvalResult result;
  for (const text::Example& ex : dataset.examples) {
    auto it = predictions.find(ex.id);
    if (it == predictions.end()) continue;
    std::vector<std::string> golds;
    for (const auto& a : ex.answers) golds.push_back(a.text);
    result.em += static_cast<Scalar>(pipeline::em_metric(it->second, golds));
    result.f1 += pipeline::f1_metric(it->second, golds);
    ++result.count;
  }
  if (result.count > 0) {
    result.em = 100.0 * result.em / static_cast<Scalar>(result.count);
    result.f1 = 100.0 * result.f1 / static_cast<Scalar>(result.count);
  }
  return result;
}

void write_prediction_files(const std::string& out_dir, const std::vector<Prediction>& predictions,
                            const RunConfig& config) {
  fs::create_directories(out_dir);
  nlohmann::ordered_json preds;
  for (const Prediction& p : predictions) preds[p.id] = p.text;
  {
    std::ofstream os(fs::path(out_dir) / "predictions.json", std::ios::trunc);
    os << preds.dump(1) << "\n";
  }
  {
    std::ostringstream hash;
    hash << std::hex << std::setw(16) << std::setfill('0') << config.hash();
    nlohmann::ordered_json meta = {{"config_hash", hash.str()}, {"seed", config.seed}};
    std::ofstream os(fs::path(out_dir) / "predictions.meta.json", std::ios::trunc);
    os << meta.dump(1) << "\n";
  }
  {
    std::ofstream os(fs::path(out_dir) / "candidates.tsv", std::ios::trunc);
    os << std::setprecision(17);
    for (const Prediction& p : predictions) {
      for (std::size_t r = 0; r < p.candidates.size(); ++r) {
        os << p.id << "\t" << r << "\t" << p.candidates[r].normalized_score << "\t"
           << text::join(p.candidates[r].tokens) << "\n";
      }
    }
  }
}

std::map<std::string, std::string> read_predictions(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open predictions: " + path);
  nlohmann::json root;
  try {
    is >> root;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("predictions parse error in " + path + ": " + e.what());
  }
  std::map<std::string, std::string> out;
  for (auto it = root.begin(); it != root.end(); ++it) {
    out[it.key()] = it.value().get<std::string>();
  }
  return out;
}

}  // namespace krd::train
