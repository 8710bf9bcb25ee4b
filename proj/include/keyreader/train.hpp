#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "keyreader/model.hpp"

namespace krd::train {

struct EpochMetrics {
  int epoch = 0;
  Scalar em = 0.0;    // token accuracy (percent) during phase 1
  Scalar f1 = 0.0;
  Scalar loss = 0.0;  // mean training loss
};

struct TrainResult {
  std::vector<EpochMetrics> log;  // one row per epoch
  Scalar best_metric = 0.0;
  int best_epoch = -1;
  bool diverged = false;
  std::string best_checkpoint;
  std::string last_checkpoint;
};

struct TrainOptions {
  std::string out_dir;            // checkpoints + metrics.csv live here
  std::string tag;                // "dom" or "e2e"; names the artifacts
  std::string resume_checkpoint;  // optional
  bool quiet = false;
};

// Phase 1: teacher-forced DOM training on (F, Q^g) pairs. EpochMetrics.em
// and .f1 carry dev teacher-forced token accuracy (percent).
TrainResult train_dom(model::Bundle& bundle, const text::Dataset& train,
                      const text::Dataset& dev, const TrainOptions& options);

// Phase 2: freezes DOM, generates candidates once per example from it, then
// trains reader + evaluation mechanism end to end. EpochMetrics carry dev
// EM/F1 (percent).
TrainResult train_e2e(model::Bundle& bundle, const text::Dataset& train,
                      const text::Dataset& dev, const TrainOptions& options);

// Both phases back to back (phase 2 starts from phase 1's best checkpoint).
struct FullTrainResult {
  TrainResult dom;
  TrainResult e2e;
};
FullTrainResult train_full(model::Bundle& bundle, const text::Dataset& train,
                           const text::Dataset& dev, const TrainOptions& options);

// Ablation baseline: the reader alone on (passage, keyword query) pairs.
TrainResult train_reader_only(model::Bundle& bundle, const text::Dataset& train,
                              const text::Dataset& dev, const TrainOptions& options);

// ---------------------------------------------------------------------------
// Prediction.
// ---------------------------------------------------------------------------

struct Prediction {
  std::string id;
  std::string text;
  std::vector<dom::CandidateQuestion> candidates;
  std::vector<Scalar> weights;
};

std::vector<dom::CandidateQuestion> generate_candidates(const model::Bundle& bundle,
                                                        const text::Example& example);

// Full pipeline: candidates -> question weights -> per-candidate answers ->
// mixture argmax.
Prediction predict_example(const model::Bundle& bundle, const text::Example& example);

// Reader-only prediction reads the keyword query directly.
Prediction predict_reader_only(const model::Bundle& bundle, const text::Example& example);

struct EvalResult {
  Scalar em = 0.0;  // percents
  Scalar f1 = 0.0;
  std::size_t count = 0;
};

EvalResult evaluate_predictions(const std::map<std::string, std::string>& predictions,
                                const text::Dataset& dataset);

// predictions.json (id -> answer text), candidates.tsv dump and a meta
// sidecar carrying config hash + seed.
void write_prediction_files(const std::string& out_dir, const std::vector<Prediction>& predictions,
                            const RunConfig& config);

std::map<std::string, std::string> read_predictions(const std::string& path);

// Writes "epoch,split,em,f1,loss" rows (one per epoch, dev split) under a
// "# config_hash=... seed=..." header.
void write_metric_log(const std::string& path, const std::vector<EpochMetrics>& rows,
                      const std::string& split, const RunConfig& config);

}  // namespace krd::train
