// keyreader command line: keywordify datasets, train the two phases, run
// predictions, score them, and gradient-check the stack.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "keyreader/checkpoint.hpp"
#include "keyreader/config.hpp"
#include "keyreader/gradsuite.hpp"
#include "keyreader/model.hpp"
#include "keyreader/text/keywordify.hpp"
#include "keyreader/train.hpp"

namespace fs = std::filesystem;
using namespace krd;

namespace {

constexpr int kExitUsage = 2;      // missing files, config parse errors
constexpr int kExitDiverged = 3;   // training loss went non-finite

struct CliArgs {
  std::string config_path;
  std::vector<std::string> overrides;  // key=value
};

RunConfig resolve_config(const CliArgs& args) {
  RunConfig config;
  if (const char* env = std::getenv("KEYREADER_SEED")) {
    config.seed = std::strtoull(env, nullptr, 10);
  }
  if (!args.config_path.empty()) {
    config = parse_config_file(args.config_path, std::move(config));
  }
  for (const std::string& kv : args.overrides) {
    std::size_t eq = kv.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("--set expects key=value, got '" + kv + "'");
    }
    apply_override(config, kv.substr(0, eq), kv.substr(eq + 1));
  }
  config.validate();
  return config;
}

void add_common(CLI::App* cmd, CliArgs& args) {
  cmd->add_option("--config", args.config_path, "flat key = value config file");
  cmd->add_option("--set", args.overrides, "override a config key (key=value, repeatable)");
}

std::string hash_hex(const RunConfig& config) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << config.hash();
  return os.str();
}

int cmd_keywordify(const RunConfig& config, const std::string& in_path,
                   const std::string& out_path) {
  text::Dataset dataset = text::read_dataset(in_path);
  text::StopwordSet stopwords = text::load_stopwords(config.stopwords_path);
  text::CorpusStats corpus;
  for (const auto& ex : dataset.examples) corpus.add_document(ex.question_tokens);

  text::KeywordifyOptions options;
  options.max_len = config.keyword_max_len;
  options.stopword_drop_prob = config.stopword_drop_prob;
  options.noise_prob = config.keyword_noise_prob;

  Rng rng(mix_seed(config.seed, 42));
  text::KeywordifyStats stats;
  std::map<std::size_t, std::size_t> length_histogram;
  std::vector<std::pair<std::string, std::string>> samples;
  for (auto& ex : dataset.examples) {
    auto keywords = text::keywordify(ex.question_tokens, rng, stopwords, corpus, options, &stats);
    ex.original_question_raw = ex.question_raw;
    ex.question_raw = text::join(keywords);
    ex.keyword_tokens = keywords;
    ++length_histogram[keywords.size()];
  }
  const std::size_t n = dataset.examples.size();
  for (std::size_t k = 0; k < 10 && n > 0; ++k) {
    const auto& ex = dataset.examples[k * n / 10];
    samples.emplace_back(*ex.original_question_raw, ex.question_raw);
  }
  text::write_dataset(dataset, out_path);

  const Scalar drop_rate = stats.stopwords_seen == 0
                               ? 0.0
                               : static_cast<Scalar>(stats.stopwords_dropped) /
                                     static_cast<Scalar>(stats.stopwords_seen);
  nlohmann::ordered_json report;
  report["config_hash"] = hash_hex(config);
  report["seed"] = config.seed;
  report["examples"] = n;
  report["stopwords_seen"] = stats.stopwords_seen;
  report["stopwords_dropped"] = stats.stopwords_dropped;
  report["drop_rate"] = drop_rate;
  report["preserved_seen"] = stats.preserved_seen;
  report["pruned"] = stats.pruned;
  report["noise_prunes"] = stats.noise_prunes;
  nlohmann::ordered_json hist = nlohmann::ordered_json::object();
  for (const auto& [len, count] : length_histogram) hist[std::to_string(len)] = count;
  report["length_histogram"] = hist;
  nlohmann::ordered_json sample_json = nlohmann::ordered_json::array();
  for (const auto& [before, after] : samples) {
    sample_json.push_back({{"before", before}, {"after", after}});
  }
  report["samples"] = sample_json;
  std::ofstream os(out_path + ".stats.json", std::ios::trunc);
  os << report.dump(1) << "\n";

  std::cout << "keywordified " << n << " examples -> " << out_path << " (drop rate "
            << drop_rate << ")\n";
  return 0;
}

int run_training(const RunConfig& config, const std::string& phase,
                 const std::string& resume_path) {
  if (config.train_path.empty()) throw ConfigError("config: train path is required");
  text::Dataset train_data = text::read_dataset(config.train_path);
  text::Dataset dev_data =
      config.dev_path.empty() ? train_data : text::read_dataset(config.dev_path);

  auto bundle = model::build(config, train_data);
  train::TrainOptions options;
  options.out_dir = config.out_dir;
  options.tag = phase;
  options.resume_checkpoint = resume_path;

  train::TrainResult result;
  if (phase == "dom") {
    result = train_dom(*bundle, train_data, dev_data, options);
  } else {
    if (config.dom_checkpoint.empty()) {
      throw ConfigError("config: dom_checkpoint is required for train-e2e");
    }
    checkpoint::load_model(config.dom_checkpoint, bundle->store);
    result = train_e2e(*bundle, train_data, dev_data, options);
  }
  train::write_metric_log((fs::path(config.out_dir) / (phase + "-metrics.csv")).string(),
                          result.log, "dev", config);
  std::cout << "best " << (phase == "dom" ? "dev token accuracy " : "dev EM+F1 ")
            << result.best_metric << " at epoch " << result.best_epoch << "\n";
  return result.diverged ? kExitDiverged : 0;
}

int cmd_predict(const RunConfig& config) {
  if (config.train_path.empty()) throw ConfigError("config: train path is required");
  if (config.dev_path.empty()) throw ConfigError("config: dev path is required");
  if (config.e2e_checkpoint.empty()) throw ConfigError("config: e2e_checkpoint is required");
  text::Dataset train_data = text::read_dataset(config.train_path);
  text::Dataset dev_data = text::read_dataset(config.dev_path);
  auto bundle = model::build(config, train_data);
  checkpoint::load_model(config.e2e_checkpoint, bundle->store);

  std::vector<train::Prediction> predictions;
  for (const auto& ex : dev_data.examples) {
    if (ex.keyword_tokens.empty()) {
      std::cerr << "warning: example '" << ex.id << "' has no keyword query; skipped\n";
      continue;
    }
    predictions.push_back(train::predict_example(*bundle, ex));
  }
  train::write_prediction_files(config.out_dir, predictions, config);
  std::cout << "wrote " << predictions.size() << " predictions to " << config.out_dir << "\n";
  return 0;
}

int cmd_eval(const std::string& predictions_path, const std::string& dataset_path) {
  auto predictions = train::read_predictions(predictions_path);
  text::Dataset dataset = text::read_dataset(dataset_path);
  auto result = train::evaluate_predictions(predictions, dataset);
  std::cout << std::fixed << std::setprecision(2) << "EM=" << result.em << " F1=" << result.f1
            << " (" << result.count << " examples)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"keyword-query reading comprehension pipeline"};
  app.require_subcommand(1);

  CliArgs args;
  std::string in_path, out_path, resume_path, predictions_path, dataset_path;

  CLI::App* keywordify = app.add_subcommand("keywordify", "rewrite questions as keyword queries");
  add_common(keywordify, args);
  keywordify->add_option("--in", in_path, "input SQuAD-format json")->required();
  keywordify->add_option("--out", out_path, "output path")->required();

  CLI::App* train_dom_cmd = app.add_subcommand("train-dom", "phase 1: question generator");
  add_common(train_dom_cmd, args);
  train_dom_cmd->add_option("--resume", resume_path, "checkpoint to resume from");

  CLI::App* train_e2e_cmd = app.add_subcommand("train-e2e", "phase 2: reader + evaluation");
  add_common(train_e2e_cmd, args);
  train_e2e_cmd->add_option("--resume", resume_path, "checkpoint to resume from");

  CLI::App* predict = app.add_subcommand("predict", "emit predictions.json + candidate dump");
  add_common(predict, args);

  CLI::App* eval = app.add_subcommand("eval", "score predictions against a dataset");
  eval->add_option("--predictions", predictions_path)->required();
  eval->add_option("--dataset", dataset_path)->required();

  CLI::App* gradcheck_cmd = app.add_subcommand("gradcheck", "finite-difference suite");

  CLI11_PARSE(app, argc, argv);

  try {
    if (eval->parsed()) return cmd_eval(predictions_path, dataset_path);
    if (gradcheck_cmd->parsed()) {
      auto entries = gradcheck::run_suite(std::cout);
      return gradcheck::suite_passed(entries) ? 0 : 1;
    }
    RunConfig config = resolve_config(args);
    if (keywordify->parsed()) {
      if (config.stopwords_path.empty()) {
        throw ConfigError("config: stopwords path is required for keywordify");
      }
      return cmd_keywordify(config, in_path, out_path);
    }
    if (train_dom_cmd->parsed()) return run_training(config, "dom", resume_path);
    if (train_e2e_cmd->parsed()) return run_training(config, "e2e", resume_path);
    if (predict->parsed()) return cmd_predict(config);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDiverged;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
