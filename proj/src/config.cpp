#include "keyreader/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace krd {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

struct Field {
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

template <class T>
T parse_number(const std::string& key, const std::string& value) {
  std::istringstream ss(value);
  T out;
  ss >> out;
  if (ss.fail() || !trim(value).size()) {
    throw ConfigError("config value for '" + key + "' is not a number: '" + value + "'");
  }
  return out;
}

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = [] {
    std::map<std::string, Field> f;
    auto str = [&f](const std::string& key, std::string RunConfig::* member) {
      f[key] = {[member](const RunConfig& c) { return c.*member; },
                [member](RunConfig& c, const std::string& v) { c.*member = v; }};
    };
    auto num = [&f](const std::string& key, auto RunConfig::* member) {
      f[key] = {[member](const RunConfig& c) {
                  std::ostringstream os;
                  os << c.*member;
                  return os.str();
                },
                [member, key](RunConfig& c, const std::string& v) {
                  c.*member = parse_number<std::decay_t<decltype(c.*member)>>(key, v);
                }};
    };
    str("train", &RunConfig::train_path);
    str("dev", &RunConfig::dev_path);
    str("embeddings", &RunConfig::embeddings_path);
    str("stopwords", &RunConfig::stopwords_path);
    str("out_dir", &RunConfig::out_dir);
    str("dom_checkpoint", &RunConfig::dom_checkpoint);
    str("e2e_checkpoint", &RunConfig::e2e_checkpoint);
    num("word_dim", &RunConfig::word_dim);
    num("char_dim", &RunConfig::char_dim);
    num("char_filters", &RunConfig::char_filters);
    num("filter_width", &RunConfig::filter_width);
    num("hidden", &RunConfig::hidden);
    num("match_hidden", &RunConfig::match_hidden);
    num("tag_dim", &RunConfig::tag_dim);
    num("hops", &RunConfig::hops);
    num("beam_k", &RunConfig::beam_k);
    num("candidates", &RunConfig::candidates);
    num("max_decode_len", &RunConfig::max_decode_len);
    num("max_span_len", &RunConfig::max_span_len);
    num("top_k_spans", &RunConfig::top_k_spans);
    num("keyword_max_len", &RunConfig::keyword_max_len);
    num("stopword_drop_prob", &RunConfig::stopword_drop_prob);
    num("keyword_noise_prob", &RunConfig::keyword_noise_prob);
    num("skip_window", &RunConfig::skip_window);
    num("skipgram_epochs", &RunConfig::skipgram_epochs);
    num("negatives", &RunConfig::negatives);
    num("min_sentence_len", &RunConfig::min_sentence_len);
    num("dropout", &RunConfig::dropout);
    num("rho", &RunConfig::rho);
    num("epsilon", &RunConfig::epsilon);
    num("epochs", &RunConfig::epochs);
    num("batch", &RunConfig::batch);
    num("seed", &RunConfig::seed);
    num("target_token_acc", &RunConfig::target_token_acc);
    num("target_em", &RunConfig::target_em);
    return f;
  }();
  return table;
}

}  // namespace

void RunConfig::validate() const {
  auto positive = [](const char* name, auto v) {
    if (v <= 0) throw ConfigError(std::string("config: ") + name + " must be positive");
  };
  positive("word_dim", word_dim);
  positive("char_dim", char_dim);
  positive("char_filters", char_filters);
  positive("filter_width", filter_width);
  positive("hidden", hidden);
  positive("match_hidden", match_hidden);
  positive("tag_dim", tag_dim);
  positive("hops", hops);
  positive("beam_k", beam_k);
  positive("candidates", candidates);
  positive("max_decode_len", max_decode_len);
  positive("max_span_len", max_span_len);
  positive("top_k_spans", top_k_spans);
  positive("keyword_max_len", keyword_max_len);
  positive("epochs", epochs);
  positive("batch", batch);
  positive("rho", rho);
  positive("epsilon", epsilon);
  if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("config: dropout must be in [0,1)");
  if (rho >= 1.0) throw ConfigError("config: rho must be in (0,1)");
  if (beam_k < candidates) throw ConfigError("config: beam_k must be >= candidates");
}

std::string RunConfig::canonical() const {
  std::ostringstream os;
  for (const auto& [key, field] : fields()) {
    os << key << " = " << field.get(*this) << "\n";
  }
  return os.str();
}

RunConfig parse_config_file(const std::string& path, RunConfig base) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file: " + path);
  RunConfig config = std::move(base);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    std::string s = trim(line);
    if (s.empty() || s[0] == '#') continue;
    std::size_t eq = s.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config parse error at " + path + ":" + std::to_string(line_no) +
                        ": expected 'key = value'");
    }
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    try {
      apply_override(config, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(std::string(e.what()) + " (at " + path + ":" + std::to_string(line_no) +
                        ")");
    }
  }
  return config;
}

void apply_override(RunConfig& config, const std::string& key, const std::string& value) {
  auto it = fields().find(key);
  if (it == fields().end()) throw ConfigError("unknown config key: '" + key + "'");
  it->second.set(config, value);
}

}  // namespace krd
