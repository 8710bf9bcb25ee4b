#include "keyreader/text/skipgram.hpp"

#include <cmath>

namespace krd::text {

std::vector<std::pair<int, int>> skipgram_pairs(const std::vector<int>& sentence, int window) {
  std::vector<std::pair<int, int>> pairs;
  const int n = static_cast<int>(sentence.size());
  for (int i = 0; i < n; ++i) {
    for (int j = std::max(0, i - window); j <= std::min(n - 1, i + window); ++j) {
      if (j == i) continue;
      pairs.emplace_back(sentence[static_cast<std::size_t>(i)],
                         sentence[static_cast<std::size_t>(j)]);
    }
  }
  return pairs;
}

Mat train_tag_embeddings(const std::vector<std::vector<int>>& tag_sentences, int vocab_size,
                         const SkipGramConfig& config) {
  std::vector<const std::vector<int>*> corpus;
  for (const auto& s : tag_sentences) {
    if (s.size() >= config.min_sentence_len) corpus.push_back(&s);
  }
  if (corpus.empty()) {
    throw ConfigError("skip-gram corpus is empty after the sentence-length filter (min " +
                      std::to_string(config.min_sentence_len) + ")");
  }

  Rng rng(config.seed);
  const Index d = config.dim;
  auto init = [&] {
    Mat m(vocab_size, d);
    const Scalar bound = 0.5 / static_cast<Scalar>(d);
    for (Index r = 0; r < m.rows(); ++r) {
      for (Index c = 0; c < d; ++c) m(r, c) = rng.uniform(-bound, bound);
    }
    return m;
  };
  Mat in = init();
  Mat out = Mat::Zero(vocab_size, d);

  auto sigmoid = [](Scalar x) { return 1.0 / (1.0 + std::exp(-x)); };

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (const auto* sent : corpus) {
      for (const auto& [center, context] : skipgram_pairs(*sent, config.window)) {
        Eigen::RowVectorXd grad_center = Eigen::RowVectorXd::Zero(d);
        // Positive pair plus uniformly drawn negatives.
        for (int k = 0; k <= config.negatives; ++k) {
          const bool positive = k == 0;
          const int target =
              positive ? context : static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(vocab_size)));
          if (!positive && target == context) continue;
          const Scalar score = sigmoid(in.row(center).dot(out.row(target)));
          const Scalar err = (positive ? 1.0 : 0.0) - score;
          grad_center += err * out.row(target);
          out.row(target) += config.learning_rate * err * in.row(center);
        }
        in.row(center) += config.learning_rate * grad_center;
      }
    }
  }
  return in;
}

}  // namespace krd::text
