#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "eyecorp/embedding.hpp"
#include "eyecorp/error.hpp"

namespace eyecorp {

/// Probability of a word in context. nullopt means undefined: no
/// in-vocabulary word inside the context window.
using WordProbability = std::optional<double>;

/// Distribution over the whole vocabulary for slot t, given the
/// in-vocabulary tokens within +-window of t:
///   p(w) = softmax_w( mean_c input(c) . output(w) ).
/// `encoded` holds vocabulary indices, -1 for OOV tokens. nullopt when the
/// context is empty.
template <class Scalar>
std::optional<Eigen::VectorXd> context_distribution(const SkipGramModel<Scalar>& model, std::span<const int> encoded,
                                                    std::size_t t) {
  if (t >= encoded.size()) throw Error(fmt::format("position {} out of range for length {}", t, encoded.size()));
  const std::size_t w = static_cast<std::size_t>(model.window);
  const std::size_t lo = t >= w ? t - w : 0;
  const std::size_t hi = std::min(encoded.size() - 1, t + w);
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> context = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(model.dim());
  int n = 0;
  for (std::size_t j = lo; j <= hi; ++j) {
    if (j == t || encoded[j] < 0) continue;
    context += model.input.row(encoded[j]).transpose();
    ++n;
  }
  if (n == 0) return std::nullopt;
  context /= static_cast<Scalar>(n);
  Eigen::VectorXd logits = (model.output * context).template cast<double>();
  const double max = logits.maxCoeff();
  Eigen::VectorXd p = (logits.array() - max).exp().matrix();
  p /= p.sum();
  return p;
}

template <class Scalar>
WordProbability word_probability(const SkipGramModel<Scalar>& model, std::span<const int> encoded, std::size_t t) {
  if (t >= encoded.size()) throw Error(fmt::format("position {} out of range for length {}", t, encoded.size()));
  if (encoded[t] < 0) return 0.0;
  auto p = context_distribution(model, encoded, t);
  if (!p) return std::nullopt;
  return (*p)(encoded[t]);
}

template <class Scalar>
WordProbability word_probability(const SkipGramModel<Scalar>& model, std::span<const std::string> sentence,
                                 std::size_t t) {
  const auto encoded = model.vocab.encode(sentence);
  return word_probability(model, std::span<const int>(encoded), t);
}

/// 2^(-(1/n) sum log2 p). Any zero probability gives +infinity.
double sentence_perplexity(std::span<const double> probs);

struct Sentence {
  std::string id;
  std::vector<std::string> tokens;
};

struct SentenceScore {
  std::string sentence_id;
  std::string model_id;
  std::vector<std::string> tokens;
  std::vector<WordProbability> word_probs;
  double perplexity = 0.0;  // +infinity when any word is OOV, zero or undefined
  bool flagged = false;
  std::string flag;  // "oov", "zero_wp", "undefined_wp", "empty"
};

/// Perplexity of per-word probabilities; undefined entries make it infinite.
double perplexity_of(std::span<const WordProbability> probs);

template <class Scalar>
SentenceScore score_sentence(const SkipGramModel<Scalar>& model, const std::string& model_id,
                             const Sentence& sentence) {
  SentenceScore score;
  score.sentence_id = sentence.id;
  score.model_id = model_id;
  score.tokens = sentence.tokens;
  if (sentence.tokens.empty()) {
    score.perplexity = std::numeric_limits<double>::infinity();
    score.flagged = true;
    score.flag = "empty";
    return score;
  }
  const auto encoded = model.vocab.encode(sentence.tokens);
  bool oov = false, zero = false, undefined = false;
  for (std::size_t t = 0; t < encoded.size(); ++t) {
    const auto wp = word_probability(model, std::span<const int>(encoded), t);
    if (encoded[t] < 0) oov = true;
    else if (!wp) undefined = true;
    else if (*wp == 0.0) zero = true;
    score.word_probs.push_back(wp);
  }
  score.perplexity = perplexity_of(score.word_probs);
  if (oov || zero || undefined) {
    score.flagged = true;
    score.flag = oov ? "oov" : undefined ? "undefined_wp" : "zero_wp";
  }
  return score;
}

template <class Scalar>
struct NamedModel {
  std::string id;
  const SkipGramModel<Scalar>* model = nullptr;
};

/// One row per (model, sentence), model-major, in input order. Problems
/// with individual sentences are flagged on their rows.
template <class Scalar>
std::vector<SentenceScore> score_corpus(std::span<const NamedModel<Scalar>> models, std::span<const Sentence> sentences) {
  if (models.empty()) throw Error("score_corpus needs at least one model");
  if (sentences.empty()) throw Error("score_corpus needs at least one sentence");
  std::vector<SentenceScore> rows;
  rows.reserve(models.size() * sentences.size());
  for (const auto& m : models)
    for (const auto& s : sentences) rows.push_back(score_sentence(*m.model, m.id, s));
  return rows;
}

/// `sentence_id<TAB>model_id<TAB>position<TAB>token<TAB>wp<TAB>pp`, one row
/// per word, "NA" for undefined probabilities and "inf" for infinite
/// perplexity.
std::string write_scores_tsv(std::span<const SentenceScore> scores);
std::vector<SentenceScore> read_scores_tsv(std::string_view text, const std::string& source);

/// One sentence per line, optionally "id<TAB>text"; lines are cleaned and
/// stemmed like corpus text. Unnamed lines get ids s1, s2, ...
std::vector<Sentence> read_sentences(std::string_view text, const SuffixRules& rules);

}  // namespace eyecorp
