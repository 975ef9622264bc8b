#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "eyecorp/corpus.hpp"
#include "eyecorp/predictors.hpp"
#include "eyecorp/scoring.hpp"
#include "eyecorp/stats.hpp"

namespace eyecorp {

struct RankedSentence {
  std::string sentence_id;
  double perplexity = 0.0;
  int rank = 0;  // 1 = lowest perplexity
};

struct PerplexityRanking {
  std::string model_id;
  std::vector<RankedSentence> entries;  // ascending rank

  /// Rank of a sentence; DataError when the sentence is not ranked.
  int rank_of(const std::string& sentence_id) const;
};

/// Ranks the model's sentences by ascending perplexity. Ties go to the
/// naturally smaller sentence id; infinite perplexities rank last.
PerplexityRanking rank_sentences(std::span<const SentenceScore> scores, const std::string& model_id);

struct SelectionConfig {
  double fraction = 1.0 / 3.0;
  int min_words = 5;
  int max_words = 15;
  int min_len = 2;   // letters per word
  int max_len = 17;
  double corr_threshold = 0.3;

  void validate() const;
};

/// Word-count and per-word letter-count bounds.
bool within_bounds(std::span<const std::string> tokens, const SelectionConfig& config);

struct SelectedSentence {
  std::string sentence_id;
  std::string model_id;
  long long discriminativeness = 0;  // min over other models of (their rank - this model's rank)
};

struct Selection {
  std::vector<SelectedSentence> sentences;
  std::size_t quota = 0;            // sentences requested per model
  std::size_t candidates = 0;       // sentences inside the bounds
  bool short_of_quota = false;      // some model received fewer than quota
  bool non_discriminative = false;  // every discriminativeness score is 0
};

/// Picks, for every model, the ceil(fraction * N) in-bounds sentences with
/// the largest rank gap against the best competing model. A sentence is
/// only eligible for the model on which its gap is largest (ties: earlier
/// ranking), so the per-model sets are disjoint.
Selection select_discriminative(std::span<const PerplexityRanking> rankings,
                                const std::map<std::string, std::vector<std::string>>& sentence_tokens,
                                const SelectionConfig& config);

struct StimulusWord {
  std::string sentence_id;
  int position = 0;
  std::string token;
  int length = 0;
  std::vector<std::optional<double>> wf;  // log10 per-million, per corpus; nullopt when absent
  std::vector<std::optional<double>> wp;  // per model; nullopt when undefined
  std::string selected_for;
};

/// Every word of every selected sentence with its predictors.
struct StimulusSet {
  std::vector<std::string> corpus_ids;
  std::vector<std::string> model_ids;
  std::vector<StimulusWord> words;  // grouped by sentence, positions ascending

  std::vector<std::string> sentence_ids() const;
  std::vector<std::string> sentence_tokens(const std::string& sentence_id) const;
  PredictorTable predictors() const;
};

struct NamedFrequency {
  std::string id;
  const FrequencyTable* table = nullptr;
};

/// Builds the stimulus table for the selected sentences from the score
/// table (all models) and the frequency tables.
StimulusSet build_stimulus_set(const Selection& selection, std::span<const SentenceScore> scores,
                               std::span<const NamedFrequency> frequencies);

/// Same table for an arbitrary set of sentences (e.g. the unselected pool).
StimulusSet build_stimulus_set(std::span<const std::string> sentence_ids, std::span<const SentenceScore> scores,
                               std::span<const NamedFrequency> frequencies);

std::string write_stimuli_tsv(const StimulusSet& stimuli);
StimulusSet read_stimuli_tsv(std::string_view text, const std::string& source);

struct ReplacementCandidate {
  std::string word;
  double wp = 0.0;
};

struct ZeroWpFlag {
  std::string sentence_id;
  int position = 0;
  std::string token;
  bool undefined = false;  // no context, so no candidates can be ranked
  std::vector<ReplacementCandidate> candidates;  // descending wp
};

/// Positions whose WP under `model_id` is 0 or undefined, each with the k
/// most probable vocabulary words for that slot. Nothing is replaced.
template <class Scalar>
std::vector<ZeroWpFlag> flag_zero_wp(const StimulusSet& stimuli, const SkipGramModel<Scalar>& model,
                                     const std::string& model_id, int k) {
  if (k < 1) throw Error("flag_zero_wp: k must be at least 1");
  const auto it = std::find(stimuli.model_ids.begin(), stimuli.model_ids.end(), model_id);
  if (it == stimuli.model_ids.end()) throw Error(fmt::format("stimuli have no WP column for model '{}'", model_id));
  const auto m = static_cast<std::size_t>(it - stimuli.model_ids.begin());
  std::vector<ZeroWpFlag> out;
  std::string current;
  std::vector<int> encoded;
  for (const auto& w : stimuli.words) {
    if (w.wp[m] && *w.wp[m] > 0.0) continue;
    if (w.sentence_id != current) {
      current = w.sentence_id;
      encoded = model.vocab.encode(stimuli.sentence_tokens(current));
    }
    ZeroWpFlag flag{w.sentence_id, w.position, w.token, !w.wp[m].has_value(), {}};
    if (auto dist = context_distribution(model, std::span<const int>(encoded), static_cast<std::size_t>(w.position))) {
      std::vector<int> order(static_cast<std::size_t>(dist->size()));
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
      const auto top = std::min<std::size_t>(static_cast<std::size_t>(k), order.size());
      std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(top), order.end(),
                        [&](int a, int b) { return (*dist)(a) > (*dist)(b) || ((*dist)(a) == (*dist)(b) && a < b); });
      for (std::size_t i = 0; i < top; ++i) flag.candidates.push_back({model.vocab.word(order[i]), (*dist)(order[i])});
    }
    out.push_back(std::move(flag));
  }
  return out;
}

std::string write_zero_wp_tsv(std::span<const ZeroWpFlag> flags);

struct MulticollinearityReport {
  CorrelationMatrix correlations;
  Eigen::VectorXd vif;
  double max_abs_wp_r = 0.0;
  bool pass = false;
  std::size_t rows_used = 0;
};

/// Correlations and VIFs over the given columns; passes iff every pair of
/// `wp_columns` has |r| < threshold. A constant column raises DataError
/// naming it.
MulticollinearityReport verify_multicollinearity(const std::vector<std::string>& names,
                                                 const Eigen::MatrixXd& columns,
                                                 std::span<const std::string> wp_columns, double threshold);

/// Runs the check over the rows that can enter the regression: no edge
/// word, every WP defined and non-zero, every WF present.
MulticollinearityReport verify_multicollinearity(const StimulusSet& stimuli, const SelectionConfig& config);

/// Table layout: r above the diagonal, p below, then a VIF column.
std::string write_multicollinearity_tsv(const MulticollinearityReport& report);

}  // namespace eyecorp
