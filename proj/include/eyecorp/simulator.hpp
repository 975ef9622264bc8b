#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "eyecorp/corpus.hpp"
#include "eyecorp/embedding.hpp"
#include "eyecorp/eye_movement.hpp"
#include "eyecorp/selection.hpp"
#include "eyecorp/stats.hpp"

namespace eyecorp {

/// Topic mixture over a shared vocabulary. Each sentence draws one topic
/// from `mixture`, a length uniformly from [min_length, max_length], then
/// its words i.i.d. from that topic.
struct GenerativeProfile {
  std::vector<Eigen::VectorXd> topics;  // each a distribution over the vocabulary
  Eigen::VectorXd mixture;
  int min_length = 5;
  int max_length = 15;
  std::uint64_t seed = 1;

  void validate(std::size_t vocabulary_size) const;
};

/// Distinct lowercase pseudo-words of 2 to 12 letters.
std::vector<std::string> synthetic_vocabulary(std::size_t size, std::uint64_t seed);

/// Zipf(exponent) distribution over a random permutation of the vocabulary.
Eigen::VectorXd zipf_topic(std::size_t vocabulary_size, double exponent, std::uint64_t seed);

/// Sentences sampled from the profile until `tokens` tokens are produced
/// (the last sentence is truncated).
Corpus generate_corpus(const GenerativeProfile& profile, std::span<const std::string> vocabulary,
                       std::size_t tokens);

/// `count` sentences with ids prefixed by `id_prefix`, zero padded.
std::vector<Sentence> generate_sentences(const GenerativeProfile& profile, std::span<const std::string> vocabulary,
                                         std::size_t count, const std::string& id_prefix);

std::pair<Corpus, Corpus> generate_corpus_pair(const GenerativeProfile& a, const GenerativeProfile& b,
                                               std::span<const std::string> vocabulary, std::size_t tokens_per_corpus);

/// Jensen-Shannon divergence (bits) between the unigram distributions of
/// two corpora.
double unigram_js_divergence(const Corpus& a, const Corpus& b);

/// Linear generative model of one viewing measure.
struct PlantedModel {
  std::vector<std::string> predictors;  // predictor column names
  std::vector<double> betas;            // ms per predictor unit
  double intercept = 250.0;
  double noise_sigma = 40.0;
  std::string measure = "ffd";  // ffd, gd or tvd
  bool lognormal_noise = false;
  std::uint64_t seed = 1;

  void validate() const;
};

/// One record per stimulus word with the planted measure
///   intercept + sum beta_n x_n + noise,
/// floored at floor_ms. Words with a missing predictor value get no
/// measure. trial_id is "sim-<sentence_id>".
std::vector<ViewingMeasures> plant_fixations(const PredictorTable& predictors, const PlantedModel& model,
                                             double floor_ms = 71.0);

struct SimulationConfig {
  std::size_t vocabulary_size = 2000;
  std::size_t tokens_per_corpus = 200000;
  std::size_t pool_sentences = 3000;
  double zipf_exponent = 1.0;
  // topic weights of the two individual profiles and of the sentence pool
  std::vector<double> mixture_a{0.7, 0.3, 0.0};
  std::vector<double> mixture_b{0.0, 0.3, 0.7};
  std::vector<double> mixture_pool{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  TrainConfig train{};
  SelectionConfig selection{};
  ExclusionConfig exclusion{};
  PlantedModel planted{};

  /// Desk-scale defaults with realistic planted coefficients.
  static SimulationConfig desk_scale();
};

struct CoefficientCheck {
  std::string name;
  double planted = 0.0;
  double beta = 0.0;
  double se = 0.0;
  double t = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  bool inside = false;
};

struct SeedReport {
  std::uint64_t seed = 0;
  std::string failed_stage;  // empty when every stage ran
  std::string error;
  double pool_wp_r = 0.0;
  double selected_wp_r = 0.0;
  bool gate_pass = false;
  std::size_t selected_sentences = 0;
  std::size_t analysis_rows = 0;
  std::vector<CoefficientCheck> coefficients;
  RegressionResult regression;
  StimulusSet stimuli;

  bool all_inside() const;
};

/// Corpora -> two models -> pool scoring -> selection -> planted fixations
/// -> exclusions -> OLS, independently per seed. Seeds run on up to
/// `parallel_seeds` threads; each seed is single-worker and deterministic.
std::vector<SeedReport> end_to_end_check(std::span<const std::uint64_t> seeds, const SimulationConfig& config,
                                         int parallel_seeds = 1);

SeedReport run_seed(std::uint64_t seed, const SimulationConfig& config);

/// Per-coefficient rows of every seed.
std::string write_seed_reports_tsv(std::span<const SeedReport> reports);
/// One row per seed plus coverage counts per coefficient.
std::string write_simulation_summary_tsv(std::span<const SeedReport> reports);

}  // namespace eyecorp
