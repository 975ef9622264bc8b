#include "eyecorp/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <atomic>
#include <set>
#include <thread>

#include <fmt/format.h>

#include "eyecorp/error.hpp"
#include "eyecorp/random.hpp"
#include "eyecorp/scoring.hpp"
#include "eyecorp/tsv.hpp"

namespace eyecorp {
namespace {

// Inverse-CDF draw from a normalized categorical distribution.
class Categorical {
 public:
  explicit Categorical(const Eigen::VectorXd& p) : cumulative_(static_cast<std::size_t>(p.size())) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      total += p(i);
      cumulative_[static_cast<std::size_t>(i)] = total;
    }
    for (auto& c : cumulative_) c /= total;
    cumulative_.back() = 1.0;
  }
  std::size_t draw(Rng& rng) const {
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), rng.uniform());
    return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()), cumulative_.size() - 1);
  }

 private:
  std::vector<double> cumulative_;
};

class SentenceSampler {
 public:
  SentenceSampler(const GenerativeProfile& profile, std::span<const std::string> vocabulary)
      : profile_(profile), vocabulary_(vocabulary), mixture_(profile.mixture), rng_(profile.seed) {
    profile.validate(vocabulary.size());
    for (const auto& t : profile.topics) topics_.emplace_back(t);
  }

  std::vector<std::string> next() {
    const auto& topic = topics_[mixture_.draw(rng_)];
    const auto span = static_cast<std::uint64_t>(profile_.max_length - profile_.min_length + 1);
    const auto length = static_cast<std::size_t>(profile_.min_length) + rng_.below(span);
    std::vector<std::string> words;
    words.reserve(length);
    for (std::size_t i = 0; i < length; ++i) words.push_back(vocabulary_[topic.draw(rng_)]);
    return words;
  }

 private:
  const GenerativeProfile& profile_;
  std::span<const std::string> vocabulary_;
  Categorical mixture_;
  std::vector<Categorical> topics_;
  Rng rng_;
};

GenerativeProfile make_profile(const std::vector<Eigen::VectorXd>& topics, const std::vector<double>& mixture,
                               std::uint64_t seed) {
  GenerativeProfile p;
  p.topics = topics;
  p.mixture = Eigen::Map<const Eigen::VectorXd>(mixture.data(), static_cast<Eigen::Index>(mixture.size()));
  p.seed = seed;
  return p;
}

}  // namespace

void GenerativeProfile::validate(std::size_t vocabulary_size) const {
  if (topics.empty()) throw DataError("profile has no topics");
  if (static_cast<std::size_t>(mixture.size()) != topics.size())
    throw DataError("profile mixture and topic counts differ");
  if ((mixture.array() < 0.0).any() || std::fabs(mixture.sum() - 1.0) > 1e-9)
    throw DataError("profile mixture weights must be non-negative and sum to 1");
  for (std::size_t k = 0; k < topics.size(); ++k) {
    const auto& t = topics[k];
    if (static_cast<std::size_t>(t.size()) != vocabulary_size)
      throw DataError(fmt::format("topic {} does not cover the vocabulary", k));
    if ((t.array() < 0.0).any() || !(t.sum() > 0.0))
      throw DataError(fmt::format("degenerate topic distribution {}", k));
    if (std::fabs(t.sum() - 1.0) > 1e-9) throw DataError(fmt::format("topic {} is not normalized", k));
  }
  if (min_length < 1 || min_length > max_length) throw DataError("profile sentence length range is invalid");
}

std::vector<std::string> synthetic_vocabulary(std::size_t size, std::uint64_t seed) {
  static constexpr std::string_view kOnsets[] = {"b", "d", "f", "g", "h", "k", "l", "m", "n", "p", "r", "s",
                                                 "t", "w", "z", "br", "dr", "fl", "gr", "kl", "pr", "st", "tr", "sch"};
  static constexpr std::string_view kVowels[] = {"a", "e", "i", "o", "u", "ei", "au", "ie"};
  Rng rng(seed);
  std::set<std::string> seen;
  std::vector<std::string> words;
  words.reserve(size);
  while (words.size() < size) {
    const auto target = 2 + rng.below(11);  // 2..12 letters
    std::string w;
    while (w.size() < target) {
      if (rng.below(4) != 0) w += kOnsets[rng.below(std::size(kOnsets))];
      w += kVowels[rng.below(std::size(kVowels))];
    }
    w.resize(target);
    if (seen.insert(w).second) words.push_back(std::move(w));
  }
  return words;
}

Eigen::VectorXd zipf_topic(std::size_t vocabulary_size, double exponent, std::uint64_t seed) {
  std::vector<std::size_t> order(vocabulary_size);
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  Eigen::VectorXd p(static_cast<Eigen::Index>(vocabulary_size));
  for (std::size_t rank = 0; rank < order.size(); ++rank)
    p(static_cast<Eigen::Index>(order[rank])) = std::pow(static_cast<double>(rank + 1), -exponent);
  return p / p.sum();
}

Corpus generate_corpus(const GenerativeProfile& profile, std::span<const std::string> vocabulary,
                       std::size_t tokens) {
  if (tokens == 0) throw DataError("token budget must be positive");
  SentenceSampler sampler(profile, vocabulary);
  Corpus corpus;
  while (corpus.token_count() < tokens) {
    auto words = sampler.next();
    words.resize(std::min(words.size(), tokens - corpus.token_count()));
    corpus.add_sentence(words);
  }
  return corpus;
}

std::vector<Sentence> generate_sentences(const GenerativeProfile& profile, std::span<const std::string> vocabulary,
                                         std::size_t count, const std::string& id_prefix) {
  SentenceSampler sampler(profile, vocabulary);
  const auto width = std::to_string(count).size();
  std::vector<Sentence> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back({fmt::format("{}{:0{}}", id_prefix, i + 1, width), sampler.next()});
  return out;
}

std::pair<Corpus, Corpus> generate_corpus_pair(const GenerativeProfile& a, const GenerativeProfile& b,
                                               std::span<const std::string> vocabulary,
                                               std::size_t tokens_per_corpus) {
  return {generate_corpus(a, vocabulary, tokens_per_corpus), generate_corpus(b, vocabulary, tokens_per_corpus)};
}

double unigram_js_divergence(const Corpus& a, const Corpus& b) {
  if (a.token_count() == 0 || b.token_count() == 0) throw DataError("empty corpus");
  std::map<std::string, std::pair<double, double>> p;
  for (const auto& t : a.tokens) p[t].first += 1.0;
  for (const auto& t : b.tokens) p[t].second += 1.0;
  const double na = static_cast<double>(a.token_count()), nb = static_cast<double>(b.token_count());
  double js = 0.0;
  for (const auto& [w, c] : p) {
    const double pa = c.first / na, pb = c.second / nb, m = 0.5 * (pa + pb);
    if (pa > 0) js += 0.5 * pa * std::log2(pa / m);
    if (pb > 0) js += 0.5 * pb * std::log2(pb / m);
  }
  return js;
}

void PlantedModel::validate() const {
  if (predictors.size() != betas.size()) throw Error("planted model: predictors and betas differ in length");
  if (!(noise_sigma > 0.0)) throw Error("planted model: noise sigma must be positive");
  if (measure != "ffd" && measure != "gd" && measure != "tvd") throw Error("planted model: unknown measure");
}

std::vector<ViewingMeasures> plant_fixations(const PredictorTable& predictors, const PlantedModel& model,
                                             double floor_ms) {
  model.validate();
  std::vector<std::size_t> cols;
  for (const auto& name : model.predictors) {
    auto c = predictors.column(name);
    if (!c) throw DataError(fmt::format("planted predictor '{}' is not in the predictor table", name));
    cols.push_back(*c);
  }
  Rng rng(model.seed);
  std::vector<ViewingMeasures> out;
  for (const auto& row : predictors.rows()) {
    ViewingMeasures m;
    m.trial_id = "sim-" + row.sentence_id;
    m.sentence_id = row.sentence_id;
    m.word_index = row.position;
    // one draw per row keeps the noise stream aligned with the table
    const double noise = rng.normal();
    bool complete = true;
    double value = model.intercept;
    for (std::size_t i = 0; i < cols.size(); ++i) {
      const auto& v = row.values[cols[i]];
      if (!v || !std::isfinite(*v)) {
        complete = false;
        break;
      }
      value += model.betas[i] * *v;
    }
    if (complete) {
      if (model.lognormal_noise) {
        // multiplicative noise with unit-mean factor and sd ~ sigma/value
        const double s = std::sqrt(std::log1p(std::pow(model.noise_sigma / std::max(value, 1.0), 2)));
        value *= std::exp(s * noise - 0.5 * s * s);
      } else {
        value += model.noise_sigma * noise;
      }
      value = std::max(value, floor_ms);
      std::optional<double>& cell = model.measure == "ffd" ? m.ffd : model.measure == "gd" ? m.gd : m.tvd;
      cell = value;
    }
    out.push_back(std::move(m));
  }
  return out;
}

SimulationConfig SimulationConfig::desk_scale() {
  SimulationConfig c;
  c.train.min_count = 3;
  c.planted.predictors = {"length", "wf_a", "wf_b", "wp_a", "wp_b"};
  c.planted.betas = {13.59, -5.0, 0.0, -20000.0, 0.0};
  c.planted.intercept = 250.0;
  c.planted.noise_sigma = 40.0;
  c.planted.measure = "ffd";
  return c;
}

bool SeedReport::all_inside() const {
  return failed_stage.empty() &&
         std::all_of(coefficients.begin(), coefficients.end(), [](const auto& c) { return c.inside; });
}

SeedReport run_seed(std::uint64_t seed, const SimulationConfig& config) {
  SeedReport report;
  report.seed = seed;
  std::string stage = "generate";
  try {
    const auto vocabulary = synthetic_vocabulary(config.vocabulary_size, derive_seed(seed, 1));
    const std::size_t topic_count = config.mixture_a.size();
    std::vector<Eigen::VectorXd> topics;
    for (std::size_t k = 0; k < topic_count; ++k)
      topics.push_back(zipf_topic(config.vocabulary_size, config.zipf_exponent, derive_seed(seed, 10 + k)));
    const auto profile_a = make_profile(topics, config.mixture_a, derive_seed(seed, 2));
    const auto profile_b = make_profile(topics, config.mixture_b, derive_seed(seed, 3));
    const auto profile_pool = make_profile(topics, config.mixture_pool, derive_seed(seed, 4));
    const auto [corpus_a, corpus_b] = generate_corpus_pair(profile_a, profile_b, vocabulary, config.tokens_per_corpus);
    const auto pool = generate_sentences(profile_pool, vocabulary, config.pool_sentences, "p");

    stage = "train";
    auto train_a = config.train;
    train_a.seed = derive_seed(seed, 5);
    train_a.workers = 1;
    auto train_b = train_a;
    train_b.seed = derive_seed(seed, 6);
    const auto model_a = train<float>(corpus_a, train_a);
    const auto model_b = train<float>(corpus_b, train_b);
    const FrequencyTable freq_a = compute_frequency(corpus_a, {});
    const FrequencyTable freq_b = compute_frequency(corpus_b, {});

    stage = "score";
    const std::vector<NamedModel<float>> models{{"a", &model_a}, {"b", &model_b}};
    const auto scores = score_corpus<float>(models, pool);

    stage = "select";
    const std::vector<PerplexityRanking> rankings{rank_sentences(scores, "a"), rank_sentences(scores, "b")};
    std::map<std::string, std::vector<std::string>> tokens;
    for (const auto& s : pool) tokens.emplace(s.id, s.tokens);
    const auto selection = select_discriminative(rankings, tokens, config.selection);
    const std::vector<NamedFrequency> freqs{{"a", &freq_a}, {"b", &freq_b}};
    report.stimuli = build_stimulus_set(selection, scores, freqs);
    report.selected_sentences = selection.sentences.size();
    std::vector<std::string> pool_ids;
    for (const auto& s : pool)
      if (within_bounds(s.tokens, config.selection)) pool_ids.push_back(s.id);
    const auto pool_stimuli = build_stimulus_set(pool_ids, scores, freqs);
    const auto pool_check = verify_multicollinearity(pool_stimuli, config.selection);
    const auto selected_check = verify_multicollinearity(report.stimuli, config.selection);
    const auto wp_r = [](const MulticollinearityReport& r) {
      const auto& names = r.correlations.names;
      const auto a = std::find(names.begin(), names.end(), "wp_a") - names.begin();
      const auto b = std::find(names.begin(), names.end(), "wp_b") - names.begin();
      return r.correlations.r(a, b);
    };
    report.pool_wp_r = wp_r(pool_check);
    report.selected_wp_r = wp_r(selected_check);
    report.gate_pass = selected_check.pass;

    stage = "plant";
    const auto predictors = report.stimuli.predictors();
    auto planted = config.planted;
    planted.seed = derive_seed(seed, 7);
    const auto measures = plant_fixations(predictors, planted, config.exclusion.min_fixation_ms + 1.0);
    const auto analysis = apply_exclusions(measures, predictors, config.exclusion);

    stage = "regress";
    std::vector<std::size_t> cols;
    for (const auto& name : planted.predictors) cols.push_back(*predictors.column(name));
    std::vector<const AnalysisRow*> rows;
    for (const auto& row : analysis.rows) {
      if (row.measures.excluded) continue;
      const auto& cell = planted.measure == "ffd" ? row.measures.ffd
                         : planted.measure == "gd" ? row.measures.gd
                                                   : row.measures.tvd;
      if (cell) rows.push_back(&row);
    }
    DesignMatrix design;
    design.predictor_names = planted.predictors;
    design.response_name = planted.measure;
    design.predictors.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
    design.response.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto& m = rows[i]->measures;
      design.response(static_cast<Eigen::Index>(i)) =
          *(planted.measure == "ffd" ? m.ffd : planted.measure == "gd" ? m.gd : m.tvd);
      for (std::size_t j = 0; j < cols.size(); ++j)
        design.predictors(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = *rows[i]->predictors[cols[j]];
    }
    report.analysis_rows = rows.size();
    report.regression = ols_fit(design);
    for (std::size_t i = 0; i < report.regression.coefficients.size(); ++i) {
      const auto& c = report.regression.coefficients[i];
      CoefficientCheck check;
      check.name = c.name;
      check.planted = i == 0 ? planted.intercept : planted.betas[i - 1];
      check.beta = c.beta;
      check.se = c.se;
      check.t = c.t;
      std::tie(check.ci_low, check.ci_high) = report.regression.confidence_interval(i, 0.95);
      check.inside = check.ci_low <= check.planted && check.planted <= check.ci_high;
      report.coefficients.push_back(check);
    }
  } catch (const std::exception& e) {
    report.failed_stage = stage;
    report.error = e.what();
  }
  return report;
}

std::vector<SeedReport> end_to_end_check(std::span<const std::uint64_t> seeds, const SimulationConfig& config,
                                         int parallel_seeds) {
  std::vector<SeedReport> reports(seeds.size());
  const auto threads = static_cast<std::size_t>(std::max(1, parallel_seeds));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < seeds.size(); i = next++) reports[i] = run_seed(seeds[i], config);
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < std::min(threads, seeds.size()); ++t) pool.emplace_back(worker);
  }
  return reports;
}

std::string write_seed_reports_tsv(std::span<const SeedReport> reports) {
  std::string out = "seed\tterm\tplanted\tbeta\tse\tt\tci_low\tci_high\tinside\n";
  for (const auto& r : reports)
    for (const auto& c : r.coefficients)
      out += fmt::format("{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n", r.seed, c.name, tsv::format_number(c.planted),
                         tsv::format_number(c.beta), tsv::format_number(c.se), tsv::format_number(c.t),
                         tsv::format_number(c.ci_low), tsv::format_number(c.ci_high), c.inside ? 1 : 0);
  return out;
}

std::string write_simulation_summary_tsv(std::span<const SeedReport> reports) {
  std::string out =
      "seed\tstatus\tstage\tselected_sentences\tanalysis_rows\tpool_wp_r\tselected_wp_r\tgate_pass\tall_inside\n";
  std::map<std::string, std::pair<int, int>> coverage;
  std::vector<std::string> order;
  for (const auto& r : reports) {
    const bool ok = r.failed_stage.empty();
    out += fmt::format("{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n", r.seed, ok ? "ok" : "error",
                       ok ? "NA" : r.failed_stage, r.selected_sentences, r.analysis_rows,
                       tsv::format_number(r.pool_wp_r), tsv::format_number(r.selected_wp_r), r.gate_pass ? 1 : 0,
                       r.all_inside() ? 1 : 0);
    for (const auto& c : r.coefficients) {
      if (!coverage.count(c.name)) order.push_back(c.name);
      auto& [inside, total] = coverage[c.name];
      inside += c.inside ? 1 : 0;
      ++total;
    }
  }
  out += "# coverage";
  for (const auto& name : order) out += fmt::format(" {}={}/{}", name, coverage[name].first, coverage[name].second);
  out += '\n';
  return out;
}

}  // namespace eyecorp
