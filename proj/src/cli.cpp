#include "eyecorp/cli.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "eyecorp/corpus.hpp"
#include "eyecorp/embedding.hpp"
#include "eyecorp/error.hpp"
#include "eyecorp/eye_movement.hpp"
#include "eyecorp/scoring.hpp"
#include "eyecorp/selection.hpp"
#include "eyecorp/simulator.hpp"
#include "eyecorp/stats.hpp"
#include "eyecorp/tsv.hpp"
#include "eyecorp/version.hpp"

namespace eyecorp::cli {
namespace {

namespace fs = std::filesystem;

std::string banner() { return fmt::format("# eyecorp {}\n", kVersion); }

void write_output(const fs::path& path, std::string_view body, bool with_banner = true) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  tsv::write_text(path, with_banner ? banner() + std::string(body) : std::string(body));
}

// Config keys without a section apply to the subcommand being run.
class SubcommandConfig : public CLI::ConfigINI {
 public:
  explicit SubcommandConfig(const CLI::App* app) : app_(app) {}

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    auto items = CLI::ConfigINI::from_config(input);
    const auto subs = app_->get_subcommands();
    if (subs.empty()) return items;
    const std::string active = subs.front()->get_name();
    for (auto& item : items)
      if (item.parents.empty() || (item.parents.size() == 1 && item.parents.front() == "default"))
        item.parents = {active};
    return items;
  }

 private:
  const CLI::App* app_;
};

struct Named {
  std::string id;
  std::string path;
};

Named parse_named(const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos) return {fs::path(spec).stem().string(), spec};
  if (eq == 0 || eq + 1 == spec.size()) throw Error(fmt::format("expected id=path, got '{}'", spec));
  return {spec.substr(0, eq), spec.substr(eq + 1)};
}

std::vector<std::uint64_t> parse_seeds(const std::string& spec) {
  std::vector<std::uint64_t> seeds;
  const auto number = [&](std::string_view s) {
    std::uint64_t v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) throw Error(fmt::format("invalid seed list '{}'", spec));
    return v;
  };
  for (const auto& part : tsv::split(spec, ',')) {
    const auto dots = part.find("..");
    if (dots == std::string::npos) {
      seeds.push_back(number(part));
      continue;
    }
    const auto lo = number(std::string_view(part).substr(0, dots));
    const auto hi = number(std::string_view(part).substr(dots + 2));
    if (lo > hi) throw Error(fmt::format("invalid seed range '{}'", part));
    for (auto s = lo; s <= hi; ++s) seeds.push_back(s);
  }
  if (seeds.empty()) throw Error("no seeds given");
  return seeds;
}

struct IngestArgs {
  std::string input, format = "auto", corpus_out, freq_out, stem_rules;
  int confidence = 80;
};

void run_ingest(const IngestArgs& a, std::ostream& err) {
  const auto rules = parse_suffix_rules(a.stem_rules);
  const auto text = tsv::read_text(a.input);
  const bool as_tsv = a.format == "tsv" || (a.format == "auto" && fs::path(a.input).extension() == ".tsv");
  const auto raw = as_tsv ? read_token_tsv(text, a.input) : read_plain_text(text);
  const auto kept = filter_by_confidence(raw, a.confidence);
  const auto corpus = make_corpus(kept, rules);
  const auto freq = compute_frequency(corpus, {});
  write_output(a.corpus_out, write_corpus(corpus), false);
  if (!a.freq_out.empty()) write_output(a.freq_out, write_frequency_tsv(freq));
  err << fmt::format("ingest: {} of {} tokens kept, {} sentences, {} types\n", kept.size(), raw.size(),
                     corpus.sentence_count(), freq.entries().size());
}

struct TrainArgs {
  std::string corpus, out, loss_out, precision = "float";
  TrainConfig config;
};

template <class Scalar>
void train_and_save(const TrainArgs& a, const Corpus& corpus, std::ostream& err) {
  TrainingLog log;
  const auto model = train<Scalar>(corpus, a.config, &log);
  save_model(model, a.out);
  if (!a.loss_out.empty()) {
    std::string body = "epoch\tmean_loss\tpairs\n";
    for (std::size_t e = 0; e < log.epoch_mean_loss.size(); ++e)
      body += fmt::format("{}\t{}\t{}\n", e + 1, tsv::format_number(log.epoch_mean_loss[e]), log.pairs_per_epoch);
    write_output(a.loss_out, body);
  }
  err << fmt::format("train: |V| = {}, dim = {}, final epoch loss {:.4f}\n", model.vocab.size(), model.dim(),
                     log.epoch_mean_loss.empty() ? 0.0 : log.epoch_mean_loss.back());
}

void run_train(const TrainArgs& a, std::ostream& err) {
  a.config.validate();
  const auto corpus = read_corpus(tsv::read_text(a.corpus));
  if (a.precision == "double")
    train_and_save<double>(a, corpus, err);
  else
    train_and_save<float>(a, corpus, err);
}

struct ScoreArgs {
  std::vector<std::string> models;
  std::string sentences, out, stem_rules;
};

void run_score(const ScoreArgs& a, std::ostream& err) {
  const auto rules = parse_suffix_rules(a.stem_rules);
  std::vector<SkipGramModel<float>> loaded;
  std::vector<std::string> ids;
  loaded.reserve(a.models.size());
  for (const auto& spec : a.models) {
    const auto named = parse_named(spec);
    if (std::find(ids.begin(), ids.end(), named.id) != ids.end())
      throw Error(fmt::format("duplicate model id '{}'", named.id));
    ids.push_back(named.id);
    loaded.push_back(load_model<float>(named.path));
  }
  std::vector<NamedModel<float>> models;
  for (std::size_t i = 0; i < loaded.size(); ++i) models.push_back({ids[i], &loaded[i]});
  const auto sentences = read_sentences(tsv::read_text(a.sentences), rules);
  if (sentences.empty()) throw DataError(fmt::format("{}: no sentences", a.sentences));
  const auto scores = score_corpus<float>(models, sentences);
  write_output(a.out, write_scores_tsv(scores));
  const auto flagged = std::count_if(scores.begin(), scores.end(), [](const auto& s) { return s.flagged; });
  err << fmt::format("score: {} sentences x {} models, {} rows flagged\n", sentences.size(), models.size(), flagged);
}

struct SelectArgs {
  std::string scores, out, report, correlations, zero_wp_out;
  std::vector<std::string> freqs, models;
  int top_k = 5;
  SelectionConfig config;
};

void run_select(const SelectArgs& a, std::ostream& err) {
  a.config.validate();
  const auto scores = read_scores_tsv(tsv::read_text(a.scores), a.scores);
  std::vector<std::string> model_ids;
  std::map<std::string, std::vector<std::string>> tokens;
  for (const auto& s : scores) {
    if (std::find(model_ids.begin(), model_ids.end(), s.model_id) == model_ids.end()) model_ids.push_back(s.model_id);
    tokens.emplace(s.sentence_id, s.tokens);
  }
  std::vector<PerplexityRanking> rankings;
  for (const auto& id : model_ids) rankings.push_back(rank_sentences(scores, id));

  std::vector<FrequencyTable> tables;
  std::vector<std::string> freq_ids;
  tables.reserve(a.freqs.size());
  for (const auto& spec : a.freqs) {
    const auto named = parse_named(spec);
    freq_ids.push_back(named.id);
    tables.push_back(read_frequency_tsv(tsv::read_text(named.path), named.path));
  }
  std::vector<NamedFrequency> freqs;
  for (std::size_t i = 0; i < tables.size(); ++i) freqs.push_back({freq_ids[i], &tables[i]});

  const auto selection = select_discriminative(rankings, tokens, a.config);
  const auto stimuli = build_stimulus_set(selection, scores, freqs);
  write_output(a.out, write_stimuli_tsv(stimuli));
  if (selection.short_of_quota) err << "select: warning: some model received fewer sentences than its quota\n";
  if (selection.non_discriminative) err << "select: warning: the rankings do not discriminate between the models\n";

  if (!a.report.empty() || !a.correlations.empty()) {
    const auto check = verify_multicollinearity(stimuli, a.config);
    if (!a.report.empty()) write_output(a.report, write_multicollinearity_tsv(check));
    if (!a.correlations.empty()) write_output(a.correlations, correlation_tsv(check.correlations));
    err << fmt::format("select: max |r(WP)| = {:.4f} over {} rows: {}\n", check.max_abs_wp_r, check.rows_used,
                       check.pass ? "pass" : "FAIL");
  }
  if (!a.zero_wp_out.empty()) {
    std::vector<ZeroWpFlag> flags;
    for (const auto& spec : a.models) {
      const auto named = parse_named(spec);
      const auto model = load_model<float>(named.path);
      auto f = flag_zero_wp(stimuli, model, named.id, a.top_k);
      flags.insert(flags.end(), f.begin(), f.end());
    }
    write_output(a.zero_wp_out, write_zero_wp_tsv(flags));
  }
  err << fmt::format("select: {} of {} candidate sentences selected (quota {} per model)\n",
                     selection.sentences.size(), selection.candidates, selection.quota);
}

struct MeasuresArgs {
  std::string fixations, stimuli, layout, out, analysis_out;
  bool rightward_only = false;
  ExclusionConfig exclusion;
};

void run_measures(const MeasuresArgs& a, std::ostream& err) {
  a.exclusion.validate();
  std::map<std::string, SentenceLayout> layouts;
  if (!a.layout.empty()) layouts = read_layout_tsv(tsv::read_text(a.layout), a.layout);
  const auto fixations =
      read_fixations_tsv(tsv::read_text(a.fixations), a.fixations, a.layout.empty() ? nullptr : &layouts);
  const auto measures = measures_from_fixations(fixations, a.exclusion, {a.rightward_only});
  const auto stimuli = read_stimuli_tsv(tsv::read_text(a.stimuli), a.stimuli);
  const auto analysis = apply_exclusions(measures, stimuli.predictors(), a.exclusion);
  std::vector<ViewingMeasures> rows;
  rows.reserve(analysis.rows.size());
  for (const auto& r : analysis.rows) rows.push_back(r.measures);
  write_output(a.out, write_measures_tsv(rows));
  if (!a.analysis_out.empty()) write_output(a.analysis_out, write_analysis_tsv(analysis));
  const auto excluded = std::count_if(rows.begin(), rows.end(), [](const auto& m) { return m.excluded; });
  err << fmt::format("measures: {} word records, {} excluded\n", rows.size(), excluded);
}

struct RegressArgs {
  std::string table, response = "ffd", out;
  std::vector<std::string> predictors;
};

void run_regress(const RegressArgs& a, std::ostream& err) {
  if (a.response != "ffd" && a.response != "gd" && a.response != "tvd")
    throw Error(fmt::format("unknown response '{}' (expected ffd, gd or tvd)", a.response));
  const auto table = tsv::read_file(a.table);
  const auto c_resp = table.column(a.response);
  const auto c_ex = table.column("excluded");
  std::vector<std::string> names = a.predictors;
  if (names.empty()) {
    const auto first = table.column("reason") + 1;
    names.assign(table.header.begin() + static_cast<std::ptrdiff_t>(first), table.header.end());
  }
  if (names.empty()) throw DataError(fmt::format("{}: no predictor columns", a.table));
  std::vector<std::size_t> cols;
  for (const auto& n : names) cols.push_back(table.column(n));

  std::vector<std::size_t> used;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    if (table.integer(r, c_ex) != 0) continue;
    if (!table.optional_number(r, c_resp)) continue;
    if (std::all_of(cols.begin(), cols.end(), [&](std::size_t c) { return table.optional_number(r, c).has_value(); }))
      used.push_back(r);
  }
  DesignMatrix design;
  design.predictor_names = names;
  design.response_name = a.response;
  design.predictors.resize(static_cast<Eigen::Index>(used.size()), static_cast<Eigen::Index>(cols.size()));
  design.response.resize(static_cast<Eigen::Index>(used.size()));
  for (std::size_t i = 0; i < used.size(); ++i) {
    design.response(static_cast<Eigen::Index>(i)) = *table.optional_number(used[i], c_resp);
    for (std::size_t j = 0; j < cols.size(); ++j)
      design.predictors(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          *table.optional_number(used[i], cols[j]);
  }
  const std::vector<RegressionResult> results{ols_fit(design)};
  const fs::path dir(a.out);
  write_output(dir / fmt::format("regression_{}.txt", a.response), regression_report(results));
  write_output(dir / fmt::format("regression_{}.tsv", a.response), regression_tsv(results));
  err << fmt::format("regress: {} on {} rows: {}\n", a.response, used.size(), format_model_line(results.front()));
}

struct SimulateArgs {
  std::string seeds = "1..20", out;
  std::size_t tokens = 200000, vocabulary = 2000, pool = 3000;
  int parallel = 1;
  int epochs = 10;
  int dim = 100;
};

void run_simulate(const SimulateArgs& a, std::ostream& err) {
  const auto seeds = parse_seeds(a.seeds);
  auto config = SimulationConfig::desk_scale();
  config.tokens_per_corpus = a.tokens;
  config.vocabulary_size = a.vocabulary;
  config.pool_sentences = a.pool;
  config.train.epochs = a.epochs;
  config.train.dim = a.dim;
  config.train.validate();
  if (a.parallel < 1) throw Error("--parallel must be at least 1");
  const auto reports = end_to_end_check(seeds, config, a.parallel);
  const fs::path dir(a.out);
  for (const auto& r : reports) {
    write_output(dir / fmt::format("seed_{}_coefficients.tsv", r.seed), write_seed_reports_tsv({&r, 1}));
    if (r.failed_stage.empty()) {
      write_output(dir / fmt::format("seed_{}_stimuli.tsv", r.seed), write_stimuli_tsv(r.stimuli));
      write_output(dir / fmt::format("seed_{}_regression.tsv", r.seed), regression_tsv({&r.regression, 1}));
    } else {
      err << fmt::format("simulate: seed {} failed at {}: {}\n", r.seed, r.failed_stage, r.error);
    }
  }
  write_output(dir / "coefficients.tsv", write_seed_reports_tsv(reports));
  write_output(dir / "summary.tsv", write_simulation_summary_tsv(reports));
  const auto ok = std::count_if(reports.begin(), reports.end(), [](const auto& r) { return r.failed_stage.empty(); });
  err << fmt::format("simulate: {} of {} seeds completed\n", ok, reports.size());
}

struct ReportArgs {
  std::string correlations, out;
  std::vector<std::string> regressions;
};

void run_report(const ReportArgs& a, std::ostream& out) {
  if (a.correlations.empty() && a.regressions.empty()) throw Error("report needs --correlations or --regression");
  std::string body = banner();
  if (!a.correlations.empty()) {
    const auto table = read_correlation_tsv(tsv::read_text(a.correlations), a.correlations);
    body += "Correlations (r above the diagonal, p below)\n\n" + render_correlation_table(table) + "\n";
  }
  for (const auto& path : a.regressions) {
    const auto results = read_regression_tsv(tsv::read_text(path), path);
    body += regression_report(results) + "\n";
  }
  if (a.out.empty())
    out << body;
  else
    write_output(a.out, body, false);
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Individual-corpus language models and eye-movement analysis", "eyecorp"};
  app.set_version_flag("--version", fmt::format("eyecorp {}", kVersion));
  app.require_subcommand(1);
  app.fallthrough();
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.config_formatter(std::make_shared<SubcommandConfig>(&app));
  app.set_config("--config", "", "key=value file; command-line flags take precedence");
  app.option_defaults()->always_capture_default();

  IngestArgs ingest;
  auto* c_ingest = app.add_subcommand("ingest", "clean raw text into a corpus and a frequency table");
  c_ingest->add_option("--input", ingest.input, "raw text, or a token TSV with surface/confidence columns")->required();
  c_ingest->add_option("--format", ingest.format)->check(CLI::IsMember({"auto", "text", "tsv"}));
  c_ingest->add_option("--confidence", ingest.confidence, "minimum token confidence")->check(CLI::Range(0, 100));
  c_ingest->add_option("--stem-rules", ingest.stem_rules, "suffix rules, e.g. en=,e=");
  c_ingest->add_option("--corpus-out", ingest.corpus_out)->required();
  c_ingest->add_option("--freq-out", ingest.freq_out);

  TrainArgs tr;
  auto* c_train = app.add_subcommand("train", "train a skip-gram model");
  c_train->add_option("--corpus", tr.corpus)->required();
  c_train->add_option("--out", tr.out)->required();
  c_train->add_option("--dim", tr.config.dim);
  c_train->add_option("--window", tr.config.window);
  c_train->add_option("--epochs", tr.config.epochs);
  c_train->add_option("--negatives", tr.config.negatives);
  c_train->add_option("--learning-rate", tr.config.learning_rate);
  c_train->add_option("--min-learning-rate", tr.config.min_learning_rate);
  c_train->add_option("--min-count", tr.config.min_count);
  c_train->add_option("--subsample", tr.config.subsample);
  c_train->add_option("--seed", tr.config.seed);
  c_train->add_option("--workers", tr.config.workers, "more than 1 is faster but not reproducible");
  c_train->add_option("--precision", tr.precision)->check(CLI::IsMember({"float", "double"}));
  c_train->add_option("--loss-out", tr.loss_out, "per-epoch mean loss TSV");

  ScoreArgs sc;
  auto* c_score = app.add_subcommand("score", "word probabilities and perplexities under one or more models");
  c_score->add_option("--model", sc.models, "model file, optionally id=path")->required();
  c_score->add_option("--sentences", sc.sentences, "one sentence per line, optionally id<TAB>text")->required();
  c_score->add_option("--stem-rules", sc.stem_rules);
  c_score->add_option("--out", sc.out)->required();

  SelectArgs se;
  auto* c_select = app.add_subcommand("select", "select discriminative stimulus sentences");
  c_select->add_option("--scores", se.scores)->required();
  c_select->add_option("--freq", se.freqs, "frequency table, optionally id=path")->required();
  c_select->add_option("--out", se.out)->required();
  c_select->add_option("--fraction", se.config.fraction);
  c_select->add_option("--corr-threshold", se.config.corr_threshold);
  c_select->add_option("--min-words", se.config.min_words);
  c_select->add_option("--max-words", se.config.max_words);
  c_select->add_option("--min-length", se.config.min_len);
  c_select->add_option("--max-length", se.config.max_len);
  c_select->add_option("--report", se.report, "multicollinearity table TSV");
  c_select->add_option("--correlations", se.correlations, "pairwise correlations TSV");
  c_select->add_option("--model", se.models, "models for zero-WP flagging, id=path");
  c_select->add_option("--zero-wp-out", se.zero_wp_out);
  c_select->add_option("--top-k", se.top_k, "replacement candidates per flagged word");

  MeasuresArgs me;
  auto* c_measures = app.add_subcommand("measures", "viewing measures from a fixation log");
  c_measures->add_option("--fixations", me.fixations)->required();
  c_measures->add_option("--stimuli", me.stimuli)->required();
  c_measures->add_option("--layout", me.layout, "interest areas; the fixation log then holds x coordinates");
  c_measures->add_option("--out", me.out)->required();
  c_measures->add_option("--analysis-out", me.analysis_out, "measures joined with predictors");
  c_measures->add_flag("--rightward-only", me.rightward_only, "only a rightward move ends the first pass");
  c_measures->add_option("--min-fixation", me.exclusion.min_fixation_ms);
  c_measures->add_option("--max-ffd", me.exclusion.max_ffd_ms);
  c_measures->add_option("--max-gd", me.exclusion.max_gd_ms);
  c_measures->add_option("--max-tvd", me.exclusion.max_tvd_ms);
  c_measures->add_flag("!--keep-edge-words", me.exclusion.drop_first_last_word, "keep first and last words of a sentence");
  c_measures->add_flag("!--keep-zero-wp", me.exclusion.drop_zero_wp_or_wf, "keep words with zero or missing WP/WF");

  RegressArgs re;
  auto* c_regress = app.add_subcommand("regress", "multiple regression of a viewing measure");
  c_regress->add_option("--table", re.table, "analysis TSV")->required();
  c_regress->add_option("--response", re.response)->check(CLI::IsMember({"ffd", "gd", "tvd"}));
  c_regress->add_option("--predictors", re.predictors, "comma-separated; default all predictor columns")
      ->delimiter(',');
  c_regress->add_option("--out", re.out, "output directory")->required();

  SimulateArgs si;
  auto* c_sim = app.add_subcommand("simulate", "planted-coefficient recovery on synthetic corpora");
  c_sim->add_option("--seeds", si.seeds, "e.g. 1..20 or 1,4,9");
  c_sim->add_option("--tokens", si.tokens, "tokens per corpus");
  c_sim->add_option("--vocabulary", si.vocabulary);
  c_sim->add_option("--pool", si.pool, "candidate sentences");
  c_sim->add_option("--epochs", si.epochs);
  c_sim->add_option("--dim", si.dim);
  c_sim->add_option("--parallel", si.parallel, "seeds run concurrently");
  c_sim->add_option("--out", si.out, "output directory")->required();

  ReportArgs rp;
  auto* c_report = app.add_subcommand("report", "render stored results as text tables");
  c_report->add_option("--correlations", rp.correlations, "pairwise correlations TSV");
  c_report->add_option("--regression", rp.regressions, "regression TSV (repeatable)");
  c_report->add_option("--out", rp.out, "default: standard output");

  if (argc <= 1) {
    err << app.help();
    return 1;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return 0;
  } catch (const CLI::CallForVersion& e) {
    app.exit(e, out, err);
    return 0;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 1;
  }

  try {
    if (*c_ingest) run_ingest(ingest, err);
    if (*c_train) run_train(tr, err);
    if (*c_score) run_score(sc, err);
    if (*c_select) run_select(se, err);
    if (*c_measures) run_measures(me, err);
    if (*c_regress) run_regress(re, err);
    if (*c_sim) run_simulate(si, err);
    if (*c_report) run_report(rp, out);
  } catch (const DataError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    err << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

}  // namespace eyecorp::cli
