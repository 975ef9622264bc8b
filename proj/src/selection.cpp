#include "eyecorp/selection.hpp"

#include <cmath>
#include <limits>
#include <set>

#include <fmt/format.h>

#include "eyecorp/error.hpp"
#include "eyecorp/tsv.hpp"

namespace eyecorp {

int PerplexityRanking::rank_of(const std::string& sentence_id) const {
  for (const auto& e : entries)
    if (e.sentence_id == sentence_id) return e.rank;
  throw DataError(fmt::format("sentence '{}' is not ranked under model '{}'", sentence_id, model_id));
}

PerplexityRanking rank_sentences(std::span<const SentenceScore> scores, const std::string& model_id) {
  PerplexityRanking ranking;
  ranking.model_id = model_id;
  for (const auto& s : scores) {
    if (s.model_id != model_id) continue;
    if (std::isnan(s.perplexity))
      throw DataError(fmt::format("sentence '{}' has no perplexity under '{}'", s.sentence_id, model_id));
    ranking.entries.push_back({s.sentence_id, s.perplexity, 0});
  }
  std::sort(ranking.entries.begin(), ranking.entries.end(), [](const RankedSentence& a, const RankedSentence& b) {
    if (a.perplexity != b.perplexity) return a.perplexity < b.perplexity;
    return natural_less(a.sentence_id, b.sentence_id);
  });
  for (std::size_t i = 0; i < ranking.entries.size(); ++i) ranking.entries[i].rank = static_cast<int>(i + 1);
  return ranking;
}

void SelectionConfig::validate() const {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw Error("fraction must be in (0, 1]");
  if (min_words < 1 || min_words > max_words) throw Error("word-count bounds must satisfy 1 <= min <= max");
  if (min_len < 1 || min_len > max_len) throw Error("word-length bounds must satisfy 1 <= min <= max");
  if (!(corr_threshold > 0.0 && corr_threshold <= 1.0)) throw Error("correlation threshold must be in (0, 1]");
}

bool within_bounds(std::span<const std::string> tokens, const SelectionConfig& config) {
  const auto n = static_cast<int>(tokens.size());
  if (n < config.min_words || n > config.max_words) return false;
  return std::all_of(tokens.begin(), tokens.end(), [&](const std::string& t) {
    const auto len = static_cast<int>(utf8_length(t));
    return len >= config.min_len && len <= config.max_len;
  });
}

Selection select_discriminative(std::span<const PerplexityRanking> rankings,
                                const std::map<std::string, std::vector<std::string>>& sentence_tokens,
                                const SelectionConfig& config) {
  config.validate();
  if (rankings.size() < 2) throw Error("selection needs rankings for at least two models");
  const std::size_t models = rankings.size();

  // rank table over the sentence set of the first ranking
  std::map<std::string, std::vector<int>> ranks;
  for (const auto& e : rankings[0].entries) ranks[e.sentence_id].assign(models, 0);
  for (std::size_t m = 0; m < models; ++m) {
    if (rankings[m].entries.size() != ranks.size())
      throw DataError(fmt::format("ranking '{}' covers {} sentences, expected {}", rankings[m].model_id,
                                  rankings[m].entries.size(), ranks.size()));
    for (const auto& e : rankings[m].entries) {
      auto it = ranks.find(e.sentence_id);
      if (it == ranks.end())
        throw DataError(fmt::format("sentence '{}' is ranked under '{}' only", e.sentence_id, rankings[m].model_id));
      it->second[m] = e.rank;
    }
  }

  struct Candidate {
    std::string id;
    long long gap;
  };
  std::vector<std::vector<Candidate>> per_model(models);
  Selection selection;
  bool any_gap = false;
  for (const auto& [id, r] : ranks) {
    auto tokens = sentence_tokens.find(id);
    if (tokens == sentence_tokens.end()) throw DataError(fmt::format("no tokens for sentence '{}'", id));
    if (!within_bounds(tokens->second, config)) continue;
    ++selection.candidates;
    std::size_t best = 0;
    long long best_gap = std::numeric_limits<long long>::min();
    for (std::size_t m = 0; m < models; ++m) {
      long long gap = std::numeric_limits<long long>::max();
      for (std::size_t o = 0; o < models; ++o)
        if (o != m) gap = std::min<long long>(gap, static_cast<long long>(r[o]) - r[m]);
      if (gap != 0) any_gap = true;
      if (gap > best_gap) {
        best_gap = gap;
        best = m;
      }
    }
    per_model[best].push_back({id, best_gap});
  }

  selection.quota = static_cast<std::size_t>(std::ceil(config.fraction * static_cast<double>(selection.candidates) - 1e-9));
  selection.non_discriminative = selection.candidates > 0 && !any_gap;
  for (std::size_t m = 0; m < models; ++m) {
    auto& list = per_model[m];
    std::sort(list.begin(), list.end(), [](const Candidate& a, const Candidate& b) {
      if (a.gap != b.gap) return a.gap > b.gap;
      return natural_less(a.id, b.id);
    });
    if (list.size() < selection.quota) selection.short_of_quota = true;
    const std::size_t take = std::min(list.size(), selection.quota);
    for (std::size_t i = 0; i < take; ++i)
      selection.sentences.push_back({list[i].id, rankings[m].model_id, list[i].gap});
  }
  return selection;
}

std::vector<std::string> StimulusSet::sentence_ids() const {
  std::vector<std::string> ids;
  for (const auto& w : words)
    if (ids.empty() || ids.back() != w.sentence_id) ids.push_back(w.sentence_id);
  return ids;
}

std::vector<std::string> StimulusSet::sentence_tokens(const std::string& sentence_id) const {
  std::vector<std::string> tokens;
  for (const auto& w : words)
    if (w.sentence_id == sentence_id) tokens.push_back(w.token);
  return tokens;
}

PredictorTable StimulusSet::predictors() const {
  PredictorTable table;
  table.columns.push_back({"length", PredictorKind::length});
  for (const auto& c : corpus_ids) table.columns.push_back({"wf_" + c, PredictorKind::word_frequency});
  for (const auto& m : model_ids) table.columns.push_back({"wp_" + m, PredictorKind::word_probability});
  std::map<std::string, int> lengths;
  for (const auto& w : words) ++lengths[w.sentence_id];
  for (const auto& w : words) {
    PredictorRow row;
    row.sentence_id = w.sentence_id;
    row.position = w.position;
    row.sentence_length = lengths[w.sentence_id];
    row.token = w.token;
    row.values.push_back(static_cast<double>(w.length));
    row.values.insert(row.values.end(), w.wf.begin(), w.wf.end());
    row.values.insert(row.values.end(), w.wp.begin(), w.wp.end());
    table.add(std::move(row));
  }
  return table;
}

namespace {

StimulusSet build(std::span<const std::pair<std::string, std::string>> chosen, std::span<const SentenceScore> scores,
                  std::span<const NamedFrequency> frequencies) {
  StimulusSet set;
  for (const auto& f : frequencies) set.corpus_ids.push_back(f.id);
  std::map<std::pair<std::string, std::string>, const SentenceScore*> by_key;
  for (const auto& s : scores) {
    if (std::find(set.model_ids.begin(), set.model_ids.end(), s.model_id) == set.model_ids.end())
      set.model_ids.push_back(s.model_id);
    by_key[{s.sentence_id, s.model_id}] = &s;
  }
  for (const auto& [id, model] : chosen) {
    std::vector<const SentenceScore*> per_model;
    for (const auto& m : set.model_ids) {
      auto it = by_key.find({id, m});
      if (it == by_key.end()) throw DataError(fmt::format("sentence '{}' has no scores under '{}'", id, m));
      per_model.push_back(it->second);
    }
    const auto& tokens = per_model.front()->tokens;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      StimulusWord w;
      w.sentence_id = id;
      w.position = static_cast<int>(i);
      w.token = tokens[i];
      w.length = static_cast<int>(utf8_length(tokens[i]));
      for (const auto& f : frequencies) {
        const auto e = f.table->lookup(tokens[i]);
        w.wf.push_back(e ? std::optional<double>(e->log10_pm) : std::nullopt);
      }
      for (const auto* s : per_model) {
        if (s->tokens.size() != tokens.size() || s->tokens[i] != tokens[i])
          throw DataError(fmt::format("sentence '{}' is tokenized differently across models", id));
        w.wp.push_back(s->word_probs[i]);
      }
      w.selected_for = model;
      set.words.push_back(std::move(w));
    }
  }
  return set;
}

}  // namespace

StimulusSet build_stimulus_set(const Selection& selection, std::span<const SentenceScore> scores,
                               std::span<const NamedFrequency> frequencies) {
  std::vector<std::pair<std::string, std::string>> chosen;
  for (const auto& s : selection.sentences) chosen.emplace_back(s.sentence_id, s.model_id);
  std::sort(chosen.begin(), chosen.end(), [](const auto& a, const auto& b) { return natural_less(a.first, b.first); });
  return build(chosen, scores, frequencies);
}

StimulusSet build_stimulus_set(std::span<const std::string> sentence_ids, std::span<const SentenceScore> scores,
                               std::span<const NamedFrequency> frequencies) {
  std::vector<std::pair<std::string, std::string>> chosen;
  for (const auto& id : sentence_ids) chosen.emplace_back(id, "NA");
  return build(chosen, scores, frequencies);
}

std::string write_stimuli_tsv(const StimulusSet& stimuli) {
  std::string out = "sentence_id\tposition\ttoken\tlength";
  for (const auto& c : stimuli.corpus_ids) out += "\twf_" + c;
  for (const auto& m : stimuli.model_ids) out += "\twp_" + m;
  out += "\tselected_for\n";
  for (const auto& w : stimuli.words) {
    out += fmt::format("{}\t{}\t{}\t{}", w.sentence_id, w.position, w.token, w.length);
    for (const auto& v : w.wf) out += "\t" + tsv::format_optional(v);
    for (const auto& v : w.wp) out += "\t" + tsv::format_optional(v);
    out += "\t" + w.selected_for + "\n";
  }
  return out;
}

StimulusSet read_stimuli_tsv(std::string_view text, const std::string& source) {
  const auto table = tsv::parse(text, source);
  StimulusSet set;
  std::vector<std::size_t> wf_cols, wp_cols;
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    const auto& h = table.header[i];
    if (h.starts_with("wf_")) {
      set.corpus_ids.push_back(h.substr(3));
      wf_cols.push_back(i);
    } else if (h.starts_with("wp_")) {
      set.model_ids.push_back(h.substr(3));
      wp_cols.push_back(i);
    }
  }
  const auto c_sid = table.column("sentence_id"), c_pos = table.column("position"), c_tok = table.column("token"),
             c_len = table.column("length"), c_sel = table.column("selected_for");
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    StimulusWord w;
    w.sentence_id = table.rows[r][c_sid];
    w.position = static_cast<int>(table.integer(r, c_pos));
    w.token = table.rows[r][c_tok];
    w.length = static_cast<int>(table.integer(r, c_len));
    for (auto c : wf_cols) w.wf.push_back(table.optional_number(r, c));
    for (auto c : wp_cols) {
      auto v = table.optional_number(r, c);
      if (v && !(*v >= 0.0 && *v <= 1.0)) throw DataError(fmt::format("{}: wp outside [0,1]", table.where(r)));
      w.wp.push_back(v);
    }
    w.selected_for = table.rows[r][c_sel];
    const bool new_sentence = set.words.empty() || set.words.back().sentence_id != w.sentence_id;
    const int expected = new_sentence ? 0 : set.words.back().position + 1;
    if (w.position != expected)
      throw DataError(fmt::format("{}: expected position {} for sentence '{}'", table.where(r), expected,
                                  w.sentence_id));
    set.words.push_back(std::move(w));
  }
  return set;
}

std::string write_zero_wp_tsv(std::span<const ZeroWpFlag> flags) {
  std::string out = "sentence_id\tposition\ttoken\tstate\trank\tcandidate\twp\n";
  for (const auto& f : flags) {
    const char* state = f.undefined ? "undefined" : "zero";
    if (f.candidates.empty()) out += fmt::format("{}\t{}\t{}\t{}\tNA\tNA\tNA\n", f.sentence_id, f.position, f.token, state);
    for (std::size_t i = 0; i < f.candidates.size(); ++i)
      out += fmt::format("{}\t{}\t{}\t{}\t{}\t{}\t{}\n", f.sentence_id, f.position, f.token, state, i + 1,
                         f.candidates[i].word, tsv::format_number(f.candidates[i].wp));
  }
  return out;
}

MulticollinearityReport verify_multicollinearity(const std::vector<std::string>& names,
                                                 const Eigen::MatrixXd& columns,
                                                 std::span<const std::string> wp_columns, double threshold) {
  if (columns.rows() < 3) throw DataError("multicollinearity check needs at least 3 rows");
  for (Eigen::Index j = 0; j < columns.cols(); ++j) {
    const auto col = columns.col(j);
    if (!col.allFinite())
      throw DataError(fmt::format("column '{}' has missing values", names[static_cast<std::size_t>(j)]));
    if ((col.array() == col(0)).all())
      throw DataError(fmt::format("constant predictor column '{}'", names[static_cast<std::size_t>(j)]));
  }
  MulticollinearityReport report;
  report.rows_used = static_cast<std::size_t>(columns.rows());
  report.correlations = correlation_table(names, columns);
  report.vif = vif(columns);
  std::vector<Eigen::Index> wp;
  for (const auto& name : wp_columns) {
    auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw Error(fmt::format("no column named '{}'", name));
    wp.push_back(static_cast<Eigen::Index>(it - names.begin()));
  }
  report.pass = true;
  for (std::size_t a = 0; a < wp.size(); ++a)
    for (std::size_t b = a + 1; b < wp.size(); ++b) {
      const double r = report.correlations.r(wp[a], wp[b]);
      if (std::isnan(r)) {
        report.pass = false;
        continue;
      }
      report.max_abs_wp_r = std::max(report.max_abs_wp_r, std::fabs(r));
      if (!(std::fabs(r) < threshold)) report.pass = false;
    }
  return report;
}

MulticollinearityReport verify_multicollinearity(const StimulusSet& stimuli, const SelectionConfig& config) {
  const auto table = stimuli.predictors();
  std::vector<std::string> names;
  for (const auto& c : table.columns) names.push_back(c.name);
  std::vector<std::string> wp_names;
  for (auto c : table.columns_of(PredictorKind::word_probability)) wp_names.push_back(table.columns[c].name);
  const auto wp_cols = table.columns_of(PredictorKind::word_probability);
  std::vector<const PredictorRow*> rows;
  for (const auto& row : table.rows()) {
    if (row.position == 0 || row.position == row.sentence_length - 1) continue;
    bool ok = std::all_of(row.values.begin(), row.values.end(), [](const auto& v) { return v.has_value(); });
    for (auto c : wp_cols) ok = ok && *row.values[c] > 0.0;
    if (ok) rows.push_back(&row);
  }
  Eigen::MatrixXd columns(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(names.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < names.size(); ++j)
      columns(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = *rows[i]->values[j];
  return verify_multicollinearity(names, columns, wp_names, config.corr_threshold);
}

std::string write_multicollinearity_tsv(const MulticollinearityReport& report) {
  const auto& c = report.correlations;
  std::string out = "variable";
  for (const auto& n : c.names) out += "\t" + n;
  out += "\tvif\n";
  for (std::size_t i = 0; i < c.names.size(); ++i) {
    out += c.names[i];
    for (std::size_t j = 0; j < c.names.size(); ++j) {
      const auto a = static_cast<Eigen::Index>(i), b = static_cast<Eigen::Index>(j);
      out += '\t';
      if (i < j) out += tsv::format_number(c.r(a, b));
      else if (i > j) out += tsv::format_number(c.p(a, b));
    }
    out += "\t" + tsv::format_number(report.vif(static_cast<Eigen::Index>(i))) + "\n";
  }
  out += fmt::format("# rows={} max_abs_wp_r={} pass={}\n", report.rows_used, tsv::format_number(report.max_abs_wp_r),
                     report.pass ? 1 : 0);
  return out;
}

}  // namespace eyecorp
