#include "eyecorp/eye_movement.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <fmt/format.h>

#include "eyecorp/error.hpp"
#include "eyecorp/tsv.hpp"

namespace eyecorp {
namespace {

struct NaturalLess {
  bool operator()(const std::string& a, const std::string& b) const { return natural_less(a, b); }
};

using TrialMap = std::map<std::string, std::vector<const FixationEvent*>, NaturalLess>;

TrialMap group_trials(std::span<const FixationEvent> fixations) {
  TrialMap trials;
  for (const auto& f : fixations) {
    auto& events = trials[f.trial_id];
    if (!events.empty()) {
      if (f.seq <= events.back()->seq)
        throw DataError(fmt::format("trial '{}': fixation seq {} does not increase (previous {})", f.trial_id, f.seq,
                                    events.back()->seq));
      if (f.sentence_id != events.front()->sentence_id)
        throw DataError(fmt::format("trial '{}' mixes sentences '{}' and '{}'", f.trial_id,
                                    events.front()->sentence_id, f.sentence_id));
    }
    if (!(f.duration_ms > 0.0))
      throw DataError(fmt::format("trial '{}': fixation duration must be positive", f.trial_id));
    events.push_back(&f);
  }
  return trials;
}

std::string cell(const std::optional<double>& v) { return tsv::format_optional(v); }

}  // namespace

void SentenceLayout::validate() const {
  if (!texts.empty() && texts.size() != words.size()) throw DataError("layout: word texts and intervals differ");
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (!(words[i].start_px < words[i].end_px)) throw DataError(fmt::format("layout: empty interval for word {}", i));
    if (i > 0 && words[i].start_px < words[i - 1].end_px)
      throw DataError(fmt::format("layout: word {} overlaps or precedes word {}", i, i - 1));
  }
}

std::optional<int> map_x_to_word(double x, const SentenceLayout& layout) {
  const auto it = std::upper_bound(layout.words.begin(), layout.words.end(), x,
                                   [](double v, const Interval& iv) { return v < iv.start_px; });
  if (it == layout.words.begin()) return std::nullopt;
  const auto& word = *(it - 1);
  if (x >= word.end_px) return std::nullopt;
  return static_cast<int>(it - 1 - layout.words.begin());
}

std::string_view reason_code(ExclusionReason reason) {
  switch (reason) {
    case ExclusionReason::none: return "NA";
    case ExclusionReason::short_fixation: return "short_fixation";
    case ExclusionReason::edge_word: return "edge_word";
    case ExclusionReason::zero_wp_or_wf: return "zero_wp_or_wf";
    case ExclusionReason::outlier: return "outlier";
  }
  return "NA";
}

ExclusionReason parse_reason(std::string_view code) {
  for (auto r : {ExclusionReason::none, ExclusionReason::short_fixation, ExclusionReason::edge_word,
                 ExclusionReason::zero_wp_or_wf, ExclusionReason::outlier})
    if (reason_code(r) == code) return r;
  throw DataError(fmt::format("unknown exclusion reason '{}'", code));
}

std::vector<ViewingMeasures> compute_measures(std::span<const FixationEvent> fixations,
                                              const MeasureOptions& options) {
  std::vector<ViewingMeasures> out;
  for (const auto& [trial_id, events] : group_trials(fixations)) {
    struct WordState {
      bool seen = false;
      bool in_first_pass = false;
      double ffd = 0.0, gd = 0.0, tvd = 0.0;
    };
    std::map<int, WordState> words;
    for (const auto* f : events) {
      const int w = f->word_index;
      if (w < 0) continue;
      // a fixation elsewhere closes first passes: any other word, or only
      // words to the left of it in rightward-only mode
      for (auto& [index, state] : words) {
        if (!state.in_first_pass || index == w) continue;
        if (!options.rightward_only || w > index) state.in_first_pass = false;
      }
      auto& state = words[w];
      if (!state.seen) {
        state.seen = true;
        state.in_first_pass = true;
        state.ffd = f->duration_ms;
      }
      if (state.in_first_pass) state.gd += f->duration_ms;
      state.tvd += f->duration_ms;
    }
    for (const auto& [index, state] : words) {
      ViewingMeasures m;
      m.trial_id = trial_id;
      m.sentence_id = events.front()->sentence_id;
      m.word_index = index;
      m.ffd = state.ffd;
      m.gd = state.gd;
      m.tvd = state.tvd;
      out.push_back(std::move(m));
    }
  }
  return out;
}

void ExclusionConfig::validate() const {
  if (!(min_fixation_ms >= 0.0)) throw Error("min fixation must be non-negative");
  if (!(min_fixation_ms < max_ffd_ms && min_fixation_ms < max_gd_ms && min_fixation_ms < max_tvd_ms))
    throw Error("minimum fixation duration must be below every outlier cap");
}

std::vector<FixationEvent> drop_short_fixations(std::span<const FixationEvent> fixations, double min_ms) {
  std::vector<FixationEvent> out;
  for (const auto& f : fixations)
    if (f.duration_ms >= min_ms) out.push_back(f);
  return out;
}

std::vector<ViewingMeasures> measures_from_fixations(std::span<const FixationEvent> fixations,
                                                     const ExclusionConfig& config, const MeasureOptions& options) {
  config.validate();
  const auto kept = drop_short_fixations(fixations, config.min_fixation_ms);
  auto measures = compute_measures(kept, options);
  std::set<std::pair<std::string, int>> measured;
  for (const auto& m : measures) measured.emplace(m.trial_id, m.word_index);
  std::set<std::pair<std::string, int>> reported;
  for (const auto& [trial_id, events] : group_trials(fixations)) {
    for (const auto* f : events) {
      if (f->word_index < 0 || measured.count({trial_id, f->word_index})) continue;
      if (!reported.emplace(trial_id, f->word_index).second) continue;
      ViewingMeasures m;
      m.trial_id = trial_id;
      m.sentence_id = f->sentence_id;
      m.word_index = f->word_index;
      m.excluded = true;
      m.reason = ExclusionReason::short_fixation;
      measures.push_back(std::move(m));
    }
  }
  std::stable_sort(measures.begin(), measures.end(), [](const ViewingMeasures& a, const ViewingMeasures& b) {
    if (a.trial_id != b.trial_id) return natural_less(a.trial_id, b.trial_id);
    return a.word_index < b.word_index;
  });
  return measures;
}

AnalysisTable apply_exclusions(std::span<const ViewingMeasures> measures, const PredictorTable& predictors,
                               const ExclusionConfig& config) {
  config.validate();
  AnalysisTable table;
  table.columns = predictors.columns;
  std::vector<std::string> missing;
  const auto wp_cols = predictors.columns_of(PredictorKind::word_probability);
  const auto wf_cols = predictors.columns_of(PredictorKind::word_frequency);
  for (const auto& m : measures) {
    const auto* row = predictors.find(m.sentence_id, m.word_index);
    if (!row) {
      missing.push_back(fmt::format("{}:{}", m.sentence_id, m.word_index));
      continue;
    }
    AnalysisRow out{m, row->values};
    auto& v = out.measures;
    if (!v.excluded) {
      if (config.drop_first_last_word && (m.word_index == 0 || m.word_index == row->sentence_length - 1)) {
        v.excluded = true;
        v.reason = ExclusionReason::edge_word;
      }
    }
    if (!v.excluded && config.drop_zero_wp_or_wf) {
      bool zero = false;
      for (auto c : wp_cols) zero = zero || !row->values[c] || *row->values[c] == 0.0;
      for (auto c : wf_cols) zero = zero || !row->values[c];
      if (zero) {
        v.excluded = true;
        v.reason = ExclusionReason::zero_wp_or_wf;
      }
    }
    if (!v.excluded) {
      if (v.ffd && *v.ffd > config.max_ffd_ms) v.ffd.reset();
      if (v.gd && *v.gd > config.max_gd_ms) v.gd.reset();
      if (v.tvd && *v.tvd > config.max_tvd_ms) v.tvd.reset();
      if (!v.ffd && !v.gd && !v.tvd) {
        v.excluded = true;
        v.reason = ExclusionReason::outlier;
      }
    }
    table.rows.push_back(std::move(out));
  }
  if (!missing.empty())
    throw DataError(fmt::format("no predictor row for measure key(s) {}", fmt::join(missing, ", ")));
  return table;
}

std::map<std::string, SentenceLayout> read_layout_tsv(std::string_view text, const std::string& source) {
  const auto table = tsv::parse(text, source);
  const auto c_sid = table.column("sentence_id"), c_idx = table.column("word_index"),
             c_start = table.column("start_px"), c_end = table.column("end_px");
  const auto c_word = table.find_column("word");
  std::map<std::string, SentenceLayout> layouts;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    auto& layout = layouts[table.rows[r][c_sid]];
    const auto idx = table.integer(r, c_idx);
    if (idx != static_cast<long long>(layout.words.size()))
      throw DataError(fmt::format("{}: word_index must count up from 0 within a sentence", table.where(r)));
    layout.words.push_back({table.number(r, c_start), table.number(r, c_end)});
    layout.texts.push_back(c_word ? table.rows[r][*c_word] : std::string());
  }
  for (const auto& [sid, layout] : layouts) {
    try {
      layout.validate();
    } catch (const DataError& e) {
      throw DataError(fmt::format("{}: sentence '{}': {}", source, sid, e.what()));
    }
  }
  return layouts;
}

std::vector<FixationEvent> read_fixations_tsv(std::string_view text, const std::string& source,
                                              const std::map<std::string, SentenceLayout>* layouts) {
  const auto table = tsv::parse(text, source);
  if (table.header.size() != 5)
    throw DataError(fmt::format("{}: expected 5 columns (trial_id, sentence_id, seq, word_index_or_x, duration_ms)",
                                source));
  std::vector<FixationEvent> out;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    FixationEvent f;
    f.trial_id = table.rows[r][0];
    f.sentence_id = table.rows[r][1];
    f.seq = table.integer(r, 2);
    if (layouts) {
      auto it = layouts->find(f.sentence_id);
      if (it == layouts->end())
        throw DataError(fmt::format("{}: no layout for sentence '{}'", table.where(r), f.sentence_id));
      f.word_index = map_x_to_word(table.number(r, 3), it->second).value_or(-1);
    } else {
      const auto idx = table.integer(r, 3);
      if (idx < -1) throw DataError(fmt::format("{}: negative word index", table.where(r)));
      f.word_index = static_cast<int>(idx);
    }
    f.duration_ms = table.number(r, 4);
    if (!(f.duration_ms > 0.0)) throw DataError(fmt::format("{}: duration must be positive", table.where(r)));
    out.push_back(std::move(f));
  }
  return out;
}

std::string write_measures_tsv(std::span<const ViewingMeasures> measures) {
  std::string out = "trial_id\tsentence_id\tword_index\tffd\tgd\ttvd\texcluded\treason\n";
  for (const auto& m : measures)
    out += fmt::format("{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n", m.trial_id, m.sentence_id, m.word_index, cell(m.ffd),
                       cell(m.gd), cell(m.tvd), m.excluded ? 1 : 0, reason_code(m.reason));
  return out;
}

std::vector<ViewingMeasures> read_measures_tsv(std::string_view text, const std::string& source) {
  const auto table = tsv::parse(text, source);
  const auto c_trial = table.column("trial_id"), c_sid = table.column("sentence_id"),
             c_idx = table.column("word_index"), c_ffd = table.column("ffd"), c_gd = table.column("gd"),
             c_tvd = table.column("tvd"), c_ex = table.column("excluded"), c_reason = table.column("reason");
  std::vector<ViewingMeasures> out;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    ViewingMeasures m;
    m.trial_id = table.rows[r][c_trial];
    m.sentence_id = table.rows[r][c_sid];
    m.word_index = static_cast<int>(table.integer(r, c_idx));
    m.ffd = table.optional_number(r, c_ffd);
    m.gd = table.optional_number(r, c_gd);
    m.tvd = table.optional_number(r, c_tvd);
    m.excluded = table.integer(r, c_ex) != 0;
    try {
      m.reason = parse_reason(table.rows[r][c_reason]);
    } catch (const DataError& e) {
      throw DataError(fmt::format("{}: {}", table.where(r), e.what()));
    }
    out.push_back(std::move(m));
  }
  return out;
}

std::string write_analysis_tsv(const AnalysisTable& table) {
  std::string out = "trial_id\tsentence_id\tword_index\tffd\tgd\ttvd\texcluded\treason";
  for (const auto& c : table.columns) out += "\t" + c.name;
  out += '\n';
  for (const auto& row : table.rows) {
    const auto& m = row.measures;
    out += fmt::format("{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}", m.trial_id, m.sentence_id, m.word_index, cell(m.ffd),
                       cell(m.gd), cell(m.tvd), m.excluded ? 1 : 0, reason_code(m.reason));
    for (const auto& v : row.predictors) out += "\t" + cell(v);
    out += '\n';
  }
  return out;
}

}  // namespace eyecorp
