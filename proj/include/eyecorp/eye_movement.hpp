#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "eyecorp/error.hpp"
#include "eyecorp/predictors.hpp"

namespace eyecorp {

/// One fixation. word_index is -1 when the fixation landed on no word.
struct FixationEvent {
  std::string trial_id;
  std::string sentence_id;
  long long seq = 0;  // strictly increasing within a trial
  int word_index = -1;
  double duration_ms = 0.0;
};

struct Interval {
  double start_px = 0.0;
  double end_px = 0.0;  // exclusive
};

/// Interest areas of a single-line sentence, left to right.
struct SentenceLayout {
  std::vector<Interval> words;
  std::vector<std::string> texts;

  void validate() const;
};

/// Word whose half-open interval contains x; nullopt in gaps and outside
/// the line.
std::optional<int> map_x_to_word(double x, const SentenceLayout& layout);

enum class ExclusionReason { none, short_fixation, edge_word, zero_wp_or_wf, outlier };

std::string_view reason_code(ExclusionReason reason);
ExclusionReason parse_reason(std::string_view code);

struct ViewingMeasures {
  std::string trial_id;
  std::string sentence_id;
  int word_index = 0;
  std::optional<double> ffd;
  std::optional<double> gd;
  std::optional<double> tvd;
  bool excluded = false;
  ExclusionReason reason = ExclusionReason::none;

  friend bool operator==(const ViewingMeasures&, const ViewingMeasures&) = default;
};

struct MeasureOptions {
  /// First pass ends only when a word to the right is fixated; by default
  /// any other word ends it.
  bool rightward_only = false;
};

/// FFD, GD and TVD for every fixated word of every trial, ordered by
/// (trial_id, word_index). Fixations with word_index < 0 are ignored.
std::vector<ViewingMeasures> compute_measures(std::span<const FixationEvent> fixations,
                                              const MeasureOptions& options = {});

struct ExclusionConfig {
  double min_fixation_ms = 70.0;
  double max_ffd_ms = 800.0;
  double max_gd_ms = 1000.0;
  double max_tvd_ms = 1500.0;
  bool drop_first_last_word = true;
  bool drop_zero_wp_or_wf = true;

  void validate() const;
};

/// Removes fixations shorter than min_ms (a fixation of exactly min_ms stays).
std::vector<FixationEvent> drop_short_fixations(std::span<const FixationEvent> fixations, double min_ms);

/// drop_short_fixations then compute_measures. Words that were fixated only
/// by removed fixations get an excluded record with reason short_fixation.
std::vector<ViewingMeasures> measures_from_fixations(std::span<const FixationEvent> fixations,
                                                     const ExclusionConfig& config,
                                                     const MeasureOptions& options = {});

struct AnalysisRow {
  ViewingMeasures measures;
  std::vector<std::optional<double>> predictors;
};

struct AnalysisTable {
  std::vector<PredictorColumn> columns;
  std::vector<AnalysisRow> rows;
};

/// Joins measures with stimulus predictors and applies the exclusion rules
/// in fixed order: short fixation, edge word, zero WP/WF, per-measure
/// outlier caps. Caps null the offending cell; the row is excluded only when
/// no measure survives. Measures without a predictor row raise DataError.
AnalysisTable apply_exclusions(std::span<const ViewingMeasures> measures, const PredictorTable& predictors,
                               const ExclusionConfig& config);

// File formats.

/// `trial_id<TAB>sentence_id<TAB>seq<TAB>word_index_or_x<TAB>duration_ms`.
/// Without layouts the fourth column is a word index; with layouts it is an
/// x coordinate mapped through the sentence's layout.
std::vector<FixationEvent> read_fixations_tsv(std::string_view text, const std::string& source,
                                              const std::map<std::string, SentenceLayout>* layouts = nullptr);
/// `sentence_id<TAB>word_index<TAB>start_px<TAB>end_px<TAB>word`.
std::map<std::string, SentenceLayout> read_layout_tsv(std::string_view text, const std::string& source);

/// `trial_id<TAB>sentence_id<TAB>word_index<TAB>ffd<TAB>gd<TAB>tvd<TAB>excluded<TAB>reason`.
std::string write_measures_tsv(std::span<const ViewingMeasures> measures);
std::vector<ViewingMeasures> read_measures_tsv(std::string_view text, const std::string& source);

/// Measures columns followed by one column per predictor.
std::string write_analysis_tsv(const AnalysisTable& table);

}  // namespace eyecorp
