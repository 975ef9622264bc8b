#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace eyecorp {

enum class PredictorKind { length, word_frequency, word_probability, other };

struct PredictorColumn {
  std::string name;
  PredictorKind kind = PredictorKind::other;
};

/// Word-level predictor values of one stimulus word. Missing cells are
/// nullopt (undefined WP, word absent from a frequency table).
struct PredictorRow {
  std::string sentence_id;
  int position = 0;
  int sentence_length = 0;
  std::string token;
  std::vector<std::optional<double>> values;  // parallel to PredictorTable::columns
};

class PredictorTable {
 public:
  std::vector<PredictorColumn> columns;

  void add(PredictorRow row);
  const std::vector<PredictorRow>& rows() const { return rows_; }
  const PredictorRow* find(const std::string& sentence_id, int position) const;
  std::optional<std::size_t> column(const std::string& name) const;
  std::vector<std::size_t> columns_of(PredictorKind kind) const;

 private:
  std::vector<PredictorRow> rows_;
  std::map<std::pair<std::string, int>, std::size_t> index_;
};

}  // namespace eyecorp
