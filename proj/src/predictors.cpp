#include "eyecorp/predictors.hpp"

#include <fmt/format.h>

#include "eyecorp/error.hpp"

namespace eyecorp {

void PredictorTable::add(PredictorRow row) {
  if (row.values.size() != columns.size())
    throw Error(fmt::format("predictor row has {} values for {} columns", row.values.size(), columns.size()));
  auto key = std::make_pair(row.sentence_id, row.position);
  if (!index_.emplace(key, rows_.size()).second)
    throw DataError(fmt::format("duplicate predictor row {}:{}", row.sentence_id, row.position));
  rows_.push_back(std::move(row));
}

const PredictorRow* PredictorTable::find(const std::string& sentence_id, int position) const {
  auto it = index_.find({sentence_id, position});
  return it == index_.end() ? nullptr : &rows_[it->second];
}

std::optional<std::size_t> PredictorTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i].name == name) return i;
  return std::nullopt;
}

std::vector<std::size_t> PredictorTable::columns_of(PredictorKind kind) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i].kind == kind) out.push_back(i);
  return out;
}

}  // namespace eyecorp
