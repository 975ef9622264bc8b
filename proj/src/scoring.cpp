#include "eyecorp/scoring.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "eyecorp/tsv.hpp"

namespace eyecorp {

double sentence_perplexity(std::span<const double> probs) {
  if (probs.empty()) throw Error("perplexity of an empty probability list");
  double log_sum = 0.0;
  bool zero = false;
  for (double p : probs) {
    if (!(p >= 0.0 && p <= 1.0)) throw Error(fmt::format("probability {} outside [0,1]", p));
    if (p == 0.0) zero = true;
    else log_sum += std::log2(p);
  }
  if (zero) return std::numeric_limits<double>::infinity();
  return std::exp2(-log_sum / static_cast<double>(probs.size()));
}

double perplexity_of(std::span<const WordProbability> probs) {
  std::vector<double> defined;
  defined.reserve(probs.size());
  for (const auto& p : probs) {
    if (!p) return std::numeric_limits<double>::infinity();
    defined.push_back(*p);
  }
  return sentence_perplexity(defined);
}

std::string write_scores_tsv(std::span<const SentenceScore> scores) {
  std::string out = "sentence_id\tmodel_id\tposition\ttoken\twp\tpp\n";
  for (const auto& s : scores) {
    const std::string pp = tsv::format_number(s.perplexity);
    for (std::size_t i = 0; i < s.tokens.size(); ++i)
      out += fmt::format("{}\t{}\t{}\t{}\t{}\t{}\n", s.sentence_id, s.model_id, i, s.tokens[i],
                         tsv::format_optional(s.word_probs[i]), pp);
  }
  return out;
}

std::vector<SentenceScore> read_scores_tsv(std::string_view text, const std::string& source) {
  const auto table = tsv::parse(text, source);
  const auto c_sid = table.column("sentence_id");
  const auto c_mid = table.column("model_id");
  const auto c_pos = table.column("position");
  const auto c_tok = table.column("token");
  const auto c_wp = table.column("wp");
  const auto c_pp = table.column("pp");
  std::vector<SentenceScore> out;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const auto pos = table.integer(r, c_pos);
    if (pos == 0) {
      SentenceScore s;
      s.sentence_id = row[c_sid];
      s.model_id = row[c_mid];
      out.push_back(std::move(s));
    }
    if (out.empty() || out.back().sentence_id != row[c_sid] || out.back().model_id != row[c_mid] ||
        static_cast<long long>(out.back().tokens.size()) != pos)
      throw DataError(fmt::format("{}: positions must start at 0 and increase by one per sentence", table.where(r)));
    auto& s = out.back();
    s.tokens.push_back(row[c_tok]);
    const auto wp = table.optional_number(r, c_wp);
    if (wp && !(*wp >= 0.0 && *wp <= 1.0))
      throw DataError(fmt::format("{}: wp {} outside [0,1]", table.where(r), *wp));
    s.word_probs.push_back(wp);
    s.perplexity = table.number(r, c_pp);
  }
  for (auto& s : out) {
    for (std::size_t i = 0; i < s.word_probs.size(); ++i) {
      if (!s.word_probs[i]) s.flag = s.flag.empty() ? "undefined_wp" : s.flag;
      else if (*s.word_probs[i] == 0.0) s.flag = s.flag.empty() ? "zero_wp" : s.flag;
    }
    s.flagged = !s.flag.empty() || std::isinf(s.perplexity);
  }
  return out;
}

std::vector<Sentence> read_sentences(std::string_view text, const SuffixRules& rules) {
  std::vector<Sentence> out;
  std::size_t start = 0;
  std::size_t line_no = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;
    Sentence s;
    if (const auto tab = line.find('\t'); tab != std::string_view::npos) {
      s.id = std::string(line.substr(0, tab));
      line.remove_prefix(tab + 1);
    } else {
      s.id = fmt::format("s{}", out.size() + 1);
    }
    for (const auto& t : tokenize(line)) s.tokens.push_back(stem(t.surface, rules));
    if (s.tokens.empty()) continue;
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace eyecorp
