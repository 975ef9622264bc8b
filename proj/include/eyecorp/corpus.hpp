#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace eyecorp {

/// One token as delivered by OCR or plain text, before cleaning.
struct RawToken {
  std::string surface;
  int confidence = 100;  // 0..100; plain text has no score and passes any threshold
  bool ends_sentence = false;

  friend bool operator==(const RawToken&, const RawToken&) = default;
};

/// Suffix rewrite applied after lowercase folding, e.g. {"en", ""}.
struct SuffixRule {
  std::string suffix;
  std::string replacement;
};
using SuffixRules = std::vector<SuffixRule>;

/// Parses "en=,e=,s=" (a leading '-' on a suffix is ignored).
SuffixRules parse_suffix_rules(std::string_view spec);

/// Cleaned, stemmed token stream with optional sentence structure.
struct Corpus {
  std::vector<std::string> tokens;
  /// Start offset of every sentence, ascending, first entry 0. Empty means
  /// the whole corpus is one stream.
  std::vector<std::size_t> sentence_starts;

  std::size_t token_count() const { return tokens.size(); }
  std::size_t sentence_count() const { return sentence_starts.empty() ? (tokens.empty() ? 0 : 1) : sentence_starts.size(); }
  std::span<const std::string> sentence(std::size_t i) const;

  /// Appends one sentence; empty sentences are ignored.
  void add_sentence(std::span<const std::string> words);
};

struct FrequencyEntry {
  long long raw_count = 0;
  double per_million = 0.0;
  double log10_pm = 0.0;
};

/// Per-million word frequencies keyed by stem. Words that never occur are
/// absent; lookup() reports them as nullopt, never as a zero count.
class FrequencyTable {
 public:
  FrequencyTable() = default;
  FrequencyTable(std::map<std::string, long long> counts, long long token_count);

  std::optional<FrequencyEntry> lookup(std::string_view stem) const;
  long long token_count() const { return token_count_; }
  const std::map<std::string, FrequencyEntry, std::less<>>& entries() const { return entries_; }

  /// Rows sorted by descending count, ties lexicographic.
  std::vector<std::pair<std::string, FrequencyEntry>> sorted() const;

 private:
  std::map<std::string, FrequencyEntry, std::less<>> entries_;
  long long token_count_ = 0;
};

/// Number of Unicode code points in a UTF-8 string.
std::size_t utf8_length(std::string_view text);

/// Whitespace split with punctuation, symbols and digit-only tokens removed.
std::vector<RawToken> tokenize(std::string_view text);

std::vector<RawToken> filter_by_confidence(std::span<const RawToken> tokens, int threshold);

std::string lowercase(std::string_view token);
std::string stem(std::string_view token, const SuffixRules& rules);

/// Stems every token and derives sentence starts from ends_sentence marks.
Corpus make_corpus(std::span<const RawToken> tokens, const SuffixRules& rules);

FrequencyTable compute_frequency(const Corpus& corpus, const SuffixRules& rules);

// File formats.

/// Plain UTF-8 text: each line break also ends a sentence.
std::vector<RawToken> read_plain_text(std::string_view text);
/// TSV with header `surface<TAB>confidence`.
std::vector<RawToken> read_token_tsv(std::string_view text, const std::string& source);

/// One sentence per line, tokens separated by single spaces.
std::string write_corpus(const Corpus& corpus);
Corpus read_corpus(std::string_view text);

/// `stem<TAB>count<TAB>per_million<TAB>log10_pm`.
std::string write_frequency_tsv(const FrequencyTable& table);
FrequencyTable read_frequency_tsv(std::string_view text, const std::string& source);

}  // namespace eyecorp
