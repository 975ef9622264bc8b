#include "eyecorp/corpus.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "eyecorp/error.hpp"
#include "eyecorp/tsv.hpp"

namespace eyecorp {
namespace {

// Decodes one code point starting at text[i]; advances i. Invalid bytes
// decode to U+FFFD and consume a single byte.
char32_t next_code_point(std::string_view text, std::size_t& i) {
  const auto b0 = static_cast<unsigned char>(text[i]);
  auto continuation = [&](std::size_t k) -> int {
    if (i + k >= text.size()) return -1;
    const auto b = static_cast<unsigned char>(text[i + k]);
    return (b & 0xC0) == 0x80 ? (b & 0x3F) : -1;
  };
  if (b0 < 0x80) {
    ++i;
    return b0;
  }
  int len = 0;
  char32_t cp = 0;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    ++i;
    return 0xFFFD;
  }
  for (int k = 1; k < len; ++k) {
    const int c = continuation(static_cast<std::size_t>(k));
    if (c < 0) {
      ++i;
      return 0xFFFD;
    }
    cp = (cp << 6) | static_cast<char32_t>(c);
  }
  i += static_cast<std::size_t>(len);
  return cp;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

bool is_space(char32_t cp) {
  return cp == ' ' || cp == '\t' || cp == '\n' || cp == '\r' || cp == '\v' || cp == '\f' || cp == 0xA0 ||
         cp == 0x2028 || cp == 0x2029 || cp == 0x3000 || (cp >= 0x2000 && cp <= 0x200A);
}

// Punctuation and symbol ranges removed from tokens.
bool in_strip_set(char32_t cp) {
  if (cp < 0x80) return !((cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z'));
  if (cp >= 0xA1 && cp <= 0xBF) return cp != 0xAA && cp != 0xB5 && cp != 0xBA;
  if (cp == 0xD7 || cp == 0xF7) return true;
  if (cp >= 0x2000 && cp <= 0x206F) return true;  // general punctuation
  if (cp >= 0x20A0 && cp <= 0x20CF) return true;  // currency
  if (cp >= 0x2190 && cp <= 0x2BFF) return true;  // arrows, math, technical, shapes
  if (cp >= 0x2E00 && cp <= 0x2E7F) return true;  // supplemental punctuation
  if (cp >= 0x3000 && cp <= 0x303F) return true;  // CJK punctuation
  if (cp >= 0xFE30 && cp <= 0xFE6F) return true;
  if (cp >= 0xFF01 && cp <= 0xFF0F) return true;
  if (cp == 0xFFFD) return true;
  return false;
}

bool is_sentence_final(char32_t cp) { return cp == '.' || cp == '!' || cp == '?' || cp == 0x2026; }

bool is_closing(char32_t cp) {
  return cp == '"' || cp == '\'' || cp == ')' || cp == ']' || cp == 0xBB || cp == 0xAB || cp == 0x201C ||
         cp == 0x201D || cp == 0x2019;
}

char32_t fold(char32_t cp) {
  if (cp >= 'A' && cp <= 'Z') return cp + 0x20;
  if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 0x20;
  if (cp >= 0x391 && cp <= 0x3A9 && cp != 0x3A2) return cp + 0x20;
  if (cp >= 0x410 && cp <= 0x42F) return cp + 0x20;
  if (cp >= 0x400 && cp <= 0x40F) return cp + 0x50;
  if (cp == 0x1E9E) return 0xDF;  // capital sharp s
  return cp;
}

// Cleans one whitespace-delimited chunk.
RawToken clean_chunk(std::string_view chunk) {
  RawToken token;
  bool only_digits = true;
  char32_t last_significant = 0;
  for (std::size_t i = 0; i < chunk.size();) {
    const char32_t cp = next_code_point(chunk, i);
    if (!is_closing(cp)) last_significant = cp;
    if (in_strip_set(cp)) continue;
    if (cp < '0' || cp > '9') only_digits = false;
    append_utf8(token.surface, cp);
  }
  if (only_digits) token.surface.clear();
  token.ends_sentence = is_sentence_final(last_significant);
  return token;
}

}  // namespace

SuffixRules parse_suffix_rules(std::string_view spec) {
  SuffixRules rules;
  for (const auto& item : tsv::split(spec, ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    std::string suffix = item.substr(0, eq);
    std::string replacement = eq == std::string::npos ? std::string() : item.substr(eq + 1);
    if (!suffix.empty() && suffix.front() == '-') suffix.erase(0, 1);
    if (suffix.empty()) throw DataError(fmt::format("invalid suffix rule '{}'", item));
    rules.push_back({std::move(suffix), std::move(replacement)});
  }
  return rules;
}

std::span<const std::string> Corpus::sentence(std::size_t i) const {
  if (sentence_starts.empty()) return tokens;
  const std::size_t begin = sentence_starts.at(i);
  const std::size_t end = i + 1 < sentence_starts.size() ? sentence_starts[i + 1] : tokens.size();
  return std::span<const std::string>(tokens).subspan(begin, end - begin);
}

void Corpus::add_sentence(std::span<const std::string> words) {
  if (words.empty()) return;
  if (sentence_starts.empty() && !tokens.empty()) sentence_starts.push_back(0);
  sentence_starts.push_back(tokens.size());
  tokens.insert(tokens.end(), words.begin(), words.end());
}

FrequencyTable::FrequencyTable(std::map<std::string, long long> counts, long long token_count)
    : token_count_(token_count) {
  for (auto& [word, count] : counts) {
    if (count <= 0) continue;
    FrequencyEntry e;
    e.raw_count = count;
    e.per_million = static_cast<double>(count) * 1e6 / static_cast<double>(token_count);
    e.log10_pm = std::log10(e.per_million);
    entries_.emplace(word, e);
  }
}

std::optional<FrequencyEntry> FrequencyTable::lookup(std::string_view stem) const {
  auto it = entries_.find(stem);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::pair<std::string, FrequencyEntry>> FrequencyTable::sorted() const {
  std::vector<std::pair<std::string, FrequencyEntry>> rows(entries_.begin(), entries_.end());
  std::stable_sort(rows.begin(), rows.end(),
                   [](const auto& a, const auto& b) { return a.second.raw_count > b.second.raw_count; });
  return rows;
}

std::size_t utf8_length(std::string_view text) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < text.size();) {
    next_code_point(text, i);
    ++n;
  }
  return n;
}

std::vector<RawToken> tokenize(std::string_view text) {
  std::vector<RawToken> out;
  std::size_t i = 0;
  std::size_t chunk_begin = std::string_view::npos;
  auto flush = [&](std::size_t end) {
    if (chunk_begin == std::string_view::npos) return;
    RawToken token = clean_chunk(text.substr(chunk_begin, end - chunk_begin));
    chunk_begin = std::string_view::npos;
    if (!token.surface.empty()) {
      out.push_back(std::move(token));
    } else if (token.ends_sentence && !out.empty()) {
      out.back().ends_sentence = true;  // detached "." or "?!"
    }
  };
  while (i < text.size()) {
    const std::size_t at = i;
    const char32_t cp = next_code_point(text, i);
    if (is_space(cp)) {
      flush(at);
    } else if (chunk_begin == std::string_view::npos) {
      chunk_begin = at;
    }
  }
  flush(text.size());
  return out;
}

std::vector<RawToken> filter_by_confidence(std::span<const RawToken> tokens, int threshold) {
  if (threshold < 0 || threshold > 100)
    throw Error(fmt::format("confidence threshold {} outside 0..100", threshold));
  std::vector<RawToken> out;
  for (const auto& t : tokens)
    if (t.confidence >= threshold) out.push_back(t);
  return out;
}

std::string lowercase(std::string_view token) {
  std::string out;
  out.reserve(token.size());
  for (std::size_t i = 0; i < token.size();) append_utf8(out, fold(next_code_point(token, i)));
  return out;
}

std::string stem(std::string_view token, const SuffixRules& rules) {
  std::string word = lowercase(token);
  for (const auto& rule : rules) {
    if (word.size() > rule.suffix.size() && word.ends_with(rule.suffix)) {
      word.resize(word.size() - rule.suffix.size());
      word += rule.replacement;
      break;
    }
  }
  return word;
}

Corpus make_corpus(std::span<const RawToken> tokens, const SuffixRules& rules) {
  Corpus corpus;
  std::vector<std::string> sentence;
  for (const auto& t : tokens) {
    sentence.push_back(stem(t.surface, rules));
    if (t.ends_sentence) {
      corpus.add_sentence(sentence);
      sentence.clear();
    }
  }
  corpus.add_sentence(sentence);
  return corpus;
}

FrequencyTable compute_frequency(const Corpus& corpus, const SuffixRules& rules) {
  if (corpus.token_count() == 0) throw DataError("empty corpus");
  std::map<std::string, long long> counts;
  for (const auto& t : corpus.tokens) ++counts[stem(t, rules)];
  return FrequencyTable(std::move(counts), static_cast<long long>(corpus.token_count()));
}

std::vector<RawToken> read_plain_text(std::string_view text) {
  std::vector<RawToken> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = tokenize(text.substr(start, end - start));
    if (!line.empty()) line.back().ends_sentence = true;
    out.insert(out.end(), line.begin(), line.end());
    start = end + 1;
  }
  return out;
}

std::vector<RawToken> read_token_tsv(std::string_view text, const std::string& source) {
  const auto table = tsv::parse(text, source);
  const auto surface_col = table.column("surface");
  const auto conf_col = table.find_column("confidence");
  std::vector<RawToken> out;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    int confidence = 100;
    if (conf_col && !table.rows[r][*conf_col].empty()) {
      const auto c = table.integer(r, *conf_col);
      if (c < 0 || c > 100) throw DataError(fmt::format("{}: confidence {} outside [0,100]", table.where(r), c));
      confidence = static_cast<int>(c);
    }
    for (auto& t : tokenize(table.rows[r][surface_col])) {
      t.confidence = confidence;
      out.push_back(std::move(t));
    }
  }
  return out;
}

std::string write_corpus(const Corpus& corpus) {
  std::string out;
  for (std::size_t s = 0; s < corpus.sentence_count(); ++s) {
    const auto words = corpus.sentence(s);
    for (std::size_t i = 0; i < words.size(); ++i) {
      if (i) out += ' ';
      out += words[i];
    }
    out += '\n';
  }
  return out;
}

Corpus read_corpus(std::string_view text) {
  Corpus corpus;
  std::size_t start = 0;
  std::vector<std::string> words;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    words.clear();
    for (auto& w : tsv::split(text.substr(start, end - start), ' '))
      if (!w.empty() && w != "\r") words.push_back(std::move(w));
    corpus.add_sentence(words);
    start = end + 1;
  }
  return corpus;
}

std::string write_frequency_tsv(const FrequencyTable& table) {
  std::string out = "stem\tcount\tper_million\tlog10_pm\n";
  for (const auto& [word, e] : table.sorted())
    out += fmt::format("{}\t{}\t{}\t{}\n", word, e.raw_count, tsv::format_number(e.per_million),
                       tsv::format_number(e.log10_pm));
  return out;
}

FrequencyTable read_frequency_tsv(std::string_view text, const std::string& source) {
  const auto table = tsv::parse(text, source);
  const auto stem_col = table.column("stem");
  const auto count_col = table.column("count");
  std::map<std::string, long long> counts;
  long long total = 0;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto c = table.integer(r, count_col);
    if (c < 1) throw DataError(fmt::format("{}: count must be >= 1", table.where(r)));
    if (!counts.emplace(table.rows[r][stem_col], c).second)
      throw DataError(fmt::format("{}: duplicate stem '{}'", table.where(r), table.rows[r][stem_col]));
    total += c;
  }
  if (total == 0) throw DataError(fmt::format("{}: empty frequency table", source));
  return FrequencyTable(std::move(counts), total);
}

}  // namespace eyecorp
