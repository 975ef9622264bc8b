#include "eyecorp/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>

#include <fmt/format.h>

namespace eyecorp {

Vocabulary::Vocabulary(std::vector<std::string> words, std::vector<long long> counts, long long min_count)
    : words_(std::move(words)), counts_(std::move(counts)), min_count_(min_count) {
  if (words_.size() != counts_.size()) throw Error("vocabulary words and counts differ in length");
  for (std::size_t i = 0; i < words_.size(); ++i) {
    if (counts_[i] < min_count_)
      throw DataError(fmt::format("word '{}' has count {} below min_count {}", words_[i], counts_[i], min_count_));
    if (!index_.emplace(words_[i], static_cast<int>(i)).second)
      throw DataError(fmt::format("duplicate vocabulary word '{}'", words_[i]));
  }
}

std::optional<int> Vocabulary::find(std::string_view word) const {
  auto it = index_.find(std::string(word));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<int> Vocabulary::encode(std::span<const std::string> tokens) const {
  std::vector<int> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) {
    auto it = index_.find(t);
    out.push_back(it == index_.end() ? -1 : it->second);
  }
  return out;
}

Vocabulary build_vocab(const Corpus& corpus, long long min_count) {
  if (corpus.token_count() == 0) throw DataError("empty corpus");
  std::map<std::string, long long> counts;
  for (const auto& t : corpus.tokens) ++counts[t];
  std::vector<std::pair<std::string, long long>> kept;
  for (auto& [w, c] : counts)
    if (c >= min_count) kept.emplace_back(w, c);
  if (kept.empty()) throw DataError("empty vocabulary");
  // map order is lexicographic, so a stable sort on count keeps ties ordered
  std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> words;
  std::vector<long long> word_counts;
  for (auto& [w, c] : kept) {
    words.push_back(std::move(w));
    word_counts.push_back(c);
  }
  return Vocabulary(std::move(words), std::move(word_counts), min_count);
}

void TrainConfig::validate() const {
  if (dim <= 0) throw Error("dim must be positive");
  if (window < 1) throw Error("window must be at least 1");
  if (epochs < 1) throw Error("epochs must be at least 1");
  if (negatives < 1 || negatives > 63) throw Error("negatives must be in [1, 63]");
  if (!(learning_rate > 0.0)) throw Error("learning rate must be positive");
  if (min_learning_rate < 0.0 || min_learning_rate > learning_rate)
    throw Error("min learning rate must be in [0, learning rate]");
  if (min_count < 1) throw Error("min_count must be at least 1");
  if (workers < 1) throw Error("workers must be at least 1");
  if (subsample < 0.0) throw Error("subsample must be non-negative");
}

NegativeSampler::NegativeSampler(std::span<const long long> counts, double power) {
  if (counts.empty()) throw Error("negative sampler needs a non-empty vocabulary");
  cumulative_.reserve(counts.size());
  double total = 0.0;
  for (auto c : counts) {
    total += std::pow(static_cast<double>(c), power);
    cumulative_.push_back(total);
  }
  for (auto& c : cumulative_) c /= total;
  cumulative_.back() = 1.0;
}

int NegativeSampler::draw(Rng& rng) const {
  const double u = rng.uniform();
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  return static_cast<int>(std::min<std::ptrdiff_t>(it - cumulative_.begin(), size() - 1));
}

double NegativeSampler::probability(int word) const {
  const auto i = static_cast<std::size_t>(word);
  return cumulative_.at(i) - (i == 0 ? 0.0 : cumulative_[i - 1]);
}

std::vector<std::pair<std::size_t, std::size_t>> window_pairs(std::size_t length, int window) {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  const auto w = static_cast<std::size_t>(window);
  for (std::size_t i = 0; i < length; ++i) {
    const std::size_t lo = i >= w ? i - w : 0;
    const std::size_t hi = std::min(length - 1, i + w);
    for (std::size_t j = lo; j <= hi; ++j)
      if (j != i) pairs.emplace_back(i, j);
  }
  return pairs;
}

namespace detail {

std::string model_header_magic() { return "SKIPGRAM"; }

void write_vocabulary(ByteWriter& out, const Vocabulary& vocab) {
  for (int i = 0; i < vocab.size(); ++i) {
    out.put_string(vocab.word(i));
    out.put(static_cast<std::int64_t>(vocab.count(i)));
  }
}

Vocabulary read_vocabulary(ByteReader& in, std::uint64_t size, long long min_count) {
  // every entry needs at least 12 bytes, which bounds allocations on corrupt input
  if (size > in.remaining() / 12) in.fail(fmt::format("vocabulary size {} exceeds file size", size));
  std::vector<std::string> words;
  std::vector<long long> counts;
  words.reserve(size);
  counts.reserve(size);
  for (std::uint64_t i = 0; i < size; ++i) {
    words.push_back(in.get_string(1 << 16));
    counts.push_back(in.get<std::int64_t>());
  }
  try {
    return Vocabulary(std::move(words), std::move(counts), min_count);
  } catch (const Error& e) {
    in.fail(e.what());
  }
}

}  // namespace detail

void write_binary_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(fmt::format("cannot write '{}'", path.string()));
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError(fmt::format("write failed for '{}'", path.string()));
}

}  // namespace eyecorp
