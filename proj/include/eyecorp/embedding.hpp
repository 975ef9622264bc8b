#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "eyecorp/binary_io.hpp"
#include "eyecorp/corpus.hpp"
#include "eyecorp/error.hpp"
#include "eyecorp/random.hpp"
#include "eyecorp/tsv.hpp"

namespace eyecorp {

/// Words with count >= min_count, indexed by descending count then
/// lexicographically.
class Vocabulary {
 public:
  Vocabulary() = default;
  Vocabulary(std::vector<std::string> words, std::vector<long long> counts, long long min_count);

  int size() const { return static_cast<int>(words_.size()); }
  const std::string& word(int i) const { return words_.at(static_cast<std::size_t>(i)); }
  long long count(int i) const { return counts_.at(static_cast<std::size_t>(i)); }
  const std::vector<std::string>& words() const { return words_; }
  const std::vector<long long>& counts() const { return counts_; }
  long long min_count() const { return min_count_; }

  std::optional<int> find(std::string_view word) const;
  /// Index per token, -1 for out-of-vocabulary.
  std::vector<int> encode(std::span<const std::string> tokens) const;

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.words_ == b.words_ && a.counts_ == b.counts_ && a.min_count_ == b.min_count_;
  }

 private:
  std::vector<std::string> words_;
  std::vector<long long> counts_;
  long long min_count_ = 1;
  std::unordered_map<std::string, int> index_;
};

Vocabulary build_vocab(const Corpus& corpus, long long min_count);

struct TrainConfig {
  int dim = 100;
  int window = 2;
  int epochs = 10;
  int negatives = 5;
  double learning_rate = 0.025;
  double min_learning_rate = 1e-4;
  long long min_count = 3;
  std::uint64_t seed = 1;
  int workers = 1;         // 1 = deterministic; >1 = unsynchronized updates
  double subsample = 0.0;  // frequent-word downsampling threshold, 0 = off

  void validate() const;
};

template <class Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <class Scalar>
struct SkipGramModel {
  Vocabulary vocab;
  int window = 2;
  RowMatrix<Scalar> input;   // |V| x dim, context/center side
  RowMatrix<Scalar> output;  // |V| x dim, predicted-word side

  int dim() const { return static_cast<int>(input.cols()); }

  friend bool operator==(const SkipGramModel& a, const SkipGramModel& b) {
    return a.vocab == b.vocab && a.window == b.window && a.input.rows() == b.input.rows() &&
           a.input.cols() == b.input.cols() && a.output.rows() == b.output.rows() &&
           a.output.cols() == b.output.cols() && a.input == b.input && a.output == b.output;
  }
};

/// Draws word indices from the count^power distribution.
class NegativeSampler {
 public:
  explicit NegativeSampler(std::span<const long long> counts, double power = 0.75);

  int draw(Rng& rng) const;
  double probability(int word) const;
  int size() const { return static_cast<int>(cumulative_.size()); }

 private:
  std::vector<double> cumulative_;
};

/// (center, context) position pairs of one sentence: every ordered pair
/// of distinct positions at most `window` apart.
std::vector<std::pair<std::size_t, std::size_t>> window_pairs(std::size_t length, int window);

inline double log_sigmoid(double x) { return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); }
inline double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// Negative-sampling loss of one training pair,
/// -log s(u_ctx . v_center) - sum_n log s(-u_n . v_center).
template <class Scalar>
double pair_loss(const SkipGramModel<Scalar>& model, int center, int context, std::span<const int> negatives) {
  const auto v = model.input.row(center);
  double loss = -log_sigmoid(static_cast<double>(model.output.row(context).dot(v)));
  for (int n : negatives) loss -= log_sigmoid(-static_cast<double>(model.output.row(n).dot(v)));
  return loss;
}

/// Gradient of pair_loss. `outputs` holds one row per target: the context
/// first, then each negative in order (duplicates are separate rows).
template <class Scalar>
struct PairGradient {
  Eigen::Matrix<Scalar, 1, Eigen::Dynamic> center;
  RowMatrix<Scalar> outputs;
  double loss = 0.0;
};

template <class Scalar>
PairGradient<Scalar> pair_gradient(const SkipGramModel<Scalar>& model, int center, int context,
                                   std::span<const int> negatives) {
  const auto v = model.input.row(center);
  PairGradient<Scalar> g;
  g.center = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>::Zero(model.dim());
  g.outputs.resize(static_cast<Eigen::Index>(negatives.size() + 1), model.dim());
  for (std::size_t k = 0; k <= negatives.size(); ++k) {
    const int target = k == 0 ? context : negatives[k - 1];
    const double label = k == 0 ? 1.0 : 0.0;
    const double score = static_cast<double>(model.output.row(target).dot(v));
    g.loss -= k == 0 ? log_sigmoid(score) : log_sigmoid(-score);
    // d/dscore of the pair loss is sigmoid(score) - label
    const auto coeff = static_cast<Scalar>(sigmoid(score) - label);
    g.center += coeff * model.output.row(target);
    g.outputs.row(static_cast<Eigen::Index>(k)) = coeff * v;
  }
  return g;
}

/// One gradient-descent step on a single pair, with every partial derivative
/// taken at the pre-step parameters. Returns the pre-step loss.
template <class Scalar>
double sgd_step(SkipGramModel<Scalar>& model, int center, int context, std::span<const int> negatives, Scalar lr) {
  constexpr int kMaxTargets = 64;
  const std::size_t targets = negatives.size() + 1;
  if (targets > kMaxTargets) throw Error("too many negatives per pair");
  Scalar coeff[kMaxTargets];
  double loss = 0.0;
  auto v = model.input.row(center);
  for (std::size_t k = 0; k < targets; ++k) {
    const int target = k == 0 ? context : negatives[k - 1];
    const double score = static_cast<double>(model.output.row(target).dot(v));
    loss -= k == 0 ? log_sigmoid(score) : log_sigmoid(-score);
    coeff[k] = static_cast<Scalar>(sigmoid(score) - (k == 0 ? 1.0 : 0.0)) * lr;
  }
  Eigen::Matrix<Scalar, 1, Eigen::Dynamic> center_step = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>::Zero(model.dim());
  for (std::size_t k = 0; k < targets; ++k) {
    const int target = k == 0 ? context : negatives[k - 1];
    center_step.noalias() += coeff[k] * model.output.row(target);
  }
  for (std::size_t k = 0; k < targets; ++k) {
    const int target = k == 0 ? context : negatives[k - 1];
    model.output.row(target).noalias() -= coeff[k] * v;
  }
  v -= center_step;
  return loss;
}

/// Mean pair loss per epoch, filled by train().
struct TrainingLog {
  std::vector<double> epoch_mean_loss;
  long long pairs_per_epoch = 0;
};

namespace detail {

template <class Scalar>
void init_model(SkipGramModel<Scalar>& model, Vocabulary vocab, const TrainConfig& config) {
  model.vocab = std::move(vocab);
  model.window = config.window;
  const Eigen::Index v = model.vocab.size();
  model.input.resize(v, config.dim);
  model.output = RowMatrix<Scalar>::Zero(v, config.dim);
  Rng rng(derive_seed(config.seed, 0));
  const double half = 0.5 / config.dim;
  for (Eigen::Index i = 0; i < v; ++i)
    for (Eigen::Index j = 0; j < config.dim; ++j) model.input(i, j) = static_cast<Scalar>(rng.uniform(-half, half));
}

inline bool keep_token(long long count, long long total, double subsample, Rng& rng) {
  if (subsample <= 0.0) return true;
  const double f = static_cast<double>(count) / static_cast<double>(total);
  const double keep = (std::sqrt(f / subsample) + 1.0) * subsample / f;
  return keep >= 1.0 || rng.uniform() < keep;
}

// Trains over sentences [first, last) of `encoded`; returns (loss sum, pairs).
template <class Scalar>
std::pair<double, long long> train_shard(SkipGramModel<Scalar>& model, const std::vector<std::vector<int>>& encoded,
                                         std::size_t first, std::size_t last, const TrainConfig& config,
                                         const NegativeSampler& sampler, Rng& rng, std::atomic<long long>& progress,
                                         long long total_pairs, long long total_tokens) {
  double loss_sum = 0.0;
  long long pairs = 0;
  std::vector<int> negatives;
  negatives.reserve(static_cast<std::size_t>(config.negatives));
  std::vector<int> kept;
  for (std::size_t s = first; s < last; ++s) {
    const auto& sentence = encoded[s];
    std::span<const int> tokens = sentence;
    if (config.subsample > 0.0) {
      kept.assign(sentence.begin(), sentence.end());
      for (auto& w : kept)
        if (w >= 0 && !keep_token(model.vocab.count(w), total_tokens, config.subsample, rng)) w = -1;
      tokens = kept;
    }
    const auto n = static_cast<std::ptrdiff_t>(tokens.size());
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      const int center = tokens[static_cast<std::size_t>(i)];
      if (center < 0) continue;
      const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, i - config.window);
      const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(n - 1, i + config.window);
      for (std::ptrdiff_t j = lo; j <= hi; ++j) {
        const int context = tokens[static_cast<std::size_t>(j)];
        if (j == i || context < 0) continue;
        const long long done = progress.fetch_add(1, std::memory_order_relaxed);
        const double frac = total_pairs > 0 ? static_cast<double>(done) / static_cast<double>(total_pairs) : 0.0;
        const double lr = std::max(config.min_learning_rate,
                                   config.learning_rate - (config.learning_rate - config.min_learning_rate) * frac);
        negatives.clear();
        for (int k = 0; k < config.negatives; ++k) {
          const int neg = sampler.draw(rng);
          if (neg != context) negatives.push_back(neg);
        }
        loss_sum += sgd_step(model, center, context, negatives, static_cast<Scalar>(lr));
        ++pairs;
      }
    }
  }
  return {loss_sum, pairs};
}

}  // namespace detail

/// Trains a skip-gram negative-sampling model. Windows never cross sentence
/// boundaries. With workers == 1 the result is a pure function of
/// (corpus, config).
template <class Scalar>
SkipGramModel<Scalar> train(const Corpus& corpus, const TrainConfig& config, TrainingLog* log = nullptr) {
  config.validate();
  SkipGramModel<Scalar> model;
  detail::init_model(model, build_vocab(corpus, config.min_count), config);
  const NegativeSampler sampler(model.vocab.counts());

  std::vector<std::vector<int>> encoded;
  encoded.reserve(corpus.sentence_count());
  long long pairs_per_epoch = 0;
  for (std::size_t s = 0; s < corpus.sentence_count(); ++s) {
    encoded.push_back(model.vocab.encode(corpus.sentence(s)));
    const auto& e = encoded.back();
    const auto n = static_cast<std::ptrdiff_t>(e.size());
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      if (e[static_cast<std::size_t>(i)] < 0) continue;
      for (std::ptrdiff_t j = std::max<std::ptrdiff_t>(0, i - config.window);
           j <= std::min<std::ptrdiff_t>(n - 1, i + config.window); ++j)
        if (j != i && e[static_cast<std::size_t>(j)] >= 0) ++pairs_per_epoch;
    }
  }
  long long total_tokens = 0;
  for (auto c : model.vocab.counts()) total_tokens += c;
  const long long total_pairs = pairs_per_epoch * config.epochs;
  std::atomic<long long> progress{0};
  if (log) {
    log->epoch_mean_loss.clear();
    log->pairs_per_epoch = pairs_per_epoch;
  }

  if (config.workers <= 1) {
    Rng rng(derive_seed(config.seed, 1));
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
      auto [loss, pairs] = detail::train_shard(model, encoded, 0, encoded.size(), config, sampler, rng, progress,
                                               total_pairs, total_tokens);
      if (log) log->epoch_mean_loss.push_back(pairs ? loss / static_cast<double>(pairs) : 0.0);
    }
    return model;
  }

  // Hogwild-style: workers update shared rows without locks; results depend
  // on scheduling.
  const auto workers = static_cast<std::size_t>(config.workers);
  std::vector<Rng> rngs;
  for (std::size_t w = 0; w < workers; ++w) rngs.emplace_back(derive_seed(config.seed, 100 + w));
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::vector<std::pair<double, long long>> results(workers);
    {
      std::vector<std::jthread> threads;
      for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t first = encoded.size() * w / workers;
        const std::size_t last = encoded.size() * (w + 1) / workers;
        threads.emplace_back([&, w, first, last] {
          results[w] = detail::train_shard(model, encoded, first, last, config, sampler, rngs[w], progress,
                                           total_pairs, total_tokens);
        });
      }
    }
    double loss = 0.0;
    long long pairs = 0;
    for (auto& [l, p] : results) {
      loss += l;
      pairs += p;
    }
    if (log) log->epoch_mean_loss.push_back(pairs ? loss / static_cast<double>(pairs) : 0.0);
  }
  return model;
}

// Model file: "SKIPGRAM" magic, u32 format version, u32 scalar width,
// u64 |V|, u64 dim, u32 window, i64 min_count, then |V| x (u32 length,
// bytes, i64 count), then input and output matrices row-major.
inline constexpr std::uint32_t kModelFormatVersion = 1;

namespace detail {
std::string model_header_magic();
void write_vocabulary(ByteWriter& out, const Vocabulary& vocab);
Vocabulary read_vocabulary(ByteReader& in, std::uint64_t size, long long min_count);
}  // namespace detail

template <class Scalar>
std::string serialize_model(const SkipGramModel<Scalar>& model) {
  detail::ByteWriter out;
  const auto magic = detail::model_header_magic();
  out.put_bytes(magic.data(), magic.size());
  out.put(kModelFormatVersion);
  out.put(static_cast<std::uint32_t>(sizeof(Scalar)));
  out.put(static_cast<std::uint64_t>(model.vocab.size()));
  out.put(static_cast<std::uint64_t>(model.dim()));
  out.put(static_cast<std::uint32_t>(model.window));
  out.put(static_cast<std::int64_t>(model.vocab.min_count()));
  detail::write_vocabulary(out, model.vocab);
  out.put_bytes(model.input.data(), sizeof(Scalar) * static_cast<std::size_t>(model.input.size()));
  out.put_bytes(model.output.data(), sizeof(Scalar) * static_cast<std::size_t>(model.output.size()));
  return out.bytes();
}

namespace detail {
template <class Stored, class Scalar>
void read_matrix(ByteReader& in, RowMatrix<Scalar>& m, std::uint64_t rows, std::uint64_t cols) {
  const std::size_t count = static_cast<std::size_t>(rows * cols);
  if (in.remaining() / sizeof(Stored) < count) {
    in.fail(fmt::format("truncated input, matrix needs {} bytes but only {} remain", count * sizeof(Stored),
                        in.remaining()));
  }
  RowMatrix<Stored> raw(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  in.get_bytes(raw.data(), count * sizeof(Stored));
  if (!raw.allFinite()) in.fail("non-finite matrix entry");
  m = raw.template cast<Scalar>();
}
}  // namespace detail

template <class Scalar>
SkipGramModel<Scalar> deserialize_model(std::string_view bytes, const std::string& source) {
  detail::ByteReader in(bytes, source);
  const auto magic = detail::model_header_magic();
  std::string got(magic.size(), '\0');
  in.get_bytes(got.data(), got.size());
  if (got != magic) in.fail("not a skip-gram model file (bad magic)");
  const auto version = in.get<std::uint32_t>();
  if (version != kModelFormatVersion)
    in.fail(fmt::format("model format version {} is not supported (expected version {})", version,
                        kModelFormatVersion));
  const auto width = in.get<std::uint32_t>();
  if (width != 4 && width != 8) in.fail(fmt::format("unsupported scalar width {}", width));
  const auto size = in.get<std::uint64_t>();
  const auto dim = in.get<std::uint64_t>();
  const auto window = in.get<std::uint32_t>();
  const auto min_count = in.get<std::int64_t>();
  if (dim == 0 || dim > (1u << 20)) in.fail(fmt::format("implausible dimension {}", dim));
  if (window == 0) in.fail("window must be positive");
  SkipGramModel<Scalar> model;
  model.window = static_cast<int>(window);
  model.vocab = detail::read_vocabulary(in, size, min_count);
  if (width == 4) {
    detail::read_matrix<float>(in, model.input, size, dim);
    detail::read_matrix<float>(in, model.output, size, dim);
  } else {
    detail::read_matrix<double>(in, model.input, size, dim);
    detail::read_matrix<double>(in, model.output, size, dim);
  }
  if (in.remaining() != 0) in.fail(fmt::format("{} trailing bytes", in.remaining()));
  return model;
}

void write_binary_file(const std::filesystem::path& path, std::string_view bytes);

template <class Scalar>
void save_model(const SkipGramModel<Scalar>& model, const std::filesystem::path& path) {
  write_binary_file(path, serialize_model(model));
}

template <class Scalar>
SkipGramModel<Scalar> load_model(const std::filesystem::path& path) {
  return deserialize_model<Scalar>(tsv::read_text(path), path.string());
}

}  // namespace eyecorp
