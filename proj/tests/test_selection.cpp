#include <doctest.h>

#include <algorithm>
#include <set>

#include "eyecorp/random.hpp"
#include "eyecorp/selection.hpp"
#include "oracles.hpp"

using namespace eyecorp;

namespace {

SentenceScore score(const std::string& sid, const std::string& mid, double pp,
                    std::vector<std::string> tokens = {"eins", "zwei", "drei", "vier", "fuenf"}) {
  SentenceScore s;
  s.sentence_id = sid;
  s.model_id = mid;
  s.tokens = std::move(tokens);
  s.word_probs.assign(s.tokens.size(), 0.1);
  s.perplexity = pp;
  return s;
}

}  // namespace

TEST_CASE("ranking") {
  const std::vector<SentenceScore> s{score("s1", "a", 2.0), score("s2", "a", 5.0)};
  const auto r = rank_sentences(s, "a");
  CHECK(r.rank_of("s1") == 1);
  CHECK(r.rank_of("s2") == 2);
  const std::vector<SentenceScore> tie{score("s10", "a", 3.0), score("s2", "a", 3.0),
                                       score("s3", "a", std::numeric_limits<double>::infinity()),
                                       score("s4", "a", 9.0)};
  const auto t = rank_sentences(tie, "a");
  CHECK(t.rank_of("s2") == 1);
  CHECK(t.rank_of("s10") == 2);
  CHECK(t.rank_of("s3") == 4);
  CHECK_THROWS_AS(t.rank_of("nope"), DataError);
}

TEST_CASE("bounds") {
  SelectionConfig cfg;
  CHECK(within_bounds(std::vector<std::string>{"ab", "cd", "ef", "gh", "ij"}, cfg));
  CHECK_FALSE(within_bounds(std::vector<std::string>{"ab", "cd", "ef", "gh"}, cfg));
  CHECK_FALSE(within_bounds(std::vector<std::string>(16, "ab"), cfg));
  CHECK_FALSE(within_bounds(std::vector<std::string>{"a", "cd", "ef", "gh", "ij"}, cfg));
  CHECK(within_bounds(std::vector<std::string>{std::string(17, 'x'), "cd", "ef", "gh", "ij"}, cfg));
  CHECK_FALSE(within_bounds(std::vector<std::string>{std::string(18, 'x'), "cd", "ef", "gh", "ij"}, cfg));
  CHECK(within_bounds(std::vector<std::string>{"ää", "öö", "üü", "ßß", "ab"}, cfg));
}

TEST_CASE("selection matches exhaustive enumeration") {
  Rng rng(19);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 12;
    const std::size_t m = 2 + rng.below(2);
    std::vector<std::string> ids, model_ids;
    std::vector<int> order;
    for (std::size_t i = 0; i < n; ++i) {
      ids.push_back("s" + std::to_string(i + 1));
      order.push_back(static_cast<int>(i));
    }
    for (std::size_t a = 0; a < m; ++a) model_ids.push_back(std::string(1, static_cast<char>('a' + a)));
    std::vector<std::vector<double>> pp(m, std::vector<double>(n));
    std::vector<SentenceScore> scores;
    std::map<std::string, std::vector<std::string>> tokens;
    std::vector<bool> eligible(n);
    for (std::size_t i = 0; i < n; ++i) {
      const bool ok = rng.below(5) != 0;
      eligible[i] = ok;
      tokens[ids[i]] = std::vector<std::string>(ok ? 6 : 3, "ab");
    }
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t i = 0; i < n; ++i) {
        pp[a][i] = 1.0 + static_cast<double>(rng.below(6));  // ties on purpose
        scores.push_back(score(ids[i], model_ids[a], pp[a][i], tokens[ids[i]]));
      }
    std::vector<PerplexityRanking> rankings;
    for (const auto& id : model_ids) rankings.push_back(rank_sentences(scores, id));
    SelectionConfig cfg;
    const auto sel = select_discriminative(rankings, tokens, cfg);
    const auto expect = oracle::select(ids, pp, model_ids, cfg.fraction, eligible, order);
    REQUIRE(sel.sentences.size() == expect.size());
    for (std::size_t i = 0; i < expect.size(); ++i) {
      CHECK(sel.sentences[i].sentence_id == expect[i].first);
      CHECK(sel.sentences[i].model_id == expect[i].second);
    }
    std::set<std::string> seen;
    for (const auto& s : sel.sentences) CHECK(seen.insert(s.sentence_id).second);

    // a strictly monotone transform of every perplexity leaves the selection unchanged
    auto warped = scores;
    for (auto& s : warped) s.perplexity = std::exp(s.perplexity) * 3 + 1;
    std::vector<PerplexityRanking> r2;
    for (const auto& id : model_ids) r2.push_back(rank_sentences(warped, id));
    const auto sel2 = select_discriminative(r2, tokens, cfg);
    REQUIRE(sel2.sentences.size() == sel.sentences.size());
    for (std::size_t i = 0; i < sel.sentences.size(); ++i)
      CHECK(sel2.sentences[i].sentence_id == sel.sentences[i].sentence_id);
  }
}

TEST_CASE("strong discriminators come first and identical rankings are flagged") {
  std::vector<SentenceScore> s;
  std::map<std::string, std::vector<std::string>> tokens;
  for (int i = 1; i <= 9; ++i) {
    const auto id = "s" + std::to_string(i);
    tokens[id] = std::vector<std::string>(5, "ab");
    s.push_back(score(id, "a", i == 9 ? 0.5 : i, tokens[id]));
    s.push_back(score(id, "b", i == 9 ? 100 : 10 - i, tokens[id]));
  }
  std::vector<PerplexityRanking> r{rank_sentences(s, "a"), rank_sentences(s, "b")};
  const auto sel = select_discriminative(r, tokens, SelectionConfig{});
  CHECK(sel.quota == 3);
  CHECK(sel.sentences.front().sentence_id == "s9");
  CHECK(sel.sentences.front().model_id == "a");

  std::vector<SentenceScore> same;
  for (int i = 1; i <= 6; ++i) {
    const auto id = "s" + std::to_string(i);
    same.push_back(score(id, "a", i, tokens["s1"]));
    same.push_back(score(id, "b", i, tokens["s1"]));
    tokens[id] = tokens["s1"];
  }
  std::vector<PerplexityRanking> r2{rank_sentences(same, "a"), rank_sentences(same, "b")};
  std::map<std::string, std::vector<std::string>> six;
  for (int i = 1; i <= 6; ++i) six["s" + std::to_string(i)] = tokens["s1"];
  const auto flat = select_discriminative(r2, six, SelectionConfig{});
  CHECK(flat.non_discriminative);
  CHECK(flat.sentences.size() == 2);
  CHECK(flat.sentences[0].sentence_id == "s1");
  CHECK(flat.sentences[1].sentence_id == "s2");
  CHECK(flat.short_of_quota);
}

TEST_CASE("stimulus set, zero-WP flags and the multicollinearity gate") {
  SkipGramModel<double> m;
  m.vocab = Vocabulary({"aa", "bb", "cc"}, {3, 2, 1}, 1);
  Rng rng(3);
  m.input = RowMatrix<double>::Random(3, 2);
  m.output = RowMatrix<double>::Random(3, 2);
  const std::vector<Sentence> sentences{{"s1", {"aa", "bb", "zz", "cc", "aa"}}};
  const std::vector<NamedModel<double>> models{{"a", &m}, {"b", &m}};
  const auto scores = score_corpus<double>(models, sentences);
  const FrequencyTable fa({{"aa", 4}, {"bb", 1}}, 10);
  const std::vector<NamedFrequency> freqs{{"a", &fa}};
  const std::vector<std::string> ids{"s1"};
  const auto st = build_stimulus_set(ids, scores, freqs);
  REQUIRE(st.words.size() == 5);
  CHECK(st.words[2].wp[0] == 0.0);
  CHECK_FALSE(st.words[3].wf[0].has_value());
  CHECK(*st.words[0].wf[0] == doctest::Approx(std::log10(4e5)));
  CHECK(st.words[1].length == 2);

  const auto back = read_stimuli_tsv(write_stimuli_tsv(st), "st");
  CHECK(back.words.size() == 5);
  CHECK(back.model_ids == st.model_ids);
  CHECK(back.words[3].wp == st.words[3].wp);

  const auto flags = flag_zero_wp(st, m, "a", 2);
  REQUIRE(flags.size() == 1);
  CHECK(flags[0].position == 2);
  REQUIRE(flags[0].candidates.size() == 2);
  CHECK(flags[0].candidates[0].wp >= flags[0].candidates[1].wp);
  for (const auto& c : flags[0].candidates) {
    auto probe = sentences[0].tokens;
    probe[2] = c.word;
    CHECK(c.wp == doctest::Approx(*word_probability(m, std::span<const std::string>(probe), 2)).epsilon(1e-12));
  }
  CHECK(flag_zero_wp(back, m, "b", 3).size() == 1);

  // duplicated WP column: r = 1, infinite VIF, fail
  Eigen::MatrixXd cols(6, 3);
  cols << 1, 2, 2, 2, 1, 1, 3, 5, 5, 4, 3, 3, 5, 4, 4, 6, 8, 8;
  const std::vector<std::string> wp{"wp_a", "wp_b"};
  const auto dup = verify_multicollinearity({"length", "wp_a", "wp_b"}, cols, wp, 0.3);
  CHECK_FALSE(dup.pass);
  CHECK(std::isinf(dup.vif(1)));
  Eigen::MatrixXd orth(4, 2);
  orth << 1, 1, -1, 1, 1, -1, -1, -1;
  const auto ok = verify_multicollinearity({"wp_a", "wp_b"}, orth, wp, 0.3);
  CHECK(ok.pass);
  CHECK(ok.vif(0) == doctest::Approx(1.0));
  CHECK(ok.correlations.r(0, 0) == 1.0);
  Eigen::MatrixXd flat = orth;
  flat.col(1).setConstant(2);
  CHECK_THROWS_WITH_AS(verify_multicollinearity({"wp_a", "wp_b"}, flat, wp, 0.3), doctest::Contains("wp_b"),
                       DataError);
  const auto text = write_multicollinearity_tsv(dup);
  CHECK(text.find("vif") != std::string::npos);
}
