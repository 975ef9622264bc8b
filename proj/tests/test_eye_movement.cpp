#include <doctest.h>

#include "eyecorp/eye_movement.hpp"
#include "eyecorp/random.hpp"
#include "oracles.hpp"

using namespace eyecorp;

namespace {

std::vector<FixationEvent> trial(const std::string& id, const std::vector<std::pair<int, double>>& seq,
                                 const std::string& sentence = "s1") {
  std::vector<FixationEvent> out;
  long long n = 0;
  for (const auto& [w, d] : seq) out.push_back({id, sentence, ++n, w, d});
  return out;
}

const ViewingMeasures& find(const std::vector<ViewingMeasures>& m, const std::string& trial, int word) {
  for (const auto& x : m)
    if (x.trial_id == trial && x.word_index == word) return x;
  throw std::runtime_error("missing measure");
}

PredictorTable predictors(int words, double wp = 0.01) {
  PredictorTable t;
  t.columns = {{"length", PredictorKind::length}, {"wf_a", PredictorKind::word_frequency},
               {"wp_a", PredictorKind::word_probability}};
  for (int i = 0; i < words; ++i) t.add({"s1", i, words, "w", {4.0, 2.0, wp}});
  return t;
}

}  // namespace

TEST_CASE("hand-traced measures") {
  const auto m = compute_measures(trial("t1", {{3, 200}, {3, 150}, {4, 180}, {3, 220}}));
  REQUIRE(m.size() == 2);
  CHECK(find(m, "t1", 3).ffd == 200);
  CHECK(find(m, "t1", 3).gd == 350);
  CHECK(find(m, "t1", 3).tvd == 570);
  CHECK(find(m, "t1", 4).ffd == 180);
  CHECK(find(m, "t1", 4).gd == 180);
  CHECK(find(m, "t1", 4).tvd == 180);
  CHECK(compute_measures(std::vector<FixationEvent>{}).empty());
}

TEST_CASE("leftward regressions end the first pass unless rightward-only") {
  const auto fx = trial("t", {{3, 200}, {2, 100}, {3, 150}, {4, 90}});
  CHECK(find(compute_measures(fx), "t", 3).gd == 200);
  CHECK(find(compute_measures(fx, {true}), "t", 3).gd == 350);
}

TEST_CASE("trials never mix") {
  auto a = trial("a", {{0, 100}, {1, 120}});
  const auto b = trial("b", {{0, 300}, {1, 50}});
  a.insert(a.end(), b.begin(), b.end());
  const auto m = compute_measures(a);
  CHECK(find(m, "a", 0).tvd == 100);
  CHECK(find(m, "b", 0).tvd == 300);
}

TEST_CASE("input validation") {
  auto fx = trial("t", {{0, 100}, {1, 120}});
  fx[1].seq = 1;
  CHECK_THROWS_AS(compute_measures(fx), DataError);
  auto neg = trial("t", {{0, -5}});
  CHECK_THROWS_AS(compute_measures(neg), DataError);
  auto two = trial("t", {{0, 100}});
  two.push_back({"t", "s2", 5, 1, 100});
  CHECK_THROWS_AS(compute_measures(two), DataError);
}

TEST_CASE("random traces match the brute-force oracle") {
  Rng rng(1234);
  for (int trial_no = 0; trial_no < 1000; ++trial_no) {
    const int words = 1 + static_cast<int>(rng.below(10));
    const int count = static_cast<int>(rng.below(21));
    std::vector<oracle::Fix> raw;
    std::vector<FixationEvent> fx;
    for (int i = 0; i < count; ++i) {
      const int w = rng.below(8) == 0 ? -1 : static_cast<int>(rng.below(static_cast<std::uint64_t>(words)));
      const double d = 50 + static_cast<double>(rng.below(400));
      raw.push_back({w, d});
      fx.push_back({"t", "s", i * 2 + 1, w, d});
    }
    for (bool right : {false, true}) {
      const auto expect = oracle::trace(raw, right);
      const auto got = compute_measures(fx, {right});
      REQUIRE(got.size() == expect.size());
      for (const auto& m : got) {
        const auto& e = expect.at(m.word_index);
        CHECK(*m.ffd == e.ffd);
        CHECK(*m.gd == e.gd);
        CHECK(*m.tvd == e.tvd);
        CHECK(*m.ffd <= *m.gd);
        CHECK(*m.gd <= *m.tvd);
      }
    }
  }
}

TEST_CASE("short fixations are removed before runs are built") {
  ExclusionConfig cfg;
  const auto fx = trial("t", {{2, 200}, {3, 60}, {2, 100}, {3, 69}, {4, 70}});
  const auto m = measures_from_fixations(fx, cfg);
  CHECK(find(m, "t", 2).gd == 300);
  CHECK(find(m, "t", 4).ffd == 70);
  CHECK(find(m, "t", 3).excluded);
  CHECK(find(m, "t", 3).reason == ExclusionReason::short_fixation);
  CHECK_FALSE(find(m, "t", 3).ffd.has_value());
}

TEST_CASE("exclusion caps and reason order") {
  ExclusionConfig cfg;
  const auto table = predictors(6);
  // word 1: ffd 800 ok; word 2: ffd 801 capped; word 3: gd 1001 capped; word 4: tvd 1501 capped
  std::vector<ViewingMeasures> m{
      {"t", "s1", 0, 200, 200, 200, false, ExclusionReason::none},
      {"t", "s1", 1, 800, 1000, 1500, false, ExclusionReason::none},
      {"t", "s1", 2, 801, 900, 900, false, ExclusionReason::none},
      {"t", "s1", 3, 500, 1001, 1200, false, ExclusionReason::none},
      {"t", "s1", 4, 500, 700, 1501, false, ExclusionReason::none},
      {"t", "s1", 5, 200, 200, 200, false, ExclusionReason::none},
  };
  const auto a = apply_exclusions(m, table, cfg);
  REQUIRE(a.rows.size() == 6);
  CHECK(a.rows[0].measures.reason == ExclusionReason::edge_word);
  CHECK(a.rows[5].measures.reason == ExclusionReason::edge_word);
  const auto& ok = a.rows[1].measures;
  CHECK_FALSE(ok.excluded);
  CHECK(ok.ffd == 800);
  CHECK(ok.gd == 1000);
  CHECK(ok.tvd == 1500);
  CHECK_FALSE(a.rows[2].measures.ffd.has_value());
  CHECK(a.rows[2].measures.gd == 900);
  CHECK_FALSE(a.rows[2].measures.excluded);
  CHECK_FALSE(a.rows[3].measures.gd.has_value());
  CHECK_FALSE(a.rows[4].measures.tvd.has_value());

  std::vector<ViewingMeasures> all{{"t", "s1", 2, 900, 1100, 1600, false, ExclusionReason::none}};
  const auto dropped = apply_exclusions(all, table, cfg);
  CHECK(dropped.rows[0].measures.excluded);
  CHECK(dropped.rows[0].measures.reason == ExclusionReason::outlier);

  const auto zero = apply_exclusions(all, predictors(6, 0.0), cfg);
  CHECK(zero.rows[0].measures.reason == ExclusionReason::zero_wp_or_wf);

  std::vector<ViewingMeasures> stray{{"t", "s9", 1, 100, 100, 100, false, ExclusionReason::none}};
  CHECK_THROWS_AS(apply_exclusions(stray, table, cfg), DataError);
}

TEST_CASE("interest areas") {
  SentenceLayout layout{{{0, 50}, {60, 100}, {100, 150}}, {"a", "b", "c"}};
  CHECK(map_x_to_word(10, layout) == 0);
  CHECK_FALSE(map_x_to_word(55, layout).has_value());
  CHECK(map_x_to_word(100, layout) == 2);
  CHECK(map_x_to_word(60, layout) == 1);
  CHECK_FALSE(map_x_to_word(150, layout).has_value());
  CHECK_FALSE(map_x_to_word(-1, layout).has_value());
  SentenceLayout overlap{{{0, 50}, {40, 100}}, {"a", "b"}};
  CHECK_THROWS_AS(overlap.validate(), DataError);
}

TEST_CASE("fixation and measures files") {
  const std::string fix = "trial_id\tsentence_id\tseq\tword_index_or_x\tduration_ms\nt1\ts1\t1\t0\t200\nt1\ts1\t2\t1\t150\n";
  const auto events = read_fixations_tsv(fix, "f.tsv");
  REQUIRE(events.size() == 2);
  CHECK(events[1].word_index == 1);
  const auto layouts = read_layout_tsv("sentence_id\tword_index\tstart_px\tend_px\tword\ns1\t0\t0\t40\ta\ns1\t1\t50\t90\tb\n",
                                       "l.tsv");
  const std::string xs = "trial_id\tsentence_id\tseq\tword_index_or_x\tduration_ms\nt1\ts1\t1\t10.5\t200\nt1\ts1\t2\t45\t150\n";
  const auto mapped = read_fixations_tsv(xs, "x.tsv", &layouts);
  CHECK(mapped[0].word_index == 0);
  CHECK(mapped[1].word_index == -1);
  try {
    (void)read_fixations_tsv("trial_id\tsentence_id\tseq\tword_index_or_x\tduration_ms\nt1\ts1\tx\t0\t200\n", "bad.tsv");
    FAIL("expected an error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("bad.tsv:2") != std::string::npos);
  }
  auto m = compute_measures(events);
  m[0].excluded = true;
  m[0].reason = ExclusionReason::edge_word;
  m[1].gd.reset();
  CHECK(read_measures_tsv(write_measures_tsv(m), "m") == m);
}
