#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <nlohmann/json.hpp>
#include <set>
#include <stdexcept>

#include "gappy/errors.hpp"
#include "gappy/evaluation.hpp"
#include "test_util.hpp"

namespace gappy {
namespace {

using testing::span;

void expect_scores(const Scores& s, double p, double r, double f) {
  EXPECT_DOUBLE_EQ(s.precision, p);
  EXPECT_DOUBLE_EQ(s.recall, r);
  EXPECT_DOUBLE_EQ(s.f1, f);
}

TEST(Scores, ZeroDenominators) {
  expect_scores(Scores::from_counts(0, 0, 0), 0, 0, 0);
  expect_scores(Scores::from_counts(0, 3, 0), 0, 0, 0);
  expect_scores(Scores::from_counts(1, 2, 4), 0.5, 0.25, 2 * 0.5 * 0.25 / 0.75);
}

TEST(MweBased, HandFixture) {
  const SpanCorpus gold{{span({1, 2}), span({4, 6}, 2)}};
  const SpanCorpus pred{{span({1, 2}), span({4, 5}, 2)}};
  const Scores s = mwe_based_prf(gold, pred);
  expect_scores(s, 0.5, 0.5, 0.5);
  EXPECT_EQ(s.tp, 1u);
}

TEST(MweBased, IdentityEmptyAndCategories) {
  MweSpan a = span({2, 5});
  a.category = "VID";
  MweSpan b = span({2, 5});
  b.category = "LVC.full";
  expect_scores(mwe_based_prf({{a}}, {{b}}), 1, 1, 1);
  expect_scores(mwe_based_prf({{a}, {}}, {{}, {}}), 0, 0, 0);
  EXPECT_THROW(mwe_based_prf({{a}}, {}), DataError);
  EXPECT_THROW(token_based_prf({{a}}, {}), DataError);
}

TEST(MweBased, GoldMatchedOnlyOnce) {
  const Scores s = mwe_based_prf({{span({1, 2})}}, {{span({1, 2}), span({1, 2}, 2)}});
  EXPECT_EQ(s.tp, 1u);
  EXPECT_DOUBLE_EQ(s.precision, 0.5);
  EXPECT_DOUBLE_EQ(s.recall, 1.0);
}

TEST(TokenBased, HandFixtures) {
  expect_scores(token_based_prf({{span({1, 2}), span({4, 6}, 2)}}, {{span({1, 2}), span({4, 5}, 2)}}), 0.75, 0.75,
                0.75);
  expect_scores(token_based_prf({{span({1, 2})}}, {{span({3, 4})}}), 0, 0, 0);
  expect_scores(token_based_prf({{span({1, 2, 3, 4})}}, {{span({1, 2})}}), 1.0, 0.5, 2.0 / 3.0);
}

TEST(Discontinuous, Fixtures) {
  const Scores none = discontinuous_scores({{span({1, 2})}}, {{span({1, 2})}});
  EXPECT_EQ(none.gold_count, 0u);
  EXPECT_EQ(none.recall, 0.0);
  expect_scores(discontinuous_scores({{span({3, 5})}}, {{span({3, 5})}}), 1, 1, 1);

  const SpanCorpus gold{{span({1, 3}), span({5, 8}, 2), span({10, 11}, 3)}};
  const SpanCorpus pred{{span({1, 3}), span({5, 7}, 2), span({10, 11}, 3)}};
  const Scores s = discontinuous_scores(gold, pred);
  EXPECT_EQ(s.gold_count, 2u);
  EXPECT_EQ(s.pred_count, 2u);
  expect_scores(s, 0.5, 0.5, 0.5);
}

TEST(GapSize, Examples) {
  EXPECT_EQ(gap_size(span({4, 6})), 1);
  EXPECT_EQ(gap_size(span({1, 2, 3})), 0);
  EXPECT_EQ(gap_size(span({2, 4, 9})), 5);
}

TEST(GapReport, HandFixture) {
  const GapReport r = gap_report({{span({1, 2}), span({4, 7}, 2)}}, {{span({4, 7})}}, 5);
  ASSERT_EQ(r.buckets.count(0), 1u);
  ASSERT_EQ(r.buckets.count(2), 1u);
  EXPECT_EQ(r.buckets.at(0).recall, 0.0);
  EXPECT_EQ(r.buckets.at(2).recall, 1.0);
  EXPECT_EQ(r.buckets.at(2).precision, 1.0);
  EXPECT_EQ(r.discontinuous.tp, 1u);
}

TEST(GapReport, MergesLargeGapsAndValidates) {
  const GapReport r = gap_report({{span({1, 9}), span({10, 13}, 2)}}, {{span({1, 9})}}, 2);
  EXPECT_EQ(r.buckets.size(), 1u);
  EXPECT_EQ(r.buckets.at(2).gold_count, 2u);
  EXPECT_TRUE(gap_report({}, {}, 3).buckets.empty());
  EXPECT_THROW(gap_report({}, {}, 0), std::invalid_argument);
}

TEST(GapReport, Csv) {
  const GapReport r = gap_report({{span({1, 2}), span({4, 7}, 2)}}, {{span({4, 7})}}, 5);
  EXPECT_EQ(gap_report_csv(r),
            "gap,precision,recall,f1,gold_count,pred_count\n"
            "0,0.000000,0.000000,0.000000,1,0\n"
            "2,1.000000,1.000000,1.000000,1,1\n");
}

TEST(Summary, JsonShape) {
  const SpanCorpus gold{{span({1, 3})}};
  const auto j = nlohmann::json::parse(summary_json(evaluate(gold, gold)));
  EXPECT_EQ(j["mwe_based"]["tp"].get<int>(), 1);
  EXPECT_EQ(j["token_based"]["tp"].get<int>(), 2);  // tokens, not spans
  for (const char* metric : {"mwe_based", "token_based", "discontinuous"}) {
    ASSERT_TRUE(j.contains(metric)) << metric;
    EXPECT_EQ(j[metric]["f"].get<double>(), 1.0);
    for (const char* key : {"p", "r", "tp", "pred", "gold"}) EXPECT_TRUE(j[metric].contains(key));
  }
}

// Random span sets with some predictions copied from gold.
std::pair<SpanCorpus, SpanCorpus> random_instance(Rng& rng) {
  SpanCorpus gold, pred;
  const std::size_t sentences = 1 + rng.below(4);
  const auto random_span = [&rng] {
    std::set<int> pos;
    const std::size_t k = 1 + rng.below(3);
    while (pos.size() < k) pos.insert(1 + static_cast<int>(rng.below(6)));
    return span({pos.begin(), pos.end()});
  };
  for (std::size_t i = 0; i < sentences; ++i) {
    std::vector<MweSpan> g, p;
    for (std::size_t n = rng.below(6); n-- > 0;) g.push_back(random_span());
    for (std::size_t n = rng.below(6); n-- > 0;) {
      if (!g.empty() && rng.uniform() < 0.5) {
        p.push_back(g[rng.below(g.size())]);
      } else {
        p.push_back(random_span());
      }
    }
    gold.push_back(g);
    pred.push_back(p);
  }
  return {gold, pred};
}

// Multiset intersection of position lists.
std::size_t multiset_tp(const SpanCorpus& gold, const SpanCorpus& pred) {
  std::size_t tp = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    std::map<std::vector<int>, int> g, p;
    for (const auto& s : gold[i]) ++g[s.positions];
    for (const auto& s : pred[i]) ++p[s.positions];
    for (const auto& [k, n] : p) tp += static_cast<std::size_t>(std::min(n, g.count(k) ? g.at(k) : 0));
  }
  return tp;
}

TEST(MetricProperties, OracleAgreement) {
  Rng rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const auto [gold, pred] = random_instance(rng);
    const Scores a = mwe_based_prf(gold, pred), b = brute_force_oracle(gold, pred);
    EXPECT_EQ(a.tp, b.tp);
    EXPECT_EQ(a.pred_count, b.pred_count);
    EXPECT_EQ(a.gold_count, b.gold_count);
    EXPECT_EQ(a.tp, multiset_tp(gold, pred));
  }
}

TEST(MetricProperties, IdentityScoresOne) {
  Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const auto [gold, unused] = random_instance(rng);
    std::size_t n = 0;
    for (const auto& s : gold) n += s.size();
    if (n == 0) continue;
    expect_scores(mwe_based_prf(gold, gold), 1, 1, 1);
  }
}

TEST(MetricProperties, TokenTpCoversExactMatches) {
  Rng rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    const auto [gold, pred] = random_instance(rng);
    // exact matches are disjoint only when spans are; count tokens of matched spans as a set
    std::size_t matched_tokens = 0;
    for (std::size_t i = 0; i < gold.size(); ++i) {
      std::set<int> covered;
      for (const auto& p : pred[i]) {
        for (const auto& g : gold[i]) {
          if (g.positions == p.positions) covered.insert(p.positions.begin(), p.positions.end());
        }
      }
      matched_tokens += covered.size();
    }
    EXPECT_GE(token_based_prf(gold, pred).tp, matched_tokens);
  }
}

TEST(MetricProperties, BucketsSumToTotals) {
  Rng rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    const auto [gold, pred] = random_instance(rng);
    const int top = 1 + static_cast<int>(rng.below(4));
    const GapReport r = gap_report(gold, pred, top);
    const Scores all = mwe_based_prf(gold, pred);
    std::size_t g = 0, p = 0, tp = 0, dg = 0, dp = 0, dtp = 0;
    for (const auto& [gap, s] : r.buckets) {
      EXPECT_LE(gap, top);
      g += s.gold_count;
      p += s.pred_count;
      tp += s.tp;
      if (gap >= 1) {
        dg += s.gold_count;
        dp += s.pred_count;
        dtp += s.tp;
      }
    }
    EXPECT_EQ(g, all.gold_count);
    EXPECT_EQ(p, all.pred_count);
    EXPECT_EQ(tp, all.tp);
    EXPECT_EQ(dg, r.discontinuous.gold_count);
    EXPECT_EQ(dp, r.discontinuous.pred_count);
    EXPECT_EQ(dtp, r.discontinuous.tp);
    const Scores disc = discontinuous_scores(gold, pred);
    EXPECT_EQ(disc.tp, r.discontinuous.tp);
    EXPECT_EQ(disc.gold_count, r.discontinuous.gold_count);
  }
}

TEST(MetricProperties, SingleBucketMatchesOverall) {
  // every span here is contiguous, so one bucket holds them all
  const SpanCorpus gold{{span({1, 2}), span({3, 4}, 2)}, {span({5})}};
  const SpanCorpus pred{{span({1, 2})}, {span({5}), span({6})}};
  const GapReport r = gap_report(gold, pred, 1);
  ASSERT_EQ(r.buckets.size(), 1u);
  const Scores all = mwe_based_prf(gold, pred), b = r.buckets.at(0);
  expect_scores(b, all.precision, all.recall, all.f1);
}

TEST(SpansOf, ReadsCorpus) {
  const Corpus c = parse_cupt(testing::row(1, "a", 0, "1:VID") + testing::row(2, "b", 1, "1") + "\n" +
                              testing::row(1, "c", 0));
  const SpanCorpus s = spans_of(c);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(testing::positions_of(s[0]), (std::vector<std::vector<int>>{{1, 2}}));
  EXPECT_TRUE(s[1].empty());
}

}  // namespace
}  // namespace gappy
