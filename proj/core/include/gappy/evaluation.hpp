#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "gappy/corpus.hpp"

namespace gappy {

struct Scores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t tp = 0;
  std::size_t pred_count = 0;
  std::size_t gold_count = 0;

  // Zero denominators give 0.
  static Scores from_counts(std::size_t tp, std::size_t pred_count, std::size_t gold_count);
};

using SpanCorpus = std::vector<std::vector<MweSpan>>;

// Exact position-set matches, each gold span matchable once; categories ignored.
// Throws DataError when the sentence counts differ.
Scores mwe_based_prf(const SpanCorpus& gold, const SpanCorpus& pred);

// Overlap of the (sentence, position) sets covered by each side.
Scores token_based_prf(const SpanCorpus& gold, const SpanCorpus& pred);

// MWE-based scoring with both sides restricted to spans of gap size >= 1.
Scores discontinuous_scores(const SpanCorpus& gold, const SpanCorpus& pred);

// Exhaustive pairwise reference for mwe_based_prf.
Scores brute_force_oracle(const SpanCorpus& gold, const SpanCorpus& pred);

struct GapReport {
  // Gap size -> scores. Sizes >= max_bucket are merged into max_bucket. Gold
  // spans in a bucket are matched against all predictions (recall); predicted
  // spans in a bucket against all gold (precision).
  std::map<int, Scores> buckets;
  Scores discontinuous;  // every bucket with gap >= 1 pooled
  int max_bucket = 0;
};

GapReport gap_report(const SpanCorpus& gold, const SpanCorpus& pred, int max_bucket);

// "gap,precision,recall,f1,gold_count,pred_count" plus one row per bucket.
std::string gap_report_csv(const GapReport& report);

struct EvaluationSummary {
  Scores mwe_based;
  Scores token_based;
  Scores discontinuous;
};

EvaluationSummary evaluate(const SpanCorpus& gold, const SpanCorpus& pred);

// {metric: {p, r, f, tp, pred, gold}} for the three metrics.
std::string summary_json(const EvaluationSummary& summary);

SpanCorpus spans_of(const Corpus& corpus);

}  // namespace gappy
