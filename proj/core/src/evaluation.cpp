#include "gappy/evaluation.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "gappy/errors.hpp"

namespace gappy {

namespace {

void require_same_length(const SpanCorpus& gold, const SpanCorpus& pred) {
  if (gold.size() != pred.size()) {
    throw DataError("gold has " + std::to_string(gold.size()) + " sentences, prediction has " +
                    std::to_string(pred.size()));
  }
}

// Marks spans on each side that have an exact counterpart on the other,
// pairing each gold span with at most one prediction.
void match_exact(const std::vector<MweSpan>& gold, const std::vector<MweSpan>& pred, std::vector<bool>& gold_hit,
                 std::vector<bool>& pred_hit) {
  std::map<std::vector<int>, std::vector<std::size_t>> unmatched;
  for (std::size_t g = gold.size(); g-- > 0;) unmatched[gold[g].positions].push_back(g);
  gold_hit.assign(gold.size(), false);
  pred_hit.assign(pred.size(), false);
  for (std::size_t p = 0; p < pred.size(); ++p) {
    const auto it = unmatched.find(pred[p].positions);
    if (it == unmatched.end() || it->second.empty()) continue;
    gold_hit[it->second.back()] = true;
    it->second.pop_back();
    pred_hit[p] = true;
  }
}

std::vector<MweSpan> discontinuous_only(const std::vector<MweSpan>& spans) {
  std::vector<MweSpan> out;
  std::copy_if(spans.begin(), spans.end(), std::back_inserter(out), [](const MweSpan& s) { return gap_size(s) >= 1; });
  return out;
}

nlohmann::json scores_json(const Scores& s) {
  return {{"p", s.precision}, {"r", s.recall}, {"f", s.f1}, {"tp", s.tp}, {"pred", s.pred_count}, {"gold", s.gold_count}};
}

}  // namespace

Scores Scores::from_counts(std::size_t tp, std::size_t pred_count, std::size_t gold_count) {
  Scores s;
  s.tp = tp;
  s.pred_count = pred_count;
  s.gold_count = gold_count;
  s.precision = pred_count ? static_cast<double>(tp) / static_cast<double>(pred_count) : 0.0;
  s.recall = gold_count ? static_cast<double>(tp) / static_cast<double>(gold_count) : 0.0;
  s.f1 = s.precision + s.recall > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  return s;
}

Scores mwe_based_prf(const SpanCorpus& gold, const SpanCorpus& pred) {
  require_same_length(gold, pred);
  std::size_t tp = 0, n_pred = 0, n_gold = 0;
  std::vector<bool> gold_hit, pred_hit;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    match_exact(gold[i], pred[i], gold_hit, pred_hit);
    tp += static_cast<std::size_t>(std::count(pred_hit.begin(), pred_hit.end(), true));
    n_pred += pred[i].size();
    n_gold += gold[i].size();
  }
  return Scores::from_counts(tp, n_pred, n_gold);
}

Scores token_based_prf(const SpanCorpus& gold, const SpanCorpus& pred) {
  require_same_length(gold, pred);
  std::size_t tp = 0, n_pred = 0, n_gold = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    std::set<int> g, p;
    for (const MweSpan& s : gold[i]) g.insert(s.positions.begin(), s.positions.end());
    for (const MweSpan& s : pred[i]) p.insert(s.positions.begin(), s.positions.end());
    for (int pos : p) tp += g.count(pos);
    n_pred += p.size();
    n_gold += g.size();
  }
  return Scores::from_counts(tp, n_pred, n_gold);
}

Scores discontinuous_scores(const SpanCorpus& gold, const SpanCorpus& pred) {
  require_same_length(gold, pred);
  SpanCorpus g, p;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    g.push_back(discontinuous_only(gold[i]));
    p.push_back(discontinuous_only(pred[i]));
  }
  return mwe_based_prf(g, p);
}

Scores brute_force_oracle(const SpanCorpus& gold, const SpanCorpus& pred) {
  require_same_length(gold, pred);
  std::size_t tp = 0, n_pred = 0, n_gold = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const auto& gs = gold[i];
    const auto& ps = pred[i];
    std::vector<char> used(gs.size(), 0);
    for (std::size_t a = 0; a < ps.size(); ++a) {
      for (std::size_t b = 0; b < gs.size(); ++b) {
        if (used[b] || ps[a].positions.size() != gs[b].positions.size()) continue;
        bool same = true;
        for (std::size_t k = 0; k < gs[b].positions.size(); ++k) same = same && ps[a].positions[k] == gs[b].positions[k];
        if (same) {
          used[b] = 1;
          ++tp;
          break;
        }
      }
    }
    n_pred += ps.size();
    n_gold += gs.size();
  }
  return Scores::from_counts(tp, n_pred, n_gold);
}

GapReport gap_report(const SpanCorpus& gold, const SpanCorpus& pred, int max_bucket) {
  require_same_length(gold, pred);
  if (max_bucket < 1) throw std::invalid_argument("gap report needs max_bucket >= 1");
  struct Counts {
    std::size_t tp = 0, pred = 0, gold = 0;
  };
  std::map<int, Counts> counts;
  const auto bucket = [max_bucket](const MweSpan& s) { return std::min(gap_size(s), max_bucket); };
  std::vector<bool> gold_hit, pred_hit;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    match_exact(gold[i], pred[i], gold_hit, pred_hit);
    for (std::size_t g = 0; g < gold[i].size(); ++g) {
      Counts& c = counts[bucket(gold[i][g])];
      ++c.gold;
      if (gold_hit[g]) ++c.tp;
    }
    for (const MweSpan& p : pred[i]) ++counts[bucket(p)].pred;
  }
  GapReport report;
  report.max_bucket = max_bucket;
  Counts disc;
  for (const auto& [gap, c] : counts) {
    report.buckets[gap] = Scores::from_counts(c.tp, c.pred, c.gold);
    if (gap >= 1) {
      disc.tp += c.tp;
      disc.pred += c.pred;
      disc.gold += c.gold;
    }
  }
  report.discontinuous = Scores::from_counts(disc.tp, disc.pred, disc.gold);
  return report;
}

std::string gap_report_csv(const GapReport& report) {
  std::string out = "gap,precision,recall,f1,gold_count,pred_count\n";
  for (const auto& [gap, s] : report.buckets) {
    out += fmt::format("{},{:.6f},{:.6f},{:.6f},{},{}\n", gap, s.precision, s.recall, s.f1, s.gold_count,
                       s.pred_count);
  }
  return out;
}

EvaluationSummary evaluate(const SpanCorpus& gold, const SpanCorpus& pred) {
  return {mwe_based_prf(gold, pred), token_based_prf(gold, pred), discontinuous_scores(gold, pred)};
}

std::string summary_json(const EvaluationSummary& summary) {
  nlohmann::json j = {{"mwe_based", scores_json(summary.mwe_based)},
                      {"token_based", scores_json(summary.token_based)},
                      {"discontinuous", scores_json(summary.discontinuous)}};
  return j.dump(2);
}

SpanCorpus spans_of(const Corpus& corpus) {
  SpanCorpus out;
  out.reserve(corpus.sentences.size());
  for (const Sentence& s : corpus.sentences) out.push_back(s.spans);
  return out;
}

}  // namespace gappy
