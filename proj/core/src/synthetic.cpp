#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "gappy/rng.hpp"
#include "gappy/training.hpp"

namespace gappy {

namespace {

constexpr const char* kVerbs[] = {"take", "make", "put", "give", "pick"};
constexpr const char* kParticles[] = {"up", "off", "on", "out", "down"};
constexpr const char* kFillers[] = {"the",  "a",     "blue",  "mask",   "final",  "look",  "effort",
                                    "box",  "car",   "dog",   "house",  "idea",   "letter", "market",
                                    "plan", "road",  "story", "table",  "speech", "window"};

constexpr int kMinLength = 5;
constexpr int kMaxLength = 12;

// Largest-remainder quotas: exactly `n` gaps distributed per the weights.
std::vector<int> stratified_gaps(std::size_t n, const std::vector<double>& weights, Rng& rng) {
  double total = 0.0;
  for (double w : weights) total += w;
  std::vector<std::size_t> quota(weights.size());
  std::vector<std::pair<double, std::size_t>> rema;
  std::size_t assigned = 0;
  for (std::size_t g = 0; g < weights.size(); ++g) {
    const double exact = static_cast<double>(n) * weights[g] / total;
    quota[g] = static_cast<std::size_t>(std::floor(exact));
    assigned += quota[g];
    rema.emplace_back(exact - std::floor(exact), g);
  }
  std::stable_sort(rema.begin(), rema.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < n; ++k, ++assigned) ++quota[rema[k % rema.size()].second];
  std::vector<int> gaps;
  for (std::size_t g = 0; g < quota.size(); ++g) gaps.insert(gaps.end(), quota[g], static_cast<int>(g));
  rng.shuffle(gaps);
  return gaps;
}

Token make_token(int id, const std::string& form, const char* upos) {
  Token t;
  t.id = id;
  t.form = form;
  t.lemma = form;
  t.upos = upos;
  return t;
}

}  // namespace

Corpus make_synthetic_corpus(const SyntheticSpec& spec) {
  std::vector<double> weights(spec.gap_weights.begin(), spec.gap_weights.end());
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw std::invalid_argument("gap weights must be non-negative");
    total += w;
  }
  if (!(total > 0.0)) throw std::invalid_argument("gap weights must not all be zero");
  if (spec.distractor_rate < 0.0 || spec.distractor_rate > 1.0) {
    throw std::invalid_argument("distractor rate must lie in [0, 1]");
  }

  Rng rng(spec.seed);
  std::vector<int> planned;
  if (spec.stratified) planned = stratified_gaps(spec.sentences, weights, rng);

  Corpus corpus;
  for (std::size_t k = 0; k < spec.sentences; ++k) {
    const int gap = spec.stratified ? planned[k] : static_cast<int>(rng.categorical(weights));
    const bool distractor = rng.uniform() < spec.distractor_rate;
    const int lo = std::max(kMinLength, gap + 2);
    const int len = lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(kMaxLength - lo + 1)));
    const int verb = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(len - gap - 1)));
    const int particle = verb + gap + 1;

    Sentence s;
    s.source_id = "synth-" + std::to_string(k + 1);
    std::vector<int> others;
    for (int id = 1; id <= len; ++id) {
      if (id == verb) {
        s.tokens.push_back(make_token(id, kVerbs[rng.below(5)], "VERB"));
        s.tokens.back().head = 0;
        s.tokens.back().deprel = "root";
      } else if (id == particle) {
        s.tokens.push_back(make_token(id, kParticles[rng.below(5)], "ADP"));
        s.tokens.back().head = verb;
        s.tokens.back().deprel = "compound:prt";
      } else {
        s.tokens.push_back(make_token(id, kFillers[rng.below(20)], "NOUN"));
        others.push_back(id);
      }
    }
    // Chain: verb -> first other -> second other -> ...
    for (std::size_t j = 0; j < others.size(); ++j) {
      Token& t = s.tokens[static_cast<std::size_t>(others[j] - 1)];
      t.head = j == 0 ? verb : others[j - 1];
      t.deprel = j == 0 ? "obj" : "dep";
    }
    // A loose particle, never the verb's direct dependent.
    if (distractor && others.size() >= 2) {
      const int id = others[1 + rng.below(others.size() - 1)];
      Token& t = s.tokens[static_cast<std::size_t>(id - 1)];
      t.form = t.lemma = kParticles[rng.below(5)];
      t.upos = "ADP";
    }

    s.spans.push_back(MweSpan{1, std::string("VPC.full"), {verb, particle}});
    const auto column = format_mwe_column(s.tokens.size(), s.spans);
    for (std::size_t i = 0; i < s.tokens.size(); ++i) s.tokens[i].mwe_col = column[i];
    corpus.sentences.push_back(std::move(s));
  }
  return corpus;
}

Corpus make_synthetic_corpus(std::uint64_t seed, std::size_t sentences,
                             const std::array<double, kMaxSyntheticGap + 1>& gap_weights) {
  SyntheticSpec spec;
  spec.seed = seed;
  spec.sentences = sentences;
  spec.gap_weights = gap_weights;
  return make_synthetic_corpus(spec);
}

}  // namespace gappy
