#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "gappy/corpus.hpp"
#include "gappy/evaluation.hpp"
#include "gappy/models.hpp"

namespace gappy {

struct TrainConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t batch_size = 8;  // sentences per optimizer step
  std::size_t max_epochs = 300;
  std::size_t patience = 10;   // epochs without dev improvement before stopping
  std::uint64_t seed = 1;
  bool shuffle = true;
  double clip_norm = 0.0;  // global gradient norm cap; 0 disables
  double target_f = 0.0;   // stop once dev MWE-based F reaches this; 0 disables
  bool record_time = true;  // false logs 0 seconds, making the log reproducible byte for byte
};

// Throws ConfigError naming every offending field.
void validate(const TrainConfig& cfg);

struct AdamState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::uint64_t step = 0;
};

// Bias-corrected Adam update of every parameter from its gradient; the
// gradients are zeroed afterwards.
void adam_step(const ParameterList& params, AdamState& state, const TrainConfig& cfg);

// Rescales all gradients so their joint L2 norm is at most max_norm.
// Returns the norm before clipping.
double clip_gradients(const ParameterList& params, double max_norm);

struct EpochRecord {
  std::size_t epoch = 0;
  double loss = 0.0;
  double dev_token_f = 0.0;
  double dev_mwe_f = 0.0;
  double seconds = 0.0;
};

struct TrainLog {
  std::vector<EpochRecord> epochs;

  // epoch,loss,dev_token_f,dev_mwe_f,seconds
  std::string to_csv() const;
};

using ModelSnapshot = std::vector<std::vector<double>>;
ModelSnapshot snapshot(const ParameterList& tensors);
void restore(const ParameterList& tensors, const ModelSnapshot& snap);

struct TrainResult {
  ModelSnapshot best;  // values of model.state() at the selected epoch
  std::size_t best_epoch = 0;
  TrainLog log;
};

// Epoch loop with seeded shuffling, masked cross-entropy and Adam. After
// each epoch the dev set is scored; the best dev MWE-based F is kept and
// training stops after `patience` epochs without improvement. With an empty
// dev set the last epoch is kept. On return the model holds the kept state.
// Progress lines go to `log` when given.
TrainResult train(TaggerModel& model, const std::vector<EncodedSentence>& train_set,
                  const std::vector<EncodedSentence>& dev_set, const TrainConfig& cfg, std::ostream* log = nullptr);

SpanCorpus predict_spans(const TaggerModel& model, const std::vector<EncodedSentence>& data);
SpanCorpus gold_spans(const std::vector<EncodedSentence>& data);
EvaluationSummary evaluate_model(const TaggerModel& model, const std::vector<EncodedSentence>& data);

// Token-weighted mean cross-entropy over a data set.
double mean_loss(TaggerModel& model, const std::vector<EncodedSentence>& data, Mode mode);

inline constexpr int kMaxSyntheticGap = 5;

struct SyntheticSpec {
  std::uint64_t seed = 1;
  std::size_t sentences = 40;
  // Relative weights of gap sizes 0..5 for the planted expression.
  std::array<double, kMaxSyntheticGap + 1> gap_weights{1, 1, 1, 1, 0, 0};
  // Probability of an extra particle that is not attached to the verb.
  double distractor_rate = 0.5;
  // Assign gaps by exact largest-remainder quotas instead of sampling.
  bool stratified = false;
};

// Sentences of 5-12 tokens over a 30-word vocabulary, each with one planted
// verb + particle expression. The particle depends on the verb; every other
// token hangs off a chain that starts at the verb.
Corpus make_synthetic_corpus(const SyntheticSpec& spec);
Corpus make_synthetic_corpus(std::uint64_t seed, std::size_t sentences,
                             const std::array<double, kMaxSyntheticGap + 1>& gap_weights);

}  // namespace gappy
