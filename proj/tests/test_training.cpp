#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gappy/errors.hpp"
#include "gappy/training.hpp"
#include "test_util.hpp"

namespace gappy {
namespace {

ModelConfig tiny(std::size_t vocab, ModelKind kind = ModelKind::HCombined) {
  ModelConfig c;
  c.kind = kind;
  c.vocab_size = vocab;
  c.embed_dim = 8;
  c.gcn_dim = 8;
  c.filters_a = 4;
  c.filters_b = 4;
  c.heads = 2;
  c.lstm_dim = 8;
  return c;
}

struct Data {
  Vocab vocab;
  std::vector<EncodedSentence> train, dev;
};

Data synthetic_data(std::uint64_t seed, std::size_t n_train, std::size_t n_dev) {
  const Corpus tr = make_synthetic_corpus(seed, n_train, {1, 1, 1, 1, 0, 0});
  const Corpus dv = make_synthetic_corpus(seed + 1000, n_dev, {1, 1, 1, 1, 0, 0});
  Data d{build_vocab(tr, 1), {}, {}};
  d.train = encode_corpus(tr, d.vocab);
  d.dev = encode_corpus(dv, d.vocab);
  return d;
}

TEST(Adam, FirstStepMovesByLearningRate) {
  // loss = 3 * theta; the bias-corrected first step is lr * g / |g|
  Tensor theta = Tensor::from({1}, {0.0}, true);
  backward(scale(theta, 3.0));
  TrainConfig cfg;
  cfg.learning_rate = 0.1;
  AdamState state;
  adam_step({{"theta", theta}}, state, cfg);
  EXPECT_NEAR(theta.values()[0], -0.1, 1e-6);
  EXPECT_EQ(state.step, 1u);
  EXPECT_EQ(theta.grad()[0], 0.0);
}

TEST(Adam, SecondStepOracle) {
  Tensor theta = Tensor::from({2}, {1.0, -2.0}, true);
  TrainConfig cfg;
  cfg.learning_rate = 0.01;
  AdamState state;
  // independent reference implementation of two steps with gradient 2*theta
  double ref[2] = {1.0, -2.0}, m[2] = {0, 0}, v[2] = {0, 0};
  for (int t = 1; t <= 2; ++t) {
    backward(sum(mul(theta, theta)));
    adam_step({{"theta", theta}}, state, cfg);
    for (int i = 0; i < 2; ++i) {
      const double g = 2 * ref[i];
      m[i] = 0.9 * m[i] + 0.1 * g;
      v[i] = 0.999 * v[i] + 0.001 * g * g;
      const double mh = m[i] / (1 - std::pow(0.9, t)), vh = v[i] / (1 - std::pow(0.999, t));
      ref[i] -= 0.01 * mh / (std::sqrt(vh) + 1e-8);
    }
  }
  EXPECT_NEAR(theta.values()[0], ref[0], 1e-12);
  EXPECT_NEAR(theta.values()[1], ref[1], 1e-12);
}

TEST(Adam, ZeroGradientIsNoOp) {
  Tensor theta = Tensor::from({3}, {1.0, 2.0, 3.0}, true);
  backward(scale(sum(theta), 0.0));
  TrainConfig cfg;
  AdamState state;
  adam_step({{"theta", theta}}, state, cfg);
  EXPECT_EQ(testing::values_of(theta), (std::vector<double>{1.0, 2.0, 3.0}));
}

TEST(ClipGradients, RescalesJointNorm) {
  Tensor a = Tensor::from({1}, {0.0}, true), b = Tensor::from({1}, {0.0}, true);
  backward(add(scale(a, 3.0), scale(b, 4.0)));
  EXPECT_DOUBLE_EQ(clip_gradients({{"a", a}, {"b", b}}, 1.0), 5.0);
  EXPECT_NEAR(a.grad()[0], 0.6, 1e-12);
  EXPECT_NEAR(b.grad()[0], 0.8, 1e-12);
  EXPECT_NEAR(clip_gradients({{"a", a}, {"b", b}}, 10.0), 1.0, 1e-12);
  EXPECT_NEAR(a.grad()[0], 0.6, 1e-12);
}

TEST(TrainConfig, Validation) {
  TrainConfig cfg;
  EXPECT_NO_THROW(validate(cfg));
  cfg.learning_rate = 0;
  cfg.batch_size = 0;
  try {
    validate(cfg);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("learning_rate"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("batch_size"), std::string::npos);
  }
}

TEST(TrainLog, CsvFormat) {
  TrainLog log;
  log.epochs.push_back({1, 1.25, 0.5, 0.25, 0.0});
  log.epochs.push_back({2, 0.75, 0.5, 1.0, 1.5});
  const std::string csv = log.to_csv();
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "epoch,loss,dev_token_f,dev_mwe_f,seconds");
  std::getline(in, line);
  EXPECT_EQ(line.substr(0, 7), "1,1.25,");
  std::getline(in, line);
  EXPECT_EQ(line.substr(line.rfind(',')), ",1.500");
}

TEST(Train, PatienceStopsOnFlatDevScore) {
  const Data d = synthetic_data(3, 16, 8);
  TaggerModel model(tiny(d.vocab.size()));
  TrainConfig cfg;
  cfg.learning_rate = 1e-12;  // dev score cannot move
  cfg.patience = 1;
  cfg.max_epochs = 20;
  const TrainResult r = train(model, d.train, d.dev, cfg);
  EXPECT_EQ(r.log.epochs.size(), 2u);
  EXPECT_EQ(r.best_epoch, 1u);
}

TEST(Train, KeepsBestDevEpoch) {
  const Data d = synthetic_data(5, 60, 20);
  TaggerModel model(tiny(d.vocab.size()));
  TrainConfig cfg;
  cfg.learning_rate = 5e-3;
  cfg.max_epochs = 12;
  cfg.patience = 3;
  const TrainResult r = train(model, d.train, d.dev, cfg);
  ASSERT_FALSE(r.log.epochs.empty());
  double best = -1;
  for (const auto& e : r.log.epochs) best = std::max(best, e.dev_mwe_f);
  ASSERT_GE(r.best_epoch, 1u);
  EXPECT_EQ(r.log.epochs[r.best_epoch - 1].dev_mwe_f, best);
  // the model on return is the selected one
  EXPECT_EQ(evaluate_model(model, d.dev).mwe_based.f1, best);

  const std::string text = model_to_json(model, d.vocab);
  const LoadedModel loaded = model_from_json(text);
  EXPECT_EQ(evaluate_model(loaded.model, d.dev).mwe_based.f1, best);
}

TEST(Train, LossFallsByHalf) {
  const Data d = synthetic_data(7, 40, 0);
  TaggerModel model(tiny(d.vocab.size()));
  const double before = mean_loss(model, d.train, Mode::Infer);
  TrainConfig cfg;
  cfg.learning_rate = 5e-3;
  cfg.max_epochs = 15;
  const TrainResult r = train(model, d.train, {}, cfg);
  EXPECT_EQ(r.log.epochs.size(), 15u);
  const double after = mean_loss(model, d.train, Mode::Infer);
  EXPECT_LT(after, 0.5 * before) << before << " -> " << after;
}

TEST(Train, SeededRunsAreIdentical) {
  const Data d = synthetic_data(9, 20, 10);
  TrainConfig cfg;
  cfg.max_epochs = 3;
  cfg.record_time = false;
  TaggerModel a(tiny(d.vocab.size())), b(tiny(d.vocab.size()));
  const TrainResult ra = train(a, d.train, d.dev, cfg);
  const TrainResult rb = train(b, d.train, d.dev, cfg);
  EXPECT_EQ(ra.log.to_csv(), rb.log.to_csv());
  EXPECT_EQ(model_to_json(a, d.vocab), model_to_json(b, d.vocab));
}

TEST(Train, EmptyTrainingSet) {
  TaggerModel model(tiny(4));
  EXPECT_THROW(train(model, {}, {}, TrainConfig{}), DataError);
}

TEST(Train, ProgressLines) {
  const Data d = synthetic_data(11, 8, 4);
  TaggerModel model(tiny(d.vocab.size()));
  TrainConfig cfg;
  cfg.max_epochs = 2;
  std::ostringstream log;
  train(model, d.train, d.dev, cfg, &log);
  EXPECT_NE(log.str().find("epoch"), std::string::npos);
}

std::size_t count_tag(const Sentence& s, Tag tag) {
  const auto tags = encode_bigo(s);
  return static_cast<std::size_t>(std::count(tags.begin(), tags.end(), tag));
}

TEST(Synthetic, ContiguousExpressionsHaveNoGapTags) {
  const Corpus c = make_synthetic_corpus(1, 50, {1, 0, 0, 0, 0, 0});
  ASSERT_EQ(c.sentences.size(), 50u);
  for (const Sentence& s : c.sentences) {
    EXPECT_EQ(count_tag(s, Tag::G), 0u);
    EXPECT_EQ(count_tag(s, Tag::B), 1u);
    EXPECT_EQ(count_tag(s, Tag::I), 1u);
  }
}

TEST(Synthetic, GapTwoGivesTwoGapTags) {
  for (const Sentence& s : make_synthetic_corpus(2, 50, {0, 0, 1, 0, 0, 0}).sentences) {
    EXPECT_EQ(count_tag(s, Tag::G), 2u);
    ASSERT_EQ(s.spans.size(), 1u);
    EXPECT_EQ(gap_size(s.spans[0]), 2);
  }
}

TEST(Synthetic, ShapeOfSentences) {
  SyntheticSpec spec;
  spec.sentences = 200;
  spec.gap_weights = {1, 1, 1, 1, 1, 1};
  spec.distractor_rate = 1.0;
  const Corpus c = make_synthetic_corpus(spec);
  Vocab vocab = build_vocab(c, 1);
  EXPECT_LE(vocab.size(), 32u);
  for (const Sentence& s : c.sentences) {
    EXPECT_GE(s.size(), 5u);
    EXPECT_LE(s.size(), 12u);
    EXPECT_FALSE(check_tree(s).has_value()) << *check_tree(s);
    ASSERT_EQ(s.spans.size(), 1u);
    const auto& p = s.spans[0].positions;
    ASSERT_EQ(p.size(), 2u);
    // the particle hangs off the verb
    EXPECT_EQ(s.tokens[p[1] - 1].head, p[0]);
  }
  const std::string once = write_cupt(c.sentences);
  EXPECT_EQ(write_cupt(parse_cupt(once).sentences), once);
}

TEST(Synthetic, SeedRepeatability) {
  const auto a = write_cupt(make_synthetic_corpus(4, 30, {1, 1, 1, 1, 0, 0}).sentences);
  const auto b = write_cupt(make_synthetic_corpus(4, 30, {1, 1, 1, 1, 0, 0}).sentences);
  const auto c = write_cupt(make_synthetic_corpus(5, 30, {1, 1, 1, 1, 0, 0}).sentences);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
}

TEST(Synthetic, StratifiedQuotas) {
  SyntheticSpec spec;
  spec.sentences = 60;
  spec.gap_weights = {0.2, 0.2, 0.15, 0.15, 0.15, 0.15};
  spec.stratified = true;
  std::array<int, kMaxSyntheticGap + 1> counts{};
  for (const Sentence& s : make_synthetic_corpus(spec).sentences) ++counts[gap_size(s.spans[0])];
  EXPECT_EQ(counts, (std::array<int, 6>{12, 12, 9, 9, 9, 9}));
}

TEST(Synthetic, RejectsBadWeights) {
  EXPECT_ANY_THROW(make_synthetic_corpus(1, 5, {0, 0, 0, 0, 0, 0}));
  EXPECT_ANY_THROW(make_synthetic_corpus(1, 5, {1, -1, 0, 0, 0, 0}));
}

}  // namespace
}  // namespace gappy
