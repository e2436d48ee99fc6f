#include <benchmark/benchmark.h>

#include "gappy/evaluation.hpp"
#include "gappy/training.hpp"

using namespace gappy;

namespace {

Tensor random_matrix(std::size_t r, std::size_t c, Rng& rng) {
  Tensor t = Tensor::zeros({r, c});
  for (double& v : t.values()) v = rng.uniform(-1, 1);
  return t;
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  const Tensor a = random_matrix(n, n, rng), b = random_matrix(n, n, rng);
  for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(16)->Arg(64)->Arg(178);

struct Fixture {
  Vocab vocab;
  std::vector<EncodedSentence> data;
  Fixture() {
    const Corpus c = make_synthetic_corpus(1, 40, {1, 1, 1, 1, 0, 0});
    vocab = build_vocab(c, 1);
    data = encode_corpus(c, vocab);
  }
};

ModelConfig model_config(const Fixture& f, ModelKind kind) {
  ModelConfig mc;
  mc.kind = kind;
  mc.vocab_size = f.vocab.size();
  return mc;
}

void BM_Inference(benchmark::State& state) {
  static const Fixture f;
  const TaggerModel model(model_config(f, static_cast<ModelKind>(state.range(0))));
  std::size_t tokens = 0;
  for (auto _ : state) {
    for (const auto& s : f.data) {
      benchmark::DoNotOptimize(model.infer(s));
      tokens += s.size();
    }
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(tokens));
}
BENCHMARK(BM_Inference)
    ->Arg(static_cast<int>(ModelKind::Baseline))
    ->Arg(static_cast<int>(ModelKind::GcnBased))
    ->Arg(static_cast<int>(ModelKind::AttBased))
    ->Arg(static_cast<int>(ModelKind::HCombined));

// One batch of eight sentences: forward, backward and an Adam step.
void BM_TrainStep(benchmark::State& state) {
  static const Fixture f;
  TaggerModel model(model_config(f, ModelKind::HCombined));
  const ParameterList params = model.parameters();
  AdamState adam;
  TrainConfig cfg;
  std::vector<const EncodedSentence*> batch;
  for (std::size_t k = 0; k < 8; ++k) batch.push_back(&f.data[k]);
  for (auto _ : state) {
    const auto logits = model.forward_batch(batch, Mode::Train);
    std::vector<int> gold;
    std::vector<bool> mask;
    for (const auto* s : batch) {
      gold.insert(gold.end(), s->gold.begin(), s->gold.end());
      mask.insert(mask.end(), s->mask.begin(), s->mask.end());
    }
    const Tensor loss = cross_entropy_masked(concat_rows(logits), gold, mask);
    backward(loss);
    adam_step(params, adam, cfg);
  }
}
BENCHMARK(BM_TrainStep);

void BM_Codec(benchmark::State& state) {
  const Corpus c = make_synthetic_corpus(2, 200, {1, 1, 1, 1, 1, 1});
  for (auto _ : state) {
    for (const Sentence& s : c.sentences) benchmark::DoNotOptimize(decode_bigo(encode_bigo(s)));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(c.sentences.size()));
}
BENCHMARK(BM_Codec);

void BM_Evaluate(benchmark::State& state) {
  const SpanCorpus gold = spans_of(make_synthetic_corpus(3, 1000, {1, 1, 1, 1, 1, 1}));
  const SpanCorpus pred = spans_of(make_synthetic_corpus(4, 1000, {1, 1, 1, 1, 1, 1}));
  for (auto _ : state) {
    benchmark::DoNotOptimize(evaluate(gold, pred));
    benchmark::DoNotOptimize(gap_report(gold, pred, 5));
  }
}
BENCHMARK(BM_Evaluate);

}  // namespace

BENCHMARK_MAIN();
