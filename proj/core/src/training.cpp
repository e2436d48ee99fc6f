#include "gappy/training.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include <fmt/format.h>

#include "gappy/checkpoint.hpp"
#include "gappy/errors.hpp"
#include "gappy/rng.hpp"

namespace gappy {

void validate(const TrainConfig& cfg) {
  std::vector<std::string> bad;
  if (!(cfg.learning_rate > 0.0)) bad.push_back("learning_rate");
  if (!(cfg.beta1 >= 0.0 && cfg.beta1 < 1.0)) bad.push_back("beta1");
  if (!(cfg.beta2 >= 0.0 && cfg.beta2 < 1.0)) bad.push_back("beta2");
  if (!(cfg.epsilon > 0.0)) bad.push_back("epsilon");
  if (cfg.batch_size == 0) bad.push_back("batch_size");
  if (cfg.patience == 0) bad.push_back("patience");
  if (cfg.clip_norm < 0.0) bad.push_back("clip_norm");
  if (bad.empty()) return;
  std::string msg = "invalid training configuration:";
  for (const auto& b : bad) msg += " " + b;
  throw ConfigError(msg);
}

void adam_step(const ParameterList& params, AdamState& state, const TrainConfig& cfg) {
  if (state.m.size() != params.size()) {
    state.m.clear();
    state.v.clear();
    for (const auto& p : params) {
      state.m.emplace_back(p.tensor.size(), 0.0);
      state.v.emplace_back(p.tensor.size(), 0.0);
    }
    state.step = 0;
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correct1 = 1.0 - std::pow(cfg.beta1, t);
  const double correct2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor p = params[k].tensor;
    if (!p.has_grad()) continue;
    auto values = p.values();
    auto grad = p.grad();
    auto& m = state.m[k];
    auto& v = state.v[k];
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double g = grad[i];
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
      const double m_hat = m[i] / correct1;
      const double v_hat = v[i] / correct2;
      values[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
    p.zero_grad();
  }
}

double clip_gradients(const ParameterList& params, double max_norm) {
  double sq = 0.0;
  for (const auto& p : params) {
    Tensor t = p.tensor;
    if (!t.has_grad()) continue;
    for (double g : t.grad()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double factor = max_norm / norm;
    for (const auto& p : params) {
      Tensor t = p.tensor;
      if (!t.has_grad()) continue;
      for (double& g : t.grad()) g *= factor;
    }
  }
  return norm;
}

std::string TrainLog::to_csv() const {
  std::string out = "epoch,loss,dev_token_f,dev_mwe_f,seconds\n";
  for (const EpochRecord& r : epochs) {
    out += fmt::format("{},{},{},{},{:.3f}\n", r.epoch, format_double(r.loss), format_double(r.dev_token_f),
                       format_double(r.dev_mwe_f), r.seconds);
  }
  return out;
}

ModelSnapshot snapshot(const ParameterList& tensors) {
  ModelSnapshot snap;
  snap.reserve(tensors.size());
  for (const auto& t : tensors) snap.emplace_back(t.tensor.values().begin(), t.tensor.values().end());
  return snap;
}

void restore(const ParameterList& tensors, const ModelSnapshot& snap) {
  if (snap.size() != tensors.size()) throw std::invalid_argument("snapshot does not match tensor list");
  for (std::size_t k = 0; k < tensors.size(); ++k) {
    Tensor t = tensors[k].tensor;
    if (snap[k].size() != t.size()) throw std::invalid_argument("snapshot does not match tensor " + tensors[k].name);
    std::copy(snap[k].begin(), snap[k].end(), t.values().begin());
  }
}

namespace {

struct BatchLoss {
  Tensor loss;
  std::size_t tokens = 0;
};

BatchLoss batch_loss(TaggerModel& model, const std::vector<const EncodedSentence*>& batch, Mode mode) {
  const std::vector<Tensor> logits = model.forward_batch(batch, mode);
  std::vector<int> gold;
  std::vector<bool> mask;
  for (const EncodedSentence* s : batch) {
    gold.insert(gold.end(), s->gold.begin(), s->gold.end());
    mask.insert(mask.end(), s->mask.begin(), s->mask.end());
  }
  BatchLoss out;
  out.loss = cross_entropy_masked(concat_rows(logits), gold, mask);
  out.tokens = static_cast<std::size_t>(std::count(mask.begin(), mask.end(), true));
  return out;
}

}  // namespace

TrainResult train(TaggerModel& model, const std::vector<EncodedSentence>& train_set,
                  const std::vector<EncodedSentence>& dev_set, const TrainConfig& cfg, std::ostream* log) {
  validate(cfg);
  if (train_set.empty()) throw DataError("empty training corpus");
  for (const EncodedSentence& s : train_set) {
    if (s.gold.size() != s.size()) throw DataError("training sentence without gold tags for every token");
  }

  Rng rng(cfg.seed);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const ParameterList params = model.parameters();
  const ParameterList state = model.state();
  for (const auto& p : params) {
    Tensor t = p.tensor;
    t.zero_grad();
  }

  AdamState adam;
  TrainResult result;
  double best_f = -std::numeric_limits<double>::infinity();
  std::size_t stale = 0;
  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    if (cfg.shuffle) rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t token_sum = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      std::vector<const EncodedSentence*> batch;
      for (std::size_t k = start; k < std::min(order.size(), start + cfg.batch_size); ++k) {
        batch.push_back(&train_set[order[k]]);
      }
      const BatchLoss bl = batch_loss(model, batch, Mode::Train);
      backward(bl.loss);
      if (cfg.clip_norm > 0.0) clip_gradients(params, cfg.clip_norm);
      adam_step(params, adam, cfg);
      loss_sum += bl.loss.item() * static_cast<double>(bl.tokens);
      token_sum += bl.tokens;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.loss = token_sum ? loss_sum / static_cast<double>(token_sum) : 0.0;
    if (!dev_set.empty()) {
      const EvaluationSummary dev = evaluate_model(model, dev_set);
      rec.dev_token_f = dev.token_based.f1;
      rec.dev_mwe_f = dev.mwe_based.f1;
    }
    if (cfg.record_time) {
      rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    }
    result.log.epochs.push_back(rec);
    if (log) {
      *log << fmt::format("epoch {:3d}  loss {:.5f}  dev token F {:.4f}  dev MWE F {:.4f}  {:.2f}s\n", epoch, rec.loss,
                          rec.dev_token_f, rec.dev_mwe_f, rec.seconds);
    }

    if (dev_set.empty() || rec.dev_mwe_f > best_f) {
      best_f = rec.dev_mwe_f;
      result.best = snapshot(state);
      result.best_epoch = epoch;
      stale = 0;
    } else {
      ++stale;
    }
    if (dev_set.empty()) continue;
    if (stale >= cfg.patience) break;
    if (cfg.target_f > 0.0 && rec.dev_mwe_f >= cfg.target_f) break;
  }
  restore(state, result.best);
  return result;
}

SpanCorpus predict_spans(const TaggerModel& model, const std::vector<EncodedSentence>& data) {
  SpanCorpus out;
  out.reserve(data.size());
  for (const EncodedSentence& s : data) out.push_back(decode_bigo(predict_tags(model, s)));
  return out;
}

SpanCorpus gold_spans(const std::vector<EncodedSentence>& data) {
  SpanCorpus out;
  out.reserve(data.size());
  for (const EncodedSentence& s : data) out.push_back(s.gold_spans);
  return out;
}

EvaluationSummary evaluate_model(const TaggerModel& model, const std::vector<EncodedSentence>& data) {
  return evaluate(gold_spans(data), predict_spans(model, data));
}

double mean_loss(TaggerModel& model, const std::vector<EncodedSentence>& data, Mode mode) {
  std::vector<const EncodedSentence*> all;
  for (const EncodedSentence& s : data) all.push_back(&s);
  if (all.empty()) return 0.0;
  return batch_loss(model, all, mode).loss.item();
}

}  // namespace gappy
