#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gappy/corpus.hpp"
#include "gappy/layers.hpp"
#include "gappy/tensor.hpp"

namespace gappy {

enum class ModelKind { Baseline, GcnBased, AttBased, HCombined };

// Table-style labels: "baseline", "GCN-based", "Att-based", "H-combined".
std::string_view model_kind_name(ModelKind kind);
// Accepts the labels above or the enumerator names, case-insensitively.
ModelKind parse_model_kind(std::string_view text);

struct ModelConfig {
  ModelKind kind = ModelKind::HCombined;
  std::size_t vocab_size = 2;
  std::size_t embed_dim = 50;   // v
  std::size_t gcn_dim = 50;     // o
  std::size_t filters_a = 64;   // stacked-convolution channel
  std::size_t filters_b = 64;   // single-convolution channel
  std::size_t heads = 4;
  std::size_t highway_depth = 2;  // J; 0 makes the block the identity
  double highway_bias = -1.0;
  std::size_t lstm_dim = 50;  // u, per direction
  std::uint64_t seed = 1;
  std::string pretrained_path;

  bool uses_gcn() const { return kind == ModelKind::GcnBased || kind == ModelKind::HCombined; }
  bool uses_front_end() const { return kind != ModelKind::GcnBased; }
  bool uses_attention() const { return kind == ModelKind::AttBased || kind == ModelKind::HCombined; }
  bool uses_highway() const { return kind == ModelKind::HCombined; }

  std::size_t attention_width() const { return filters_a + filters_b; }
  // Width of the representation handed to the BiLSTM.
  std::size_t branch_width() const;
};

// Throws ConfigError naming every offending field.
void validate(const ModelConfig& cfg);

// Closed-form trainable parameter count for a configuration.
std::size_t parameter_count(const ModelConfig& cfg);

struct EncodedSentence {
  std::vector<int> ids;
  std::optional<AdjacencySet> adj;
  std::vector<bool> mask;
  std::vector<int> gold;             // BIGO class per token
  std::vector<MweSpan> gold_spans;   // annotation as read, used for scoring

  std::size_t size() const { return ids.size(); }
};

EncodedSentence encode_sentence(const Sentence& sentence, const Vocab& vocab);
std::vector<EncodedSentence> encode_corpus(const Corpus& corpus, const Vocab& vocab);

class TaggerModel {
 public:
  explicit TaggerModel(const ModelConfig& cfg);
  // Tensors are handles, so a copy would alias the parameters.
  TaggerModel(const TaggerModel&) = delete;
  TaggerModel& operator=(const TaggerModel&) = delete;
  TaggerModel(TaggerModel&&) = default;
  TaggerModel& operator=(TaggerModel&&) = default;

  const ModelConfig& config() const { return cfg_; }

  // Logits [s x 4] per sentence. In train mode the front-end normalization
  // pools statistics over every sentence of the batch.
  std::vector<Tensor> forward_batch(const std::vector<const EncodedSentence*>& batch, Mode mode);
  std::vector<Tensor> infer_batch(const std::vector<const EncodedSentence*>& batch) const;
  Tensor forward(const EncodedSentence& sentence, Mode mode);
  Tensor infer(const EncodedSentence& sentence) const;

  // Representation entering the BiLSTM (inference mode).
  Tensor branch_output(const EncodedSentence& sentence) const;

  // Trainable tensors with hierarchical names.
  ParameterList parameters() const;
  // Trainable tensors plus normalization running statistics.
  ParameterList state() const;

  Tensor embedding() const { return embedding_; }
  std::size_t norm_fallbacks() const { return front_ ? front_->norm.fallbacks : 0; }

 private:
  std::vector<Tensor> run(const std::vector<const EncodedSentence*>& batch, Mode mode, bool head) const;
  Tensor branches(const EncodedSentence& sentence, const Tensor& embedded, const Tensor* front) const;

  ModelConfig cfg_;
  Tensor embedding_;
  std::optional<GcnLayer> gcn_;
  // Running statistics change in train mode; forward_batch is the only
  // non-const entry point that selects it.
  mutable std::optional<CnnFrontEnd> front_;
  std::optional<MultiHeadAttention> attention_;
  std::optional<HighwayBlock> highway_;
  BiLstmLayer lstm_;
  Tensor out_w_;
  Tensor out_b_;
};

TaggerModel build_model(const ModelConfig& cfg);

// Argmax per valid token, ties resolved toward B < I < G < O.
std::vector<Tag> argmax_tags(const Tensor& logits, const std::vector<bool>& mask);
std::vector<Tag> predict_tags(const TaggerModel& model, const EncodedSentence& sentence);

// Overwrites embedding rows of vocabulary words found in a whitespace
// separated text file ("word v1 ... vn", optional "count dim" header line).
// Returns the number of rows replaced.
std::size_t load_pretrained_embeddings(TaggerModel& model, const Vocab& vocab, const std::string& path);

// Model checkpoint: {"config": {...}, "vocab": [...], "tensors": {...}}.
std::string model_to_json(const TaggerModel& model, const Vocab& vocab);
void save_model(const std::string& path, const TaggerModel& model, const Vocab& vocab);

struct LoadedModel {
  TaggerModel model;
  Vocab vocab;
};
// Throws CheckpointError on unreadable, malformed or inconsistent files.
LoadedModel load_model(const std::string& path);
LoadedModel model_from_json(const std::string& text);

}  // namespace gappy
