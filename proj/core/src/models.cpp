#include "gappy/models.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "gappy/checkpoint.hpp"
#include "gappy/errors.hpp"

namespace gappy {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::size_t lstm_params(std::size_t in, std::size_t u) { return 2 * (in * 4 * u + u * 4 * u + 4 * u); }

}  // namespace

std::string_view model_kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::Baseline: return "baseline";
    case ModelKind::GcnBased: return "GCN-based";
    case ModelKind::AttBased: return "Att-based";
    case ModelKind::HCombined: return "H-combined";
  }
  return "?";
}

ModelKind parse_model_kind(std::string_view text) {
  const std::string t = lower(text);
  if (t == "baseline") return ModelKind::Baseline;
  if (t == "gcn-based" || t == "gcnbased" || t == "gcn") return ModelKind::GcnBased;
  if (t == "att-based" || t == "attbased" || t == "att") return ModelKind::AttBased;
  if (t == "h-combined" || t == "hcombined") return ModelKind::HCombined;
  throw ConfigError("unknown model kind '" + std::string(text) + "'");
}

std::size_t ModelConfig::branch_width() const {
  switch (kind) {
    case ModelKind::Baseline: return attention_width();
    case ModelKind::GcnBased: return gcn_dim;
    case ModelKind::AttBased: return attention_width();
    case ModelKind::HCombined: return gcn_dim + attention_width();
  }
  return 0;
}

void validate(const ModelConfig& cfg) {
  std::vector<std::string> bad;
  if (cfg.vocab_size < 2) bad.push_back("vocab_size (needs the pad and unknown entries)");
  if (cfg.embed_dim == 0) bad.push_back("embed_dim");
  if (cfg.lstm_dim == 0) bad.push_back("lstm_dim");
  if (cfg.uses_gcn() && cfg.gcn_dim == 0) bad.push_back("gcn_dim");
  if (cfg.uses_front_end()) {
    if (cfg.filters_a == 0) bad.push_back("filters_a");
    if (cfg.filters_b == 0) bad.push_back("filters_b");
  }
  if (cfg.uses_attention() && (cfg.heads == 0 || cfg.attention_width() % cfg.heads != 0)) {
    bad.push_back("heads (must divide filters_a + filters_b = " + std::to_string(cfg.attention_width()) + ")");
  }
  if (bad.empty()) return;
  std::string msg = "invalid model configuration:";
  for (const auto& b : bad) msg += " " + b + ";";
  msg.pop_back();
  throw ConfigError(msg);
}

std::size_t parameter_count(const ModelConfig& cfg) {
  const std::size_t v = cfg.embed_dim, o = cfg.gcn_dim, fa = cfg.filters_a, fb = cfg.filters_b;
  const std::size_t n = cfg.attention_width(), u = cfg.lstm_dim;
  std::size_t total = cfg.vocab_size * v;
  if (cfg.uses_gcn()) total += 3 * o * v + o;
  if (cfg.uses_front_end()) total += (3 * v * fa + fa) + (3 * fa * fa + fa) + (2 * v * fb + fb) + 2 * n;
  if (cfg.uses_attention()) total += 4 * n * n;
  if (cfg.uses_highway()) {
    const std::size_t w = o + n;
    total += cfg.highway_depth * (2 * w * w + 2 * w);
  }
  total += lstm_params(cfg.branch_width(), u);
  total += 2 * u * kNumTags + kNumTags;
  return total;
}

EncodedSentence encode_sentence(const Sentence& sentence, const Vocab& vocab) {
  EncodedSentence e;
  e.ids.reserve(sentence.size());
  for (const Token& t : sentence.tokens) e.ids.push_back(vocab.index(t.form));
  e.adj = build_adjacency(sentence);
  e.mask.assign(sentence.size(), true);
  for (Tag tag : encode_bigo(sentence)) e.gold.push_back(static_cast<int>(tag));
  e.gold_spans = sentence.spans;
  return e;
}

std::vector<EncodedSentence> encode_corpus(const Corpus& corpus, const Vocab& vocab) {
  std::vector<EncodedSentence> out;
  out.reserve(corpus.sentences.size());
  for (const Sentence& s : corpus.sentences) out.push_back(encode_sentence(s, vocab));
  return out;
}

TaggerModel::TaggerModel(const ModelConfig& cfg) : cfg_(cfg) {
  validate(cfg_);
  Rng rng(cfg_.seed);
  embedding_ = glorot_uniform({cfg_.vocab_size, cfg_.embed_dim}, cfg_.vocab_size, cfg_.embed_dim, rng);
  if (cfg_.uses_gcn()) gcn_ = GcnLayer::create(cfg_.embed_dim, cfg_.gcn_dim, rng);
  if (cfg_.uses_front_end()) front_ = CnnFrontEnd::create(cfg_.embed_dim, cfg_.filters_a, cfg_.filters_b, rng);
  if (cfg_.uses_attention()) attention_ = MultiHeadAttention::create(cfg_.attention_width(), cfg_.heads, rng);
  if (cfg_.uses_highway()) {
    highway_ = HighwayBlock::create(cfg_.branch_width(), cfg_.highway_depth, cfg_.highway_bias, rng);
  }
  lstm_ = BiLstmLayer::create(cfg_.branch_width(), cfg_.lstm_dim, rng);
  out_w_ = glorot_uniform({2 * cfg_.lstm_dim, kNumTags}, 2 * cfg_.lstm_dim, kNumTags, rng);
  out_b_ = Tensor::zeros({1, kNumTags}, true);
}

ParameterList TaggerModel::parameters() const {
  ParameterList out{{"embedding", embedding_}};
  if (gcn_) gcn_->collect("gcn", out);
  if (front_) front_->collect("front", out);
  if (attention_) attention_->collect("attn", out);
  if (highway_) highway_->collect("highway", out);
  lstm_.collect("lstm", out);
  out.push_back({"output.w", out_w_});
  out.push_back({"output.b", out_b_});
  return out;
}

ParameterList TaggerModel::state() const {
  ParameterList out = parameters();
  if (front_) front_->collect_state("front", out);
  return out;
}

Tensor TaggerModel::branches(const EncodedSentence& sentence, const Tensor& embedded, const Tensor* front) const {
  switch (cfg_.kind) {
    case ModelKind::Baseline:
      return *front;
    case ModelKind::GcnBased:
      return gcn_forward(*gcn_, embedded, *sentence.adj);
    case ModelKind::AttBased:
      return attention_forward(*attention_, *front, sentence.mask);
    case ModelKind::HCombined: {
      const Tensor syntactic = gcn_forward(*gcn_, embedded, *sentence.adj);
      const Tensor contextual = attention_forward(*attention_, *front, sentence.mask);
      return highway_forward(*highway_, concat_cols({syntactic, contextual}));
    }
  }
  throw std::logic_error("unhandled model kind");
}

std::vector<Tensor> TaggerModel::run(const std::vector<const EncodedSentence*>& batch, Mode mode, bool head) const {
  std::vector<Tensor> out(batch.size());
  std::vector<Tensor> embedded(batch.size());
  std::vector<std::size_t> live;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const EncodedSentence& s = *batch[i];
    if (s.mask.size() != s.size()) throw DataError("mask length differs from sentence length");
    if (cfg_.uses_gcn() && (!s.adj || s.adj->size() != s.size())) {
      throw DataError(std::string(model_kind_name(cfg_.kind)) + " model needs an adjacency set for every sentence");
    }
    if (s.size() == 0) {
      out[i] = Tensor::zeros({0, head ? kNumTags : cfg_.branch_width()});
      continue;
    }
    embedded[i] = gather_rows(embedding_, s.ids);
    live.push_back(i);
  }

  std::vector<Tensor> fronts(batch.size());
  if (front_ && !live.empty()) {
    std::vector<Tensor> features;
    std::vector<bool> mask;
    for (std::size_t i : live) {
      features.push_back(cnn_front_features(*front_, embedded[i]));
      mask.insert(mask.end(), batch[i]->mask.begin(), batch[i]->mask.end());
    }
    const Tensor normed = batch_norm(concat_rows(features), front_->gamma, front_->beta, mask, front_->norm, mode);
    std::size_t offset = 0;
    for (std::size_t i : live) {
      fronts[i] = slice_rows(normed, offset, batch[i]->size());
      offset += batch[i]->size();
    }
  }

  for (std::size_t i : live) {
    const Tensor rep = branches(*batch[i], embedded[i], front_ ? &fronts[i] : nullptr);
    if (!head) {
      out[i] = rep;
      continue;
    }
    const Tensor hidden = bilstm_forward(lstm_, rep, batch[i]->mask);
    out[i] = add(matmul(hidden, out_w_), out_b_);
  }
  return out;
}

std::vector<Tensor> TaggerModel::forward_batch(const std::vector<const EncodedSentence*>& batch, Mode mode) {
  return run(batch, mode, true);
}

std::vector<Tensor> TaggerModel::infer_batch(const std::vector<const EncodedSentence*>& batch) const {
  return run(batch, Mode::Infer, true);
}

Tensor TaggerModel::forward(const EncodedSentence& sentence, Mode mode) { return forward_batch({&sentence}, mode)[0]; }

Tensor TaggerModel::infer(const EncodedSentence& sentence) const { return infer_batch({&sentence})[0]; }

Tensor TaggerModel::branch_output(const EncodedSentence& sentence) const {
  return run({&sentence}, Mode::Infer, false)[0];
}

TaggerModel build_model(const ModelConfig& cfg) { return TaggerModel(cfg); }

std::vector<Tag> argmax_tags(const Tensor& logits, const std::vector<bool>& mask) {
  const std::size_t s = logits.rows(), k = logits.cols();
  std::vector<Tag> tags(s, Tag::O);
  for (std::size_t r = 0; r < s; ++r) {
    if (!mask[r]) continue;
    std::size_t best = 0;
    for (std::size_t c = 1; c < k; ++c)
      if (logits(r, c) > logits(r, best)) best = c;
    tags[r] = static_cast<Tag>(best);
  }
  return tags;
}

std::vector<Tag> predict_tags(const TaggerModel& model, const EncodedSentence& sentence) {
  return argmax_tags(model.infer(sentence), sentence.mask);
}

std::size_t load_pretrained_embeddings(TaggerModel& model, const Vocab& vocab, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open pretrained embeddings " + path);
  Tensor table = model.embedding();
  const std::size_t dim = table.cols();
  auto values = table.values();
  std::size_t replaced = 0;
  std::string line;
  for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
    std::istringstream fields(line);
    std::string word;
    if (!(fields >> word)) continue;
    std::vector<double> vec;
    for (double x; fields >> x;) vec.push_back(x);
    if (line_no == 1 && vec.size() == 1) continue;  // "count dim" header
    if (vec.size() != dim) {
      throw DataError(path + ":" + std::to_string(line_no) + ": expected " + std::to_string(dim) + " values, found " +
                      std::to_string(vec.size()));
    }
    const int idx = vocab.index(word);
    if (idx == Vocab::kUnk || idx == Vocab::kPad) continue;
    std::copy(vec.begin(), vec.end(), values.begin() + static_cast<std::ptrdiff_t>(idx * dim));
    ++replaced;
  }
  return replaced;
}

namespace {

nlohmann::json config_json(const ModelConfig& c) {
  return {{"kind", model_kind_name(c.kind)}, {"vocab_size", c.vocab_size}, {"embed_dim", c.embed_dim},
          {"gcn_dim", c.gcn_dim},            {"filters_a", c.filters_a},   {"filters_b", c.filters_b},
          {"heads", c.heads},                {"highway_depth", c.highway_depth},
          {"highway_bias", c.highway_bias},  {"lstm_dim", c.lstm_dim},     {"seed", c.seed},
          {"pretrained_path", c.pretrained_path}};
}

ModelConfig config_from(const nlohmann::json& j) {
  ModelConfig c;
  c.kind = parse_model_kind(j.at("kind").get<std::string>());
  c.vocab_size = j.at("vocab_size").get<std::size_t>();
  c.embed_dim = j.at("embed_dim").get<std::size_t>();
  c.gcn_dim = j.at("gcn_dim").get<std::size_t>();
  c.filters_a = j.at("filters_a").get<std::size_t>();
  c.filters_b = j.at("filters_b").get<std::size_t>();
  c.heads = j.at("heads").get<std::size_t>();
  c.highway_depth = j.at("highway_depth").get<std::size_t>();
  c.highway_bias = j.at("highway_bias").get<double>();
  c.lstm_dim = j.at("lstm_dim").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.pretrained_path = j.value("pretrained_path", "");
  return c;
}

}  // namespace

std::string model_to_json(const TaggerModel& model, const Vocab& vocab) {
  std::string out = "{\n\"config\": " + config_json(model.config()).dump() + ",\n";
  out += "\"vocab\": " + nlohmann::json(vocab.words()).dump() + ",\n";
  out += "\"tensors\": " + tensors_to_json(model.state()) + "}\n";
  return out;
}

void save_model(const std::string& path, const TaggerModel& model, const Vocab& vocab) {
  write_file_atomic(path, model_to_json(model, vocab));
}

LoadedModel model_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("malformed model checkpoint: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("config") || !doc.contains("vocab") || !doc.contains("tensors")) {
    throw CheckpointError("model checkpoint needs config, vocab and tensors sections");
  }
  ModelConfig cfg;
  std::vector<std::string> words;
  try {
    cfg = config_from(doc.at("config"));
    words = doc.at("vocab").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("bad checkpoint header: ") + e.what());
  } catch (const ConfigError& e) {
    throw CheckpointError(e.what());
  }
  if (words.size() != cfg.vocab_size) {
    throw CheckpointError("vocabulary has " + std::to_string(words.size()) + " entries, config says " +
                          std::to_string(cfg.vocab_size));
  }
  std::optional<TaggerModel> model;
  try {
    model.emplace(cfg);
  } catch (const ConfigError& e) {
    throw CheckpointError(std::string("inconsistent checkpoint config: ") + e.what());
  }
  assign_tensors(tensors_from_json(doc.at("tensors")), model->state());
  return LoadedModel{std::move(*model), Vocab(std::move(words))};
}

LoadedModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return model_from_json(buf.str());
}

}  // namespace gappy
