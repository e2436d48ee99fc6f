#include "cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "gappy/checkpoint.hpp"
#include "gappy/corpus.hpp"
#include "gappy/errors.hpp"
#include "gappy/evaluation.hpp"
#include "gappy/layers.hpp"
#include "gappy/rng.hpp"

namespace gappy::cli {

using nlohmann::json;

json flatten(const json& doc) {
  json flat = json::object();
  std::function<void(const json&, const std::string&)> walk = [&](const json& node, const std::string& prefix) {
    for (auto it = node.begin(); it != node.end(); ++it) {
      const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
      if (it->is_object()) {
        walk(*it, key);
      } else {
        flat[key] = *it;
      }
    }
  };
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  walk(doc, "");
  return flat;
}

json parse_flag_value(const std::string& text) {
  if (text == "true") return true;
  if (text == "false") return false;
  try {
    json v = json::parse(text);
    if (v.is_number()) return v;
  } catch (const json::exception&) {
  }
  return text;
}

namespace {

std::size_t as_count(const json& v) {
  if (!v.is_number_integer() || v.get<long long>() < 0) throw std::invalid_argument("expected a non-negative integer");
  return v.get<std::size_t>();
}

double as_real(const json& v) {
  if (!v.is_number()) throw std::invalid_argument("expected a number");
  return v.get<double>();
}

bool as_flag(const json& v) {
  if (!v.is_boolean()) throw std::invalid_argument("expected true or false");
  return v.get<bool>();
}

std::string as_text(const json& v) {
  if (!v.is_string()) throw std::invalid_argument("expected a string");
  return v.get<std::string>();
}

using Setter = std::function<void(RunConfig&, const json&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"train_path", [](RunConfig& c, const json& v) { c.train_path = as_text(v); }},
      {"dev_path", [](RunConfig& c, const json& v) { c.dev_path = as_text(v); }},
      {"checkpoint", [](RunConfig& c, const json& v) { c.checkpoint = as_text(v); }},
      {"log_path", [](RunConfig& c, const json& v) { c.log_path = as_text(v); }},
      {"seed", [](RunConfig& c, const json& v) { c.seed = as_count(v); }},
      {"model.kind", [](RunConfig& c, const json& v) { c.model.kind = parse_model_kind(as_text(v)); }},
      {"model.embed_dim", [](RunConfig& c, const json& v) { c.model.embed_dim = as_count(v); }},
      {"model.gcn_dim", [](RunConfig& c, const json& v) { c.model.gcn_dim = as_count(v); }},
      {"model.filters_a", [](RunConfig& c, const json& v) { c.model.filters_a = as_count(v); }},
      {"model.filters_b", [](RunConfig& c, const json& v) { c.model.filters_b = as_count(v); }},
      {"model.heads", [](RunConfig& c, const json& v) { c.model.heads = as_count(v); }},
      {"model.highway_depth", [](RunConfig& c, const json& v) { c.model.highway_depth = as_count(v); }},
      {"model.highway_bias", [](RunConfig& c, const json& v) { c.model.highway_bias = as_real(v); }},
      {"model.lstm_dim", [](RunConfig& c, const json& v) { c.model.lstm_dim = as_count(v); }},
      {"model.pretrained_path", [](RunConfig& c, const json& v) { c.model.pretrained_path = as_text(v); }},
      {"model.min_count", [](RunConfig& c, const json& v) { c.min_count = as_count(v); }},
      {"train.learning_rate", [](RunConfig& c, const json& v) { c.train.learning_rate = as_real(v); }},
      {"train.lr", [](RunConfig& c, const json& v) { c.train.learning_rate = as_real(v); }},
      {"train.beta1", [](RunConfig& c, const json& v) { c.train.beta1 = as_real(v); }},
      {"train.beta2", [](RunConfig& c, const json& v) { c.train.beta2 = as_real(v); }},
      {"train.epsilon", [](RunConfig& c, const json& v) { c.train.epsilon = as_real(v); }},
      {"train.batch_size", [](RunConfig& c, const json& v) { c.train.batch_size = as_count(v); }},
      {"train.max_epochs", [](RunConfig& c, const json& v) { c.train.max_epochs = as_count(v); }},
      {"train.patience", [](RunConfig& c, const json& v) { c.train.patience = as_count(v); }},
      {"train.shuffle", [](RunConfig& c, const json& v) { c.train.shuffle = as_flag(v); }},
      {"train.clip_norm", [](RunConfig& c, const json& v) { c.train.clip_norm = as_real(v); }},
      {"train.target_f", [](RunConfig& c, const json& v) { c.train.target_f = as_real(v); }},
      {"train.record_time", [](RunConfig& c, const json& v) { c.train.record_time = as_flag(v); }},
  };
  return table;
}

std::string join(const std::vector<std::string>& items, const char* sep) {
  std::string out;
  for (const auto& s : items) {
    if (!out.empty()) out += sep;
    out += s;
  }
  return out;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

RunConfig run_config_from_json(const json& flat) {
  RunConfig cfg;
  std::vector<std::string> bad;
  for (auto it = flat.begin(); it != flat.end(); ++it) {
    const auto found = setters().find(it.key());
    if (found == setters().end()) {
      bad.push_back(it.key() + " (unknown key)");
      continue;
    }
    try {
      found->second(cfg, *it);
    } catch (const std::exception& e) {
      bad.push_back(it.key() + " (" + e.what() + ")");
    }
  }
  if (!bad.empty()) throw ConfigError("invalid config fields: " + join(bad, ", "));
  return cfg;
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& configured) {
  if (configured) return *configured;
  if (const char* env = std::getenv("GAPPY_SEED"); env && *env) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (*end != '\0' || env[0] == '-') throw ConfigError(std::string("GAPPY_SEED is not a seed: ") + env);
    return v;
  }
  return 1;
}

void validate_run_config(const RunConfig& cfg) {
  namespace fs = std::filesystem;
  std::vector<std::string> bad;
  if (cfg.train_path.empty()) {
    bad.push_back("train_path (required)");
  } else if (!fs::is_regular_file(cfg.train_path)) {
    bad.push_back("train_path (no such file: " + cfg.train_path + ")");
  }
  if (!cfg.dev_path.empty() && !fs::is_regular_file(cfg.dev_path)) {
    bad.push_back("dev_path (no such file: " + cfg.dev_path + ")");
  }
  if (cfg.checkpoint.empty()) bad.push_back("checkpoint (required)");
  if (!cfg.model.pretrained_path.empty() && !fs::is_regular_file(cfg.model.pretrained_path)) {
    bad.push_back("model.pretrained_path (no such file: " + cfg.model.pretrained_path + ")");
  }
  if (cfg.min_count < 1) bad.push_back("model.min_count (must be >= 1)");
  // Vocabulary size is only known after reading the corpus.
  ModelConfig probe = cfg.model;
  probe.vocab_size = std::max<std::size_t>(probe.vocab_size, 2);
  try {
    validate(probe);
  } catch (const ConfigError& e) {
    bad.push_back(e.what());
  }
  try {
    validate(cfg.train);
  } catch (const ConfigError& e) {
    bad.push_back(e.what());
  }
  if (!bad.empty()) throw ConfigError("invalid configuration: " + join(bad, "; "));
}

// --- gradient-check fixtures -------------------------------------------

namespace {

Tensor random_tensor(Shape shape, Rng& rng, bool requires_grad, double lo = -1.0, double hi = 1.0) {
  Tensor t = Tensor::zeros(std::move(shape), requires_grad);
  for (double& v : t.values()) v = rng.uniform(lo, hi);
  return t;
}

AdjacencySet random_tree(std::size_t s, Rng& rng) {
  AdjacencySet adj(s);
  for (std::size_t k = 1; k < s; ++k) adj.add_edge(rng.below(k), k);
  return adj;
}

Tensor finish(Tensor loss, bool corrupt) { return corrupt ? scale_gradient(loss, 2.0) : loss; }

// Weighted sum with fixed random weights, so every output entry matters.
Tensor probe_loss(const Tensor& out, const Tensor& weights) { return sum(mul(out, weights)); }

}  // namespace

const std::vector<std::string>& gradcheck_layers() {
  static const std::vector<std::string> names = {"gcn", "attention", "highway", "bilstm", "cnn", "full"};
  return names;
}

GradCheckReport gradcheck_scenario(const std::string& layer, std::uint64_t seed, bool corrupt) {
  Rng rng(seed);
  if (layer == "gcn") {
    const std::size_t s = 5, v = 4, o = 3;
    GcnLayer gcn = GcnLayer::create(v, o, rng);
    // random bias so relu units sit away from their kink
    for (double& b : gcn.bias.values()) b = rng.uniform(-0.5, 0.5);
    Tensor x = random_tensor({s, v}, rng, true);
    const AdjacencySet adj = random_tree(s, rng);
    ParameterList params{{"input", x}};
    gcn.collect("gcn", params);
    return grad_check([&] { return finish(mean(gcn_forward(gcn, x, adj)), corrupt); }, params);
  }
  if (layer == "attention") {
    const std::size_t s = 5, n = 6;
    MultiHeadAttention att = MultiHeadAttention::create(n, 2, rng);
    Tensor x = random_tensor({s, n}, rng, true);
    const Tensor w = random_tensor({s, n}, rng, false);
    const std::vector<bool> mask{true, true, true, true, false};
    ParameterList params{{"input", x}};
    att.collect("attn", params);
    return grad_check([&] { return finish(probe_loss(attention_forward(att, x, mask), w), corrupt); }, params);
  }
  if (layer == "highway") {
    const std::size_t s = 4, n = 5;
    HighwayBlock hw = HighwayBlock::create(n, 2, -1.0, rng);
    Tensor x = random_tensor({s, n}, rng, true);
    const Tensor w = random_tensor({s, n}, rng, false);
    ParameterList params{{"input", x}};
    hw.collect("highway", params);
    return grad_check([&] { return finish(probe_loss(highway_forward(hw, x), w), corrupt); }, params);
  }
  if (layer == "bilstm") {
    const std::size_t s = 5, n = 3, u = 3;
    BiLstmLayer lstm = BiLstmLayer::create(n, u, rng);
    Tensor x = random_tensor({s, n}, rng, true);
    const Tensor w = random_tensor({s, 2 * u}, rng, false);
    const std::vector<bool> mask{true, true, true, false, true};
    ParameterList params{{"input", x}};
    lstm.collect("lstm", params);
    return grad_check([&] { return finish(probe_loss(bilstm_forward(lstm, x, mask), w), corrupt); }, params);
  }
  if (layer == "cnn") {
    const std::size_t s = 6, v = 4;
    CnnFrontEnd fe = CnnFrontEnd::create(v, 3, 2, rng);
    Tensor x = random_tensor({s, v}, rng, true);
    const Tensor w = random_tensor({s, 5}, rng, false);
    const std::vector<bool> mask{true, true, true, true, true, false};
    ParameterList params{{"input", x}};
    fe.collect("front", params);
    return grad_check([&] { return finish(probe_loss(cnn_front_forward(fe, x, mask, Mode::Train), w), corrupt); },
                      params);
  }
  if (layer == "full") {
    ModelConfig mc;
    mc.kind = ModelKind::HCombined;
    mc.vocab_size = 10;
    mc.embed_dim = 6;
    mc.gcn_dim = 5;
    mc.filters_a = 4;
    mc.filters_b = 4;
    mc.heads = 2;
    mc.highway_depth = 2;
    mc.lstm_dim = 4;
    mc.seed = seed;
    TaggerModel model(mc);
    EncodedSentence sent;
    const std::size_t s = 4;
    for (std::size_t k = 0; k < s; ++k) {
      sent.ids.push_back(2 + static_cast<int>(rng.below(8)));
      sent.gold.push_back(static_cast<int>(rng.below(kNumTags)));
    }
    sent.mask.assign(s, true);
    sent.adj = random_tree(s, rng);
    return grad_check([&] { return finish(cross_entropy_masked(model.forward(sent, Mode::Train), sent.gold, sent.mask),
                                          corrupt); },
                      model.parameters());
  }
  throw ConfigError("unknown layer '" + layer + "' (expected " + join(gradcheck_layers(), ", ") + ")");
}

// --- commands ------------------------------------------------------------

namespace {

std::vector<EncodedSentence> encode_all(const Corpus& corpus, const Vocab& vocab) {
  return encode_corpus(corpus, vocab);
}

void print_warnings(const Corpus& corpus, const std::string& path, std::ostream& err) {
  for (const auto& w : corpus.warnings) err << path << ": warning: " << w << "\n";
}

int cmd_train(const json& file_config, const json& overrides, std::ostream& out, std::ostream& err) {
  json flat = flatten(file_config);
  for (auto it = overrides.begin(); it != overrides.end(); ++it) flat[it.key()] = *it;
  RunConfig cfg = run_config_from_json(flat);
  const std::uint64_t seed = resolve_seed(cfg.seed);
  cfg.model.seed = seed;
  cfg.train.seed = seed;
  validate_run_config(cfg);
  if (cfg.log_path.empty()) cfg.log_path = cfg.checkpoint + ".log.csv";

  const Corpus train_corpus = read_cupt_file(cfg.train_path);
  print_warnings(train_corpus, cfg.train_path, err);
  Corpus dev_corpus;
  if (!cfg.dev_path.empty()) {
    dev_corpus = read_cupt_file(cfg.dev_path);
    print_warnings(dev_corpus, cfg.dev_path, err);
  }
  const Vocab vocab = build_vocab(train_corpus, static_cast<int>(cfg.min_count));
  cfg.model.vocab_size = vocab.size();
  const auto train_set = encode_all(train_corpus, vocab);
  const auto dev_set = encode_all(dev_corpus, vocab);

  TaggerModel model(cfg.model);
  if (!cfg.model.pretrained_path.empty()) {
    const std::size_t rows = load_pretrained_embeddings(model, vocab, cfg.model.pretrained_path);
    err << fmt::format("loaded {} pretrained vectors\n", rows);
  }
  err << fmt::format("{} model, {} parameters, {} training / {} dev sentences, seed {}\n",
                     model_kind_name(cfg.model.kind), parameter_count(cfg.model), train_set.size(), dev_set.size(),
                     seed);
  const TrainResult result = train(model, train_set, dev_set, cfg.train, &err);
  save_model(cfg.checkpoint, model, vocab);
  write_file_atomic(cfg.log_path, result.log.to_csv());
  err << fmt::format("kept epoch {}; wrote {} and {}\n", result.best_epoch, cfg.checkpoint, cfg.log_path);
  out << summary_json(evaluate_model(model, dev_set.empty() ? train_set : dev_set)) << "\n";
  return kOk;
}

int cmd_tag(const std::string& checkpoint, const std::string& input, const std::string& output, std::ostream& out,
            std::ostream& err) {
  LoadedModel loaded = load_model(checkpoint);
  const Corpus corpus = read_cupt_file(input);
  print_warnings(corpus, input, err);
  std::vector<std::vector<MweSpan>> predicted;
  std::size_t count = 0;
  for (const Sentence& s : corpus.sentences) {
    const EncodedSentence enc = encode_sentence(s, loaded.vocab);
    std::vector<Tag> tags;
    try {
      tags = predict_tags(loaded.model, enc);
    } catch (const DimensionError& e) {
      throw CheckpointError(std::string("checkpoint does not fit its own configuration: ") + e.what());
    }
    predicted.push_back(decode_bigo(tags));
    count += predicted.back().size();
  }
  write_file_atomic(output, write_cupt(corpus.sentences, &predicted));
  out << json{{"sentences", corpus.sentences.size()}, {"mwes", count}, {"output", output}}.dump() << "\n";
  return kOk;
}

int cmd_eval(const std::string& gold_path, const std::string& sys_path, std::optional<int> gap_buckets,
             const std::string& gap_output, std::ostream& out, std::ostream& err) {
  if (gap_buckets && gap_output.empty()) throw ConfigError("a gap report needs an output path (--gap-output)");
  if (gap_buckets && *gap_buckets < 1) throw ConfigError("gap report bucket count must be >= 1");
  const Corpus gold = read_cupt_file(gold_path);
  const Corpus sys = read_cupt_file(sys_path);
  print_warnings(gold, gold_path, err);
  print_warnings(sys, sys_path, err);
  if (gold.sentences.size() != sys.sentences.size()) {
    throw DataError(fmt::format("{} has {} sentences but {} has {}", gold_path, gold.sentences.size(), sys_path,
                                sys.sentences.size()));
  }
  for (std::size_t i = 0; i < gold.sentences.size(); ++i) {
    if (gold.sentences[i].size() != sys.sentences[i].size()) {
      throw DataError(fmt::format("sentence {} has {} tokens in {} but {} in {}", i + 1, gold.sentences[i].size(),
                                  gold_path, sys.sentences[i].size(), sys_path));
    }
  }
  const SpanCorpus g = spans_of(gold), p = spans_of(sys);
  out << summary_json(evaluate(g, p)) << "\n";
  if (gap_buckets) {
    write_file_atomic(gap_output, gap_report_csv(gap_report(g, p, *gap_buckets)));
    err << "wrote " << gap_output << "\n";
  }
  return kOk;
}

int cmd_gradcheck(const std::string& layer, std::uint64_t seed, bool corrupt, std::ostream& out, std::ostream& err) {
  const GradCheckReport report = gradcheck_scenario(layer, seed, corrupt);
  json params = json::object();
  for (const GradCheckEntry& e : report.entries) {
    err << fmt::format("{:<32} {:.3e}\n", e.name, e.max_rel_error);
    params[e.name] = e.max_rel_error;
  }
  err << fmt::format("max relative error {:.3e} (tolerance {:.0e}): {}\n", report.max_rel_error, report.tolerance,
                     report.passed ? "pass" : "FAIL");
  out << json{{"layer", layer},
              {"seed", seed},
              {"max_rel_error", report.max_rel_error},
              {"tolerance", report.tolerance},
              {"passed", report.passed},
              {"parameters", params}}
             .dump(2)
      << "\n";
  return report.passed ? kOk : kCheckFailed;
}

int cmd_synth(const SyntheticSpec& spec, const std::string& output, std::ostream& out) {
  const Corpus corpus = make_synthetic_corpus(spec);
  write_file_atomic(output, write_cupt(corpus.sentences));
  out << json{{"sentences", corpus.sentences.size()}, {"output", output}}.dump() << "\n";
  return kOk;
}

// Unknown "--key value" / "--key=value" pairs left over by the parser.
json overrides_from_extras(const std::vector<std::string>& extras) {
  json flat = json::object();
  for (std::size_t i = 0; i < extras.size(); ++i) {
    const std::string& tok = extras[i];
    if (tok.rfind("--", 0) != 0 || tok.size() <= 2) throw ConfigError("unexpected argument '" + tok + "'");
    std::string key = tok.substr(2);
    std::string value;
    if (const auto eq = key.find('='); eq != std::string::npos) {
      value = key.substr(eq + 1);
      key = key.substr(0, eq);
    } else if (i + 1 < extras.size() && extras[i + 1].rfind("--", 0) != 0) {
      value = extras[++i];
    } else {
      value = "true";
    }
    flat[key] = parse_flag_value(value);
  }
  return flat;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Discontinuous multiword-expression tagger"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  auto* train_cmd = app.add_subcommand("train", "train a tagger; prints dev scores as JSON");
  train_cmd->add_option("--config", config_path, "JSON config file (flat dotted keys or nested objects)");
  train_cmd->add_option("--seed", seed, "seed for initialization and shuffling");
  train_cmd->allow_extras();
  train_cmd->footer("Any config key can be overridden with --<dotted.key> <value>, e.g. --model.kind gcn");

  std::string checkpoint, input, output;
  auto* tag_cmd = app.add_subcommand("tag", "write a .cupt file with predicted MWE annotations");
  tag_cmd->add_option("--checkpoint", checkpoint)->required();
  tag_cmd->add_option("--input", input)->required();
  tag_cmd->add_option("--output", output)->required();

  std::string gold, system, gap_output;
  std::optional<int> gap_buckets;
  auto* eval_cmd = app.add_subcommand("eval", "score a system .cupt file against gold");
  eval_cmd->add_option("gold", gold)->required();
  eval_cmd->add_option("system", system)->required();
  eval_cmd->add_option("--gap-report", gap_buckets, "bucket count for the per-gap CSV");
  eval_cmd->add_option("--gap-output", gap_output, "where to write the per-gap CSV");

  int max_bucket = 5;
  auto* gaps_cmd = app.add_subcommand("report-gaps", "per-gap-size scores as CSV (eval --gap-report)");
  gaps_cmd->add_option("gold", gold)->required();
  gaps_cmd->add_option("system", system)->required();
  gaps_cmd->add_option("--max-bucket", max_bucket, "gaps of this size or more share the top bucket");
  gaps_cmd->add_option("--output", gap_output)->required();

  std::string layer;
  bool full = false, corrupt = false;
  std::optional<std::uint64_t> check_seed;
  auto* grad_cmd = app.add_subcommand("gradcheck", "compare backward passes against finite differences");
  auto* layer_opt = grad_cmd->add_option("--layer", layer, "gcn, attention, highway, bilstm or cnn");
  auto* full_opt = grad_cmd->add_flag("--full", full, "the whole H-combined model");
  layer_opt->excludes(full_opt);
  grad_cmd->add_option("--seed", check_seed);
  grad_cmd->add_flag("--corrupt-backward", corrupt, "double the loss gradient (checker self-test)");

  SyntheticSpec synth;
  std::optional<std::uint64_t> synth_seed;
  std::vector<double> gap_weights;
  auto* synth_cmd = app.add_subcommand("synth", "write a synthetic verb-particle corpus");
  synth_cmd->add_option("--output", output)->required();
  synth_cmd->add_option("--sentences", synth.sentences);
  synth_cmd->add_option("--seed", synth_seed);
  synth_cmd->add_option("--gap-weights", gap_weights, "relative weights of gap sizes 0..5")->delimiter(',');
  synth_cmd->add_option("--distractor-rate", synth.distractor_rate);
  synth_cmd->add_flag("--stratified", synth.stratified, "exact gap proportions");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err) == 0 ? kOk : kConfigError;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kConfigError;
  }

  try {
    if (*train_cmd) {
      const json file_config = config_path.empty() ? json::object() : json::parse(read_text(config_path));
      json overrides = overrides_from_extras(train_cmd->remaining());
      if (seed) overrides["seed"] = *seed;
      return cmd_train(file_config, overrides, out, err);
    }
    if (*tag_cmd) return cmd_tag(checkpoint, input, output, out, err);
    if (*eval_cmd) return cmd_eval(gold, system, gap_buckets, gap_output, out, err);
    if (*gaps_cmd) return cmd_eval(gold, system, max_bucket, gap_output, out, err);
    if (*grad_cmd) {
      if (!full && layer.empty()) throw ConfigError("gradcheck needs --layer <name> or --full");
      return cmd_gradcheck(full ? "full" : layer, resolve_seed(check_seed), corrupt, out, err);
    }
    if (*synth_cmd) {
      synth.seed = resolve_seed(synth_seed);
      if (!gap_weights.empty()) {
        if (gap_weights.size() > synth.gap_weights.size()) throw ConfigError("at most 6 gap weights (sizes 0..5)");
        synth.gap_weights.fill(0.0);
        std::copy(gap_weights.begin(), gap_weights.end(), synth.gap_weights.begin());
      }
      return cmd_synth(synth, output, out);
    }
  } catch (const json::parse_error& e) {
    err << "error: config is not valid JSON: " << e.what() << "\n";
    return kConfigError;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const CheckpointError& e) {
    err << "error: " << e.what() << "\n";
    return kCheckpointError;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  } catch (const DataError& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  } catch (const StructureError& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kCheckFailed;
  }
  return kConfigError;
}

}  // namespace gappy::cli
