#include "gappy/layers.hpp"

#include <cmath>

#include "gappy/errors.hpp"

namespace gappy {

namespace {

Tensor constant_matrix(std::size_t n, std::vector<double> values) { return Tensor::from({n, n}, std::move(values)); }

void check_width(const Tensor& x, std::size_t expected, const char* layer) {
  if (x.rank() != 2 || x.cols() != expected) {
    throw DimensionError(std::string(layer) + ": input " + shape_string(x.shape()) + " but layer width is " +
                         std::to_string(expected));
  }
}

void check_mask(const Tensor& x, const std::vector<bool>& mask, const char* layer) {
  if (mask.size() != x.rows()) {
    throw DimensionError(std::string(layer) + ": mask of " + std::to_string(mask.size()) + " for " +
                         std::to_string(x.rows()) + " rows");
  }
}

}  // namespace

Tensor glorot_uniform(Shape shape, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Tensor t = Tensor::zeros(std::move(shape), true);
  for (double& v : t.values()) v = rng.uniform(-a, a);
  return t;
}

GcnLayer GcnLayer::create(std::size_t in_width, std::size_t out_width, Rng& rng) {
  GcnLayer l;
  l.w_head_to_dep = glorot_uniform({out_width, in_width}, in_width, out_width, rng);
  l.w_dep_to_head = glorot_uniform({out_width, in_width}, in_width, out_width, rng);
  l.w_self = glorot_uniform({out_width, in_width}, in_width, out_width, rng);
  l.bias = Tensor::zeros({out_width, 1}, true);
  return l;
}

void GcnLayer::collect(const std::string& prefix, ParameterList& out) const {
  out.push_back({prefix + ".w_head_to_dep", w_head_to_dep});
  out.push_back({prefix + ".w_dep_to_head", w_dep_to_head});
  out.push_back({prefix + ".w_self", w_self});
  out.push_back({prefix + ".bias", bias});
}

Tensor gcn_forward(const GcnLayer& layer, const Tensor& x, const AdjacencySet& adj) {
  check_width(x, layer.in_width(), "gcn");
  const std::size_t s = x.rows();
  if (adj.size() != s) {
    throw DimensionError("gcn: adjacency is " + std::to_string(adj.size()) + "x" + std::to_string(adj.size()) +
                         " for " + std::to_string(s) + " tokens");
  }
  const Tensor xt = transpose(x);  // [v x s]
  const Tensor pre_h2d = matmul(layer.w_head_to_dep, matmul(xt, constant_matrix(s, adj.head_to_dep_matrix())));
  const Tensor pre_d2h = matmul(layer.w_dep_to_head, matmul(xt, constant_matrix(s, adj.dep_to_head_matrix())));
  const Tensor pre_self = matmul(layer.w_self, matmul(xt, constant_matrix(s, adj.self_matrix())));
  const Tensor c = relu(add(add(add(pre_h2d, pre_d2h), pre_self), layer.bias));  // [o x s]
  return transpose(c);
}

MultiHeadAttention MultiHeadAttention::create(std::size_t width, std::size_t num_heads, Rng& rng) {
  if (num_heads == 0 || width % num_heads != 0) {
    throw ConfigError("attention width " + std::to_string(width) + " is not divisible by " +
                      std::to_string(num_heads) + " heads");
  }
  const std::size_t dh = width / num_heads;
  MultiHeadAttention m;
  for (std::size_t h = 0; h < num_heads; ++h) {
    AttentionHead head;
    head.w_q = glorot_uniform({width, dh}, width, dh, rng);
    head.w_k = glorot_uniform({width, dh}, width, dh, rng);
    head.w_v = glorot_uniform({width, dh}, width, dh, rng);
    m.heads.push_back(std::move(head));
  }
  m.w_o = glorot_uniform({dh * num_heads, width}, dh * num_heads, width, rng);
  return m;
}

void MultiHeadAttention::collect(const std::string& prefix, ParameterList& out) const {
  for (std::size_t h = 0; h < heads.size(); ++h) {
    const std::string p = prefix + ".head" + std::to_string(h + 1);
    out.push_back({p + ".w_q", heads[h].w_q});
    out.push_back({p + ".w_k", heads[h].w_k});
    out.push_back({p + ".w_v", heads[h].w_v});
  }
  out.push_back({prefix + ".w_o", w_o});
}

Tensor attention_weights(const AttentionHead& head, const Tensor& x, const std::vector<bool>& mask) {
  const Tensor q = matmul(x, head.w_q);
  const Tensor k = matmul(x, head.w_k);
  const double scale_factor = 1.0 / std::sqrt(static_cast<double>(head.w_q.cols()));
  return softmax_rows(scale(matmul(q, transpose(k)), scale_factor), mask);
}

Tensor attention_forward(const MultiHeadAttention& layer, const Tensor& x, const std::vector<bool>& mask) {
  check_width(x, layer.width(), "attention");
  check_mask(x, mask, "attention");
  std::vector<Tensor> outputs;
  outputs.reserve(layer.heads.size());
  for (const AttentionHead& head : layer.heads) {
    outputs.push_back(matmul(attention_weights(head, x, mask), matmul(x, head.w_v)));
  }
  return matmul(concat_cols(outputs), layer.w_o);
}

HighwayBlock HighwayBlock::create(std::size_t width, std::size_t depth, double transform_bias, Rng& rng) {
  HighwayBlock block;
  block.width = width;
  for (std::size_t j = 0; j < depth; ++j) {
    HighwayLayer l;
    l.w_h = glorot_uniform({width, width}, width, width, rng);
    l.w_tr = glorot_uniform({width, width}, width, width, rng);
    l.b_h = Tensor::zeros({1, width}, true);
    l.b_tr = Tensor::full({1, width}, transform_bias, true);
    block.layers.push_back(std::move(l));
  }
  return block;
}

void HighwayBlock::collect(const std::string& prefix, ParameterList& out) const {
  for (std::size_t j = 0; j < layers.size(); ++j) {
    const std::string p = prefix + ".layer" + std::to_string(j + 1);
    out.push_back({p + ".w_h", layers[j].w_h});
    out.push_back({p + ".b_h", layers[j].b_h});
    out.push_back({p + ".w_tr", layers[j].w_tr});
    out.push_back({p + ".b_tr", layers[j].b_tr});
  }
}

Tensor highway_forward(const HighwayBlock& block, const Tensor& x) {
  check_width(x, block.width, "highway");
  Tensor y = x;
  for (const HighwayLayer& l : block.layers) {
    const Tensor h = relu(add(matmul(y, l.w_h), l.b_h));
    const Tensor tr = sigmoid(add(matmul(y, l.w_tr), l.b_tr));
    y = add(mul(tr, h), mul(one_minus(tr), y));
  }
  return y;
}

LstmCell LstmCell::create(std::size_t in_width, std::size_t hidden, Rng& rng) {
  LstmCell c;
  c.w_x = glorot_uniform({in_width, 4 * hidden}, in_width + hidden, 4 * hidden, rng);
  c.w_h = glorot_uniform({hidden, 4 * hidden}, in_width + hidden, 4 * hidden, rng);
  c.b = Tensor::zeros({1, 4 * hidden}, true);
  auto b = c.b.values();
  for (std::size_t i = hidden; i < 2 * hidden; ++i) b[i] = 1.0;  // forget gate
  return c;
}

BiLstmLayer BiLstmLayer::create(std::size_t in_width, std::size_t hidden, Rng& rng) {
  BiLstmLayer l;
  l.forward = LstmCell::create(in_width, hidden, rng);
  l.backward = LstmCell::create(in_width, hidden, rng);
  return l;
}

void BiLstmLayer::collect(const std::string& prefix, ParameterList& out) const {
  for (const auto& [name, cell] : {std::pair{"fwd", &forward}, std::pair{"bwd", &backward}}) {
    const std::string p = prefix + "." + name;
    out.push_back({p + ".w_x", cell->w_x});
    out.push_back({p + ".w_h", cell->w_h});
    out.push_back({p + ".b", cell->b});
  }
}

namespace {

Tensor run_lstm(const LstmCell& cell, const Tensor& x, const std::vector<bool>& mask, bool reverse) {
  const std::size_t s = x.rows();
  const std::size_t u = cell.hidden();
  const Tensor xw = matmul(x, cell.w_x);  // input contribution for every step at once
  const Tensor zero_row = Tensor::zeros({1, u});
  Tensor h = zero_row;
  Tensor c = zero_row;
  std::vector<Tensor> outputs(s, zero_row);
  for (std::size_t step = 0; step < s; ++step) {
    const std::size_t t = reverse ? s - 1 - step : step;
    if (!mask[t]) continue;
    const Tensor z = add(add(slice_rows(xw, t, 1), matmul(h, cell.w_h)), cell.b);
    const Tensor gates = sigmoid(slice_cols(z, 0, 3 * u));
    const Tensor in_gate = slice_cols(gates, 0, u);
    const Tensor forget_gate = slice_cols(gates, u, u);
    const Tensor out_gate = slice_cols(gates, 2 * u, u);
    const Tensor candidate = tanh(slice_cols(z, 3 * u, u));
    c = add(mul(forget_gate, c), mul(in_gate, candidate));
    h = mul(out_gate, tanh(c));
    outputs[t] = h;
  }
  return concat_rows(outputs);
}

}  // namespace

Tensor bilstm_forward(const BiLstmLayer& layer, const Tensor& x, const std::vector<bool>& mask) {
  check_width(x, layer.in_width(), "bilstm");
  check_mask(x, mask, "bilstm");
  if (x.rows() == 0) return Tensor::zeros({0, layer.out_width()});
  return concat_cols({run_lstm(layer.forward, x, mask, false), run_lstm(layer.backward, x, mask, true)});
}

ConvLayer ConvLayer::create(std::size_t width, std::size_t in_channels, std::size_t out_channels, Rng& rng) {
  ConvLayer c;
  c.kernel = glorot_uniform({width, in_channels, out_channels}, width * in_channels, width * out_channels, rng);
  c.bias = Tensor::zeros({1, out_channels}, true);
  return c;
}

CnnFrontEnd CnnFrontEnd::create(std::size_t in_width, std::size_t filters_a, std::size_t filters_b, Rng& rng) {
  CnnFrontEnd fe;
  fe.a1 = ConvLayer::create(3, in_width, filters_a, rng);
  fe.a2 = ConvLayer::create(3, filters_a, filters_a, rng);
  fe.b = ConvLayer::create(2, in_width, filters_b, rng);
  fe.gamma = Tensor::full({1, filters_a + filters_b}, 1.0, true);
  fe.beta = Tensor::zeros({1, filters_a + filters_b}, true);
  fe.norm = NormState::create(filters_a + filters_b);
  return fe;
}

void CnnFrontEnd::collect(const std::string& prefix, ParameterList& out) const {
  out.push_back({prefix + ".conv_a1.kernel", a1.kernel});
  out.push_back({prefix + ".conv_a1.bias", a1.bias});
  out.push_back({prefix + ".conv_a2.kernel", a2.kernel});
  out.push_back({prefix + ".conv_a2.bias", a2.bias});
  out.push_back({prefix + ".conv_b.kernel", b.kernel});
  out.push_back({prefix + ".conv_b.bias", b.bias});
  out.push_back({prefix + ".norm.gamma", gamma});
  out.push_back({prefix + ".norm.beta", beta});
}

void CnnFrontEnd::collect_state(const std::string& prefix, ParameterList& out) const {
  out.push_back({prefix + ".norm.running_mean", norm.running_mean});
  out.push_back({prefix + ".norm.running_var", norm.running_var});
}

Tensor cnn_front_features(const CnnFrontEnd& fe, const Tensor& x) {
  check_width(x, fe.a1.kernel.shape()[1], "cnn front-end");
  const Tensor a = relu(conv1d(relu(conv1d(x, fe.a1.kernel, fe.a1.bias)), fe.a2.kernel, fe.a2.bias));
  const Tensor b = relu(conv1d(x, fe.b.kernel, fe.b.bias));
  return concat_cols({a, b});
}

Tensor cnn_front_forward(CnnFrontEnd& fe, const Tensor& x, const std::vector<bool>& mask, Mode mode) {
  check_mask(x, mask, "cnn front-end");
  return batch_norm(cnn_front_features(fe, x), fe.gamma, fe.beta, mask, fe.norm, mode);
}

}  // namespace gappy
