#pragma once

#include <string>
#include <vector>

#include "gappy/corpus.hpp"
#include "gappy/rng.hpp"
#include "gappy/tensor.hpp"

namespace gappy {

// Trainable leaf drawn from uniform(-a, a), a = sqrt(6 / (fan_in + fan_out)).
Tensor glorot_uniform(Shape shape, std::size_t fan_in, std::size_t fan_out, Rng& rng);

// Relation-aware graph convolution over one sentence's dependency tree:
//   C = relu(sum_r W_r X^T A_r + b),  r in {head->dep, dep->head, self}
// with W_r: [o x v] and b: [o x 1]. Output is returned token-major, [s x o].
struct GcnLayer {
  Tensor w_head_to_dep;
  Tensor w_dep_to_head;
  Tensor w_self;
  Tensor bias;

  static GcnLayer create(std::size_t in_width, std::size_t out_width, Rng& rng);
  std::size_t in_width() const { return w_self.cols(); }
  std::size_t out_width() const { return w_self.rows(); }
  void collect(const std::string& prefix, ParameterList& out) const;
};

Tensor gcn_forward(const GcnLayer& layer, const Tensor& x, const AdjacencySet& adj);

struct AttentionHead {
  Tensor w_q, w_k, w_v;  // [n x d_h]
};

// Multi-head scaled dot-product self-attention without positional encoding;
// head outputs are concatenated and projected by w_o.
struct MultiHeadAttention {
  std::vector<AttentionHead> heads;
  Tensor w_o;  // [(h * d_h) x n]

  static MultiHeadAttention create(std::size_t width, std::size_t num_heads, Rng& rng);
  std::size_t width() const { return w_o.cols(); }
  std::size_t head_width() const { return heads.front().w_q.cols(); }
  void collect(const std::string& prefix, ParameterList& out) const;
};

// Attention probabilities of one head, [s x s]. Exposed for inspection.
Tensor attention_weights(const AttentionHead& head, const Tensor& x, const std::vector<bool>& mask);
Tensor attention_forward(const MultiHeadAttention& layer, const Tensor& x, const std::vector<bool>& mask);

struct HighwayLayer {
  Tensor w_h, w_tr;  // [n x n]
  Tensor b_h, b_tr;  // [1 x n]
};

// y = Tr * H + (1 - Tr) * x per layer, H = relu(x W_h + b_h),
// Tr = sigmoid(x W_tr + b_tr). b_tr starts negative so layers begin by carrying.
struct HighwayBlock {
  std::vector<HighwayLayer> layers;
  std::size_t width = 0;

  static HighwayBlock create(std::size_t width, std::size_t depth, double transform_bias, Rng& rng);
  void collect(const std::string& prefix, ParameterList& out) const;
};

Tensor highway_forward(const HighwayBlock& block, const Tensor& x);

// Gate order in the 4u-wide blocks: input, forget, output, candidate.
struct LstmCell {
  Tensor w_x;  // [n x 4u]
  Tensor w_h;  // [u x 4u]
  Tensor b;    // [1 x 4u]

  static LstmCell create(std::size_t in_width, std::size_t hidden, Rng& rng);
  std::size_t hidden() const { return w_h.rows(); }
};

struct BiLstmLayer {
  LstmCell forward;
  LstmCell backward;

  static BiLstmLayer create(std::size_t in_width, std::size_t hidden, Rng& rng);
  std::size_t in_width() const { return forward.w_x.rows(); }
  std::size_t out_width() const { return 2 * forward.hidden(); }
  void collect(const std::string& prefix, ParameterList& out) const;
};

// Masked-out rows are skipped by both recurrences (state carried unchanged)
// and produce exact zeros. Output [s x 2u] = [forward | backward].
Tensor bilstm_forward(const BiLstmLayer& layer, const Tensor& x, const std::vector<bool>& mask);

struct ConvLayer {
  Tensor kernel;  // [w x c_in x c_out]
  Tensor bias;    // [1 x c_out]

  static ConvLayer create(std::size_t width, std::size_t in_channels, std::size_t out_channels, Rng& rng);
};

// Two convolution channels over the embeddings: A = two stacked width-3
// convolutions, B = one width-2 convolution, each followed by relu; the
// channel outputs are concatenated and batch-normalized.
struct CnnFrontEnd {
  ConvLayer a1, a2, b;
  Tensor gamma, beta;  // [1 x (f_a + f_b)]
  NormState norm;

  static CnnFrontEnd create(std::size_t in_width, std::size_t filters_a, std::size_t filters_b, Rng& rng);
  std::size_t out_width() const { return gamma.cols(); }
  void collect(const std::string& prefix, ParameterList& out) const;
  void collect_state(const std::string& prefix, ParameterList& out) const;
};

// Concatenated channel activations before normalization.
Tensor cnn_front_features(const CnnFrontEnd& fe, const Tensor& x);
Tensor cnn_front_forward(CnnFrontEnd& fe, const Tensor& x, const std::vector<bool>& mask, Mode mode);

}  // namespace gappy
