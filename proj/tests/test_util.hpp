#pragma once

#include <string>
#include <vector>

#include "gappy/corpus.hpp"
#include "gappy/rng.hpp"
#include "gappy/tensor.hpp"

namespace gappy::testing {

// One .cupt word row.
inline std::string row(int id, const std::string& form, int head, const std::string& mwe = "*") {
  return std::to_string(id) + "\t" + form + "\t" + form + "\tX\t_\t_\t" + std::to_string(head) + "\tdep\t_\t_\t" + mwe +
         "\n";
}

inline MweSpan span(std::vector<int> positions, int id = 1) { return MweSpan{id, std::nullopt, std::move(positions)}; }

inline std::vector<std::vector<int>> positions_of(const std::vector<MweSpan>& spans) {
  std::vector<std::vector<int>> out;
  for (const auto& s : spans) out.push_back(s.positions);
  return out;
}

// Sentence with a random tree: token 1 is the root, every later token hangs
// off an earlier one.
inline Sentence random_tree_sentence(std::size_t n, Rng& rng) {
  Sentence s;
  for (std::size_t k = 1; k <= n; ++k) {
    Token t;
    t.id = static_cast<int>(k);
    t.form = "w" + std::to_string(rng.below(5));
    t.head = k == 1 ? 0 : 1 + static_cast<int>(rng.below(k - 1));
    s.tokens.push_back(t);
  }
  return s;
}

inline Tensor random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0, bool requires_grad = false) {
  Tensor t = Tensor::zeros(std::move(shape), requires_grad);
  for (double& v : t.values()) v = rng.uniform(lo, hi);
  return t;
}

inline std::vector<double> values_of(const Tensor& t) { return {t.values().begin(), t.values().end()}; }

}  // namespace gappy::testing
