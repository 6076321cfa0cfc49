#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ufin/data/vocabulary.hpp"
#include "ufin/numeric/ops.hpp"
#include "ufin/numeric/random.hpp"

namespace ufin {

/// LayerNorm applied to the pooled token sum: s = LN(sum_j v_j).
class TextNorm {
 public:
  explicit TextNorm(std::size_t d_v);

  Var forward(Var pooled);
  void append_parameters(std::vector<ParamRef>& out, const std::string& prefix);

  Tensor gain;
  Tensor bias;
};

/// Semantic-fusion MoE: z = sum_j g_j * relu(s W_j + b_j), g = softmax(s W_g).
/// All L experts are dense; there is no TopK at this stage.
class SemanticFusion {
 public:
  struct Output {
    Var z;     // [B, d_V]
    Var gate;  // [B, L]
  };

  SemanticFusion(std::size_t d_v, std::size_t experts, Rng& rng);

  Output forward(Var s);
  std::size_t experts() const { return weights.size(); }
  std::size_t dim() const { return gate.rows(); }
  void append_parameters(std::vector<ParamRef>& out, const std::string& prefix);

  std::vector<Tensor> weights;  // [d_V, d_V] each
  std::vector<Tensor> biases;   // [d_V] each
  Tensor gate;                  // [d_V, L]
};

/// Index lists of one anonymous field for a batch; -1 marks an unseen id.
struct AnonymousIds {
  std::size_t field = 0;
  std::vector<std::int64_t> index;
};

/// Anonymous-feature fusion: z~ = z + sum_k h_k U_k with h_k an ID embedding.
/// Unseen ids embed to zero and leave z unchanged.
class AnonymousTable {
 public:
  AnonymousTable(std::vector<std::string> fields, std::vector<Vocabulary> vocabularies,
                 std::size_t d_a, std::size_t d_v, Rng& rng);

  std::size_t size() const { return fields_.size(); }
  const std::vector<std::string>& fields() const { return fields_; }
  const Vocabulary& vocabulary(std::size_t field) const;
  // Throws std::out_of_range for an invalid field index.
  std::int64_t lookup(std::size_t field, std::string_view id) const;

  Var fuse(Var z, std::span<const AnonymousIds> ids);
  void append_parameters(std::vector<ParamRef>& out, const std::string& prefix);

  std::vector<Tensor> embeddings;   // [vocab, d_A] per field
  std::vector<Tensor> projections;  // [d_A, d_V] per field

 private:
  std::vector<std::string> fields_;
  std::vector<Vocabulary> vocabularies_;
};

}  // namespace ufin
