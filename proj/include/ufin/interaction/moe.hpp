#pragma once

#include <span>
#include <string>
#include <vector>

#include "ufin/interaction/euler.hpp"

namespace ufin {

/// Universal feature generation: row j of the output is LN(z~ V_j), stored
/// field-major as [B, n_u * d] with one LayerNorm group per field.
class UniversalDecoder {
 public:
  UniversalDecoder(std::size_t d_v, std::size_t n_u, std::size_t d, Rng& rng);

  Var forward(Var z_tilde);
  std::size_t fields() const { return n_u_; }
  std::size_t dim() const { return d_; }
  void append_parameters(std::vector<ParamRef>& out, const std::string& prefix);

  Tensor projection;  // [d_V, n_u * d]
  Tensor gain;        // [n_u * d]
  Tensor bias;        // [n_u * d]

 private:
  std::size_t n_u_;
  std::size_t d_;
};

// Indices of the k largest weights, ordered by weight descending; equal
// weights keep the lower index first.
std::vector<std::size_t> topk_indices(std::span<const double> weights, std::size_t k);
// 1 at the top-k positions, 0 elsewhere.
std::vector<double> topk_mask(std::span<const double> weights, std::size_t k);

// Smallest K satisfying K > ceil(L/2), capped at L.
std::size_t auto_topk(std::size_t experts);
bool overlap_premise(std::size_t experts, std::size_t k);

/// Interaction MoE: g~ = TopK(softmax(z~ W~_g)) without renormalisation and
/// zeta = sum_j g~_j * euler_j(E).
class InteractionMoE {
 public:
  struct Output {
    Var zeta;  // [B, 1]
    Var gate;  // [B, L], zeros outside the selection
    std::vector<std::vector<std::size_t>> selected;  // per row, sorted ascending
  };

  // Throws ConfigError when k is outside [1, experts], or when
  // require_overlap is set and k <= ceil(experts / 2).
  InteractionMoE(std::size_t d_v, std::size_t experts, std::size_t k, std::size_t n_u,
                 std::size_t n_o, std::size_t d, Rng& rng, bool require_overlap = true);

  Output forward(Var universal, Var z_tilde);
  std::size_t size() const { return experts.size(); }
  std::size_t k() const { return k_; }
  void append_parameters(std::vector<ParamRef>& out, const std::string& prefix);

  Tensor gate;  // [d_V, L]
  std::vector<EulerExpert> experts;

 private:
  std::size_t k_;
};

// Minimum pairwise intersection size of the given K-subsets of [0, L).
// Throws ConfigError for fewer than two subsets, a subset of the wrong size,
// repeated indices or indices outside [0, L).
std::size_t verify_overlap(std::size_t experts, std::size_t k,
                           std::span<const std::vector<std::size_t>> selections);
// All K-subsets of [0, L) in lexicographic order.
std::vector<std::vector<std::size_t>> k_subsets(std::size_t experts, std::size_t k);

}  // namespace ufin
