#include "ufin/interaction/moe.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ufin/error.hpp"

namespace ufin {

namespace {

Tensor tracked(Shape shape, double fill = 0.0) {
  Tensor t(std::move(shape), fill);
  t.enable_grad();
  return t;
}

void check_gating(std::size_t n_experts, std::size_t k, bool require_overlap) {
  if (n_experts == 0) throw ConfigError("interaction MoE: need at least one expert");
  if (k == 0 || k > n_experts) {
    throw ConfigError("interaction MoE: K=" + std::to_string(k) + " outside [1, " +
                      std::to_string(n_experts) + "]");
  }
  if (require_overlap && n_experts > 1 && !overlap_premise(n_experts, k)) {
    throw ConfigError("interaction MoE: K=" + std::to_string(k) + " must exceed ceil(L/2)=" +
                      std::to_string((n_experts + 1) / 2) + " for L=" + std::to_string(n_experts));
  }
}

std::size_t checked_dims(std::size_t n_u, std::size_t d) {
  if (n_u == 0) throw ConfigError("decoder: n_u must be at least 1");
  if (d < 2) throw ConfigError("decoder: d must be at least 2");
  return n_u * d;
}

}  // namespace

UniversalDecoder::UniversalDecoder(std::size_t d_v, std::size_t n_u, std::size_t d, Rng& rng)
    : projection(tracked({d_v, checked_dims(n_u, d)})),
      gain(tracked({n_u * d}, 1.0)),
      bias(tracked({n_u * d})),
      n_u_(n_u),
      d_(d) {
  fill_normal(projection, rng, 1.0 / std::sqrt(static_cast<double>(d_v)));
}

Var UniversalDecoder::forward(Var z_tilde) {
  Tape& t = z_tilde.tape();
  return layer_norm(linear(z_tilde, t.param(projection), Var()), t.param(gain), t.param(bias), d_);
}

void UniversalDecoder::append_parameters(std::vector<ParamRef>& out, const std::string& prefix) {
  out.push_back({prefix + "projection", &projection});
  out.push_back({prefix + "ln_gain", &gain});
  out.push_back({prefix + "ln_bias", &bias});
}

std::vector<std::size_t> topk_indices(std::span<const double> weights, std::size_t k) {
  if (k == 0 || k > weights.size()) {
    throw ConfigError("topk: K=" + std::to_string(k) + " outside [1, " +
                      std::to_string(weights.size()) + "]");
  }
  std::vector<std::size_t> order(weights.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return weights[a] > weights[b]; });
  order.resize(k);
  return order;
}

std::vector<double> topk_mask(std::span<const double> weights, std::size_t k) {
  std::vector<double> mask(weights.size(), 0.0);
  for (std::size_t i : topk_indices(weights, k)) mask[i] = 1.0;
  return mask;
}

std::size_t auto_topk(std::size_t experts) {
  return std::min(experts, (experts + 1) / 2 + 1);
}

bool overlap_premise(std::size_t experts, std::size_t k) { return k > (experts + 1) / 2; }

InteractionMoE::InteractionMoE(std::size_t d_v, std::size_t n_experts, std::size_t k,
                               std::size_t n_u, std::size_t n_o, std::size_t d, Rng& rng,
                               bool require_overlap)
    : gate((check_gating(n_experts, k, require_overlap), tracked({d_v, n_experts}))), k_(k) {
  fill_normal(gate, rng, 0.01);
  experts.reserve(n_experts);
  for (std::size_t j = 0; j < n_experts; ++j) experts.emplace_back(n_u, n_o, d, rng);
}

InteractionMoE::Output InteractionMoE::forward(Var universal, Var z_tilde) {
  Tape& t = universal.tape();
  Var probs = softmax_rows(linear(z_tilde, t.param(gate), Var()));
  const Tensor& pv = probs.value();
  const std::size_t batch = pv.rows(), n = pv.cols();
  Output out;
  out.selected.reserve(batch);
  Tensor mask({batch, n});
  for (std::size_t b = 0; b < batch; ++b) {
    auto chosen = topk_indices(std::span<const double>(pv.data() + b * n, n), k_);
    for (std::size_t j : chosen) mask[b * n + j] = 1.0;
    std::sort(chosen.begin(), chosen.end());
    out.selected.push_back(std::move(chosen));
  }
  out.gate = k_ == n ? probs : mul(probs, t.constant(std::move(mask)));
  std::vector<Var> logits;
  logits.reserve(experts.size());
  for (EulerExpert& e : experts) logits.push_back(e.forward(universal));
  out.zeta = weighted_sum(logits, out.gate);
  return out;
}

void InteractionMoE::append_parameters(std::vector<ParamRef>& out, const std::string& prefix) {
  out.push_back({prefix + "gate", &gate});
  for (std::size_t j = 0; j < experts.size(); ++j) {
    experts[j].append_parameters(out, prefix + "expert" + std::to_string(j) + "/");
  }
}

std::size_t verify_overlap(std::size_t experts, std::size_t k,
                           std::span<const std::vector<std::size_t>> selections) {
  if (selections.size() < 2) throw ConfigError("verify_overlap: need at least two selections");
  std::vector<std::vector<bool>> member;
  member.reserve(selections.size());
  for (const auto& s : selections) {
    if (s.size() != k) {
      throw ConfigError("verify_overlap: selection of size " + std::to_string(s.size()) +
                        ", expected K=" + std::to_string(k));
    }
    std::vector<bool> m(experts, false);
    for (std::size_t i : s) {
      if (i >= experts) {
        throw ConfigError("verify_overlap: index " + std::to_string(i) + " outside [0, " +
                          std::to_string(experts) + ")");
      }
      if (m[i]) throw ConfigError("verify_overlap: repeated index " + std::to_string(i));
      m[i] = true;
    }
    member.push_back(std::move(m));
  }
  std::size_t best = k;
  for (std::size_t u = 0; u < selections.size(); ++u)
    for (std::size_t v = u + 1; v < selections.size(); ++v) {
      std::size_t common = 0;
      for (std::size_t i : selections[v]) common += member[u][i] ? 1 : 0;
      best = std::min(best, common);
    }
  return best;
}

std::vector<std::vector<std::size_t>> k_subsets(std::size_t experts, std::size_t k) {
  if (k == 0 || k > experts) throw ConfigError("k_subsets: K outside [1, L]");
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> cur(k);
  std::iota(cur.begin(), cur.end(), 0);
  while (true) {
    out.push_back(cur);
    std::size_t i = k;
    while (i > 0 && cur[i - 1] == experts - k + i - 1) --i;
    if (i == 0) break;
    ++cur[i - 1];
    for (std::size_t j = i; j < k; ++j) cur[j] = cur[j - 1] + 1;
  }
  return out;
}

}  // namespace ufin
