#pragma once

#include <string>
#include <vector>

#include "ufin/numeric/ops.hpp"
#include "ufin/numeric/random.hpp"

namespace ufin {

/// Euler interaction in complex log-polar form.
///
/// Field j of row b is the complex vector lambda_j * exp(i * theta_bj) with
/// lambda = softplus(mu). For order vector k:
///   l_k   = sum_j orders[k,j] * ln(lambda_j)
///   phi_k = sum_j orders[k,j] * theta_bj
///   r_k = exp(l_k) cos(phi_k),  m_k = exp(l_k) sin(phi_k)
/// i.e. (r_k, m_k) is prod_j z_j^orders[k,j]. The output is
///   sum_k <w_re[k], r_k> + <w_im[k], m_k> + bias        -> [B, 1]
///
/// theta is [B, n_u * d] (field-major), orders [n_o, n_u], mu [n_u, d],
/// w_re / w_im [n_o, d], bias [1]. Throws NumericError naming k when
/// exp(l_k) would overflow.
Var euler_interaction(Var theta, Var orders, Var mu, Var w_re, Var w_im, Var bias);

inline constexpr double kMaxLogModulus = 700.0;

/// One Euler interaction layer with its learnable orders and moduli.
class EulerExpert {
 public:
  EulerExpert(std::size_t n_u, std::size_t n_o, std::size_t d, Rng& rng);

  // universal: [B, n_u * d] -> logit [B, 1]
  Var forward(Var universal);
  void append_parameters(std::vector<ParamRef>& out, const std::string& prefix);

  std::size_t fields() const { return orders.cols(); }
  std::size_t order_vectors() const { return orders.rows(); }
  std::size_t dim() const { return mu.cols(); }

  Tensor orders;  // [n_o, n_u]
  Tensor mu;      // [n_u, d]
  Tensor w_re;    // [n_o, d]
  Tensor w_im;    // [n_o, d]
  Tensor bias;    // [1]
};

}  // namespace ufin
