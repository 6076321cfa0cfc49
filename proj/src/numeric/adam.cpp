#include "ufin/numeric/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace ufin {

void Adam::step(std::span<const ParamRef> params) {
  for (const ParamRef& p : params) {
    if (!p.tensor->tracked()) {
      throw std::invalid_argument("adam: parameter '" + p.name + "' has no gradient");
    }
  }
  ++step_;
  const double t = static_cast<double>(step_);
  const double bias1 = 1.0 - std::pow(config_.beta1, t);
  const double bias2 = 1.0 - std::pow(config_.beta2, t);
  for (const ParamRef& p : params) {
    Moments& mom = moments_[p.name];
    const std::size_t n = p.tensor->size();
    if (mom.first.empty()) {
      mom.first.assign(n, 0.0);
      mom.second.assign(n, 0.0);
    } else if (mom.first.size() != n) {
      throw std::invalid_argument("adam: parameter '" + p.name + "' changed size");
    }
    auto values = p.tensor->values();
    auto grads = p.tensor->grad();
    for (std::size_t i = 0; i < n; ++i) {
      const double g = grads[i] + config_.weight_decay * values[i];
      mom.first[i] = config_.beta1 * mom.first[i] + (1.0 - config_.beta1) * g;
      mom.second[i] = config_.beta2 * mom.second[i] + (1.0 - config_.beta2) * g * g;
      const double m_hat = mom.first[i] / bias1;
      const double v_hat = mom.second[i] / bias2;
      values[i] -= config_.lr * m_hat / (std::sqrt(v_hat) + config_.eps);
    }
  }
}

void zero_grads(std::span<const ParamRef> params) {
  for (const ParamRef& p : params) p.tensor->zero_grad();
}

}  // namespace ufin
