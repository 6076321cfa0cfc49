#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ufin/numeric/tensor.hpp"

namespace ufin {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  // L2 penalty: weight_decay * param is added to the gradient before the
  // moment updates.
  double weight_decay = 0.0;
};

/// Adam optimizer state. Moment buffers are keyed by parameter name, so the
/// same optimizer can be stepped with any subset of a model's parameters.
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  // Throws std::invalid_argument if a parameter has no gradient buffer.
  void step(std::span<const ParamRef> params);

  std::uint64_t steps() const { return step_; }
  const AdamConfig& config() const { return config_; }

 private:
  struct Moments {
    std::vector<double> first;
    std::vector<double> second;
  };

  AdamConfig config_;
  std::map<std::string, Moments> moments_;
  std::uint64_t step_ = 0;
};

void zero_grads(std::span<const ParamRef> params);

}  // namespace ufin
