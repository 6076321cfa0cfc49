#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "ufin/numeric/tensor.hpp"

namespace ufin {

using Rng = std::mt19937_64;

// Derives an independent stage seed from the run's root seed.
std::uint64_t derive_seed(std::uint64_t root, std::string_view stage);

void fill_normal(Tensor& t, Rng& rng, double stddev, double mean = 0.0);
void fill_uniform(Tensor& t, Rng& rng, double low, double high);

}  // namespace ufin
