#include "ufin/numeric/random.hpp"

namespace ufin {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t root, std::string_view stage) {
  std::uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a
  for (unsigned char c : stage) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return splitmix64(root ^ splitmix64(h));
}

void fill_normal(Tensor& t, Rng& rng, double stddev, double mean) {
  std::normal_distribution<double> dist(mean, stddev);
  for (double& v : t.values()) v = dist(rng);
}

void fill_uniform(Tensor& t, Rng& rng, double low, double high) {
  std::uniform_real_distribution<double> dist(low, high);
  for (double& v : t.values()) v = dist(rng);
}

}  // namespace ufin
