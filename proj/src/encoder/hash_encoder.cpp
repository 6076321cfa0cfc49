#include "ufin/encoder/hash_encoder.hpp"

#include <cctype>

#include "ufin/error.hpp"

namespace ufin {

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t mix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace

HashEncoder::HashEncoder(std::size_t d_v, std::uint64_t seed) : d_v_(d_v), seed_(seed) {
  if (d_v < 2) throw ConfigError("hash encoder: d_V must be at least 2");
}

std::vector<std::string> HashEncoder::tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      current += static_cast<char>(std::tolower(c));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

void HashEncoder::add_token(std::string_view token, std::vector<double>& acc) const {
  const std::uint64_t base = fnv1a(token) ^ mix(seed_);
  for (int b = 0; b < kBuckets; ++b) {
    const std::uint64_t h = mix(base + static_cast<std::uint64_t>(b));
    acc[h % d_v_] += (h >> 63) ? -1.0 : 1.0;
  }
}

std::vector<double> HashEncoder::encode(std::string_view text) const {
  std::vector<double> acc(d_v_, 0.0);
  for (const std::string& token : tokenize(text)) add_token(token, acc);
  return acc;
}

}  // namespace ufin
