#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace ufin {

/// Offline text encoder. Each token is hashed into 3 signed buckets of a
/// d_V-dimensional vector; a sentence is the sum of its token vectors.
class HashEncoder {
 public:
  static constexpr int kBuckets = 3;

  explicit HashEncoder(std::size_t d_v = 64, std::uint64_t seed = 0);

  std::size_t dim() const { return d_v_; }
  std::uint64_t seed() const { return seed_; }

  // Lowercased maximal runs of ASCII letters and digits.
  static std::vector<std::string> tokenize(std::string_view text);

  void add_token(std::string_view token, std::vector<double>& acc) const;
  std::vector<double> encode(std::string_view text) const;

 private:
  std::size_t d_v_;
  std::uint64_t seed_;
};

}  // namespace ufin
