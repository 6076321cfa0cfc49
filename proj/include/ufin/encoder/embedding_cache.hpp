#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <unordered_map>
#include <vector>

namespace ufin {

/// Pooled pre-LayerNorm text vectors keyed by row_id.
///
/// Values are held as float32, the precision of the UFEC file, so a cache
/// built in memory and one read back from disk are bitwise identical.
///
/// UFEC layout, little-endian:
///   "UFEC" | u32 version=1 | u32 d_V | u64 count | count x (u64 row_id | d_V x f32)
class EmbeddingCache {
 public:
  static constexpr std::uint32_t kVersion = 1;

  explicit EmbeddingCache(std::size_t d_v = 0) : d_v_(d_v) {}

  std::size_t dim() const { return d_v_; }
  std::size_t size() const { return ids_.size(); }
  bool contains(std::uint64_t row_id) const { return index_.count(row_id) != 0; }
  const std::vector<std::uint64_t>& row_ids() const { return ids_; }

  // Throws DataError on a duplicate row_id, a wrong length or non-finite values.
  void insert(std::uint64_t row_id, std::span<const double> values);
  // Throws DataError naming the row_id when absent.
  std::span<const float> get(std::uint64_t row_id) const;
  void copy_to(std::uint64_t row_id, double* dst) const;

  void write(const std::filesystem::path& path) const;
  static EmbeddingCache read(const std::filesystem::path& path);

 private:
  std::size_t d_v_;
  std::vector<std::uint64_t> ids_;
  std::vector<float> data_;
  std::unordered_map<std::uint64_t, std::size_t> index_;
};

}  // namespace ufin
