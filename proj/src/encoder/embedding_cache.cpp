#include "ufin/encoder/embedding_cache.hpp"

#include <cmath>
#include <fstream>
#include <string>

#include "ufin/error.hpp"
#include "ufin/numeric/binary_io.hpp"

namespace ufin {

namespace {
constexpr char kMagic[4] = {'U', 'F', 'E', 'C'};
}

void EmbeddingCache::insert(std::uint64_t row_id, std::span<const double> values) {
  if (values.size() != d_v_) {
    throw DataError("embedding cache: row " + std::to_string(row_id) + " has " +
                    std::to_string(values.size()) + " values, expected d_V=" + std::to_string(d_v_));
  }
  if (contains(row_id)) throw DataError("embedding cache: duplicate row " + std::to_string(row_id));
  const std::size_t offset = data_.size();
  for (double v : values) {
    const float f = static_cast<float>(v);
    if (!std::isfinite(f)) {
      data_.resize(offset);
      throw DataError("embedding cache: non-finite value for row " + std::to_string(row_id));
    }
    data_.push_back(f);
  }
  index_.emplace(row_id, ids_.size());
  ids_.push_back(row_id);
}

std::span<const float> EmbeddingCache::get(std::uint64_t row_id) const {
  auto it = index_.find(row_id);
  if (it == index_.end()) {
    throw DataError("embedding cache: no entry for row_id " + std::to_string(row_id));
  }
  return {data_.data() + it->second * d_v_, d_v_};
}

void EmbeddingCache::copy_to(std::uint64_t row_id, double* dst) const {
  const auto v = get(row_id);
  for (std::size_t i = 0; i < d_v_; ++i) dst[i] = v[i];
}

void EmbeddingCache::write(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write embedding cache " + path.string());
  out.write(kMagic, 4);
  binary::put_u32(out, kVersion);
  binary::put_u32(out, static_cast<std::uint32_t>(d_v_));
  binary::put_u64(out, ids_.size());
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    binary::put_u64(out, ids_[i]);
    for (std::size_t k = 0; k < d_v_; ++k) binary::put_f32(out, data_[i * d_v_ + k]);
  }
  if (!out) throw DataError("failed writing embedding cache " + path.string());
}

EmbeddingCache EmbeddingCache::read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open embedding cache " + path.string());
  binary::Reader reader(in, path.string());
  char magic[4];
  reader.read_bytes(magic, 4);
  if (std::string(magic, 4) != std::string(kMagic, 4)) {
    throw DataError(path.string() + ": not a UFEC embedding cache");
  }
  const std::uint32_t version = reader.u32();
  if (version != kVersion) {
    throw DataError(path.string() + ": unsupported UFEC version " + std::to_string(version));
  }
  const std::uint32_t d_v = reader.u32();
  if (d_v == 0) throw DataError(path.string() + ": d_V is zero");
  const std::uint64_t count = reader.u64();
  EmbeddingCache cache(d_v);
  std::vector<double> row(d_v);
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::uint64_t id = reader.u64();
    for (double& v : row) v = reader.f32();
    cache.insert(id, row);
  }
  if (!reader.at_end()) throw DataError(path.string() + ": trailing bytes after " +
                                        std::to_string(count) + " entries");
  return cache;
}

}  // namespace ufin
