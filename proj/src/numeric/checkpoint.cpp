#include "ufin/numeric/checkpoint.hpp"

#include <fstream>
#include <map>

#include "ufin/error.hpp"
#include "ufin/numeric/binary_io.hpp"

namespace ufin {

namespace {
constexpr char kMagic[4] = {'U', 'F', 'N', 'P'};
constexpr std::uint32_t kMaxNameLength = 1u << 16;
}  // namespace

void write_checkpoint(const std::filesystem::path& path, std::span<const ParamRef> params) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  out.write(kMagic, 4);
  binary::put_u32(out, kCheckpointVersion);
  binary::put_u32(out, static_cast<std::uint32_t>(params.size()));
  for (const ParamRef& p : params) {
    binary::put_u32(out, static_cast<std::uint32_t>(p.name.size()));
    out.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    const Shape& shape = p.tensor->shape();
    binary::put_u32(out, static_cast<std::uint32_t>(shape.size()));
    for (std::size_t d : shape) binary::put_u32(out, static_cast<std::uint32_t>(d));
    for (double v : p.tensor->values()) binary::put_f64(out, v);
  }
  if (!out) throw DataError("failed writing checkpoint " + path.string());
}

NamedTensors read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  binary::Reader reader(in, path.string());
  char magic[4];
  reader.read_bytes(magic, 4);
  if (std::string(magic, 4) != std::string(kMagic, 4)) {
    throw DataError(path.string() + ": not a UFNP checkpoint");
  }
  const std::uint32_t version = reader.u32();
  if (version != kCheckpointVersion) {
    throw DataError(path.string() + ": unsupported checkpoint version " + std::to_string(version));
  }
  const std::uint32_t count = reader.u32();
  NamedTensors result;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t name_len = reader.u32();
    if (name_len > kMaxNameLength) throw DataError(path.string() + ": corrupt parameter name");
    std::string name(name_len, '\0');
    reader.read_bytes(name.data(), name_len);
    const std::uint32_t ndims = reader.u32();
    if (ndims == 0 || ndims > 8) throw DataError(path.string() + ": corrupt shape for " + name);
    Shape shape;
    for (std::uint32_t d = 0; d < ndims; ++d) shape.push_back(reader.u32());
    std::vector<double> values(shape_size(shape));
    for (double& v : values) v = reader.f64();
    result.emplace_back(std::move(name), Tensor(std::move(shape), std::move(values)));
  }
  if (!reader.at_end()) throw DataError(path.string() + ": trailing bytes after checkpoint");
  return result;
}

void load_checkpoint_into(const std::filesystem::path& path, std::span<const ParamRef> params,
                          bool allow_missing) {
  std::map<std::string, Tensor> stored;
  for (auto& [name, tensor] : read_checkpoint(path)) stored.emplace(name, std::move(tensor));
  for (const ParamRef& p : params) {
    auto it = stored.find(p.name);
    if (it == stored.end()) {
      if (allow_missing) continue;
      throw DataError(path.string() + ": missing parameter " + p.name);
    }
    if (it->second.shape() != p.tensor->shape()) {
      throw DataError(path.string() + ": parameter " + p.name + " has shape " +
                      shape_string(it->second.shape()) + ", expected " +
                      shape_string(p.tensor->shape()));
    }
    auto dst = p.tensor->values();
    auto src = it->second.values();
    std::copy(src.begin(), src.end(), dst.begin());
  }
}

}  // namespace ufin
