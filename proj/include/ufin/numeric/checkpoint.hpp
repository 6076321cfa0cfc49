#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ufin/numeric/tensor.hpp"

namespace ufin {

// UFNP parameter checkpoint, all integers little-endian:
//   "UFNP" | u32 version | u32 count |
//   count x ( u32 name_len | name bytes (UTF-8) | u32 ndims | ndims x u32 dim |
//             prod(dims) x f64 )
inline constexpr std::uint32_t kCheckpointVersion = 1;

using NamedTensors = std::vector<std::pair<std::string, Tensor>>;

void write_checkpoint(const std::filesystem::path& path, std::span<const ParamRef> params);
NamedTensors read_checkpoint(const std::filesystem::path& path);

// Copies stored values into `params` by name. Every parameter must be present
// with an identical shape unless allow_missing is set.
void load_checkpoint_into(const std::filesystem::path& path, std::span<const ParamRef> params,
                          bool allow_missing = false);

}  // namespace ufin
