#pragma once

#include <filesystem>

#include "core/tensor.hpp"

namespace eie {

// ".eiet" binary tensor file:
//   magic "EIET", version u8 = 1, rank u8,
//   rank x u32 little-endian dims,
//   product(dims) x f32 little-endian values.
// No padding, no compression.
void save_eiet(const std::filesystem::path& path, const Tensor& t);
Tensor load_eiet(const std::filesystem::path& path);

}  // namespace eie
