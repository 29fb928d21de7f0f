#pragma once

#include <string>
#include <vector>

#include "fedtab/model.hpp"

namespace fedtab {

// Binary checkpoint container, little-endian:
//   magic "FTCK" + u32 version, config fields, u32 tensor count, then per
//   tensor: u32 name length, name bytes, u8 trainable, u32 ndim, i64 dims,
//   f64 values. Round-trips bit-exact.
std::vector<unsigned char> params_to_bytes(const ModelParams& params);
ModelParams params_from_bytes(const std::vector<unsigned char>& bytes);

void save_checkpoint(const ModelParams& params, const std::string& path);
ModelParams load_checkpoint(const std::string& path);

}  // namespace fedtab
