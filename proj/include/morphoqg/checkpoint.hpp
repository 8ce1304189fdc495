#pragma once

// Binary checkpoint: "MQG1", u32 tensor count, then per tensor u32 name
// length, UTF-8 name, u32 rank, u32 dims..., little-endian float32 data.
// All integers little-endian. Tensors are written in name order.

#include <filesystem>
#include <iosfwd>

#include "morphoqg/params.hpp"

namespace morphoqg {

void write_checkpoint(std::ostream& out, const ParameterStore<float>& store);
ParameterStore<float> read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const ParameterStore<float>& store);
ParameterStore<float> load_checkpoint(const std::filesystem::path& path);

}  // namespace morphoqg
