#pragma once

#include <string>
#include <vector>

#include "mgml/nn.hpp"
#include "mgml/tensor.hpp"

namespace mgml {

// Tensor golden file: magic "MGT1", four little-endian u32 dims (n, c, h, w),
// then n*c*h*w little-endian f64 values.
void save_tensor(const Tensor& t, const std::string& path);
Tensor load_tensor(const std::string& path);

// Checkpoint: magic "MGC1", u32 parameter count, then a manifest of
// (name, dims, byte offset) records followed by the raw f64 blocks.
// Round trips are bit-exact.
void save_checkpoint(const std::vector<ParamPtr>& params, const std::string& path);
// Loads values into the given parameters; names and shapes must match the
// manifest exactly.
void load_checkpoint(std::vector<ParamPtr>& params, const std::string& path);

} // namespace mgml
