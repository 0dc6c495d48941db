#pragma once

#include <map>
#include <string>

#include "cognisnn/tensor.hpp"

namespace cognisnn {

/// Binary little-endian parameter file: magic "CGSN", version u32, then per
/// entry (name length u32, name bytes, rank u32, dims u32 each, f64 payload),
/// entries sorted by name.
void save_checkpoint(const std::string& path,
                     const std::map<std::string, Tensor>& entries);

std::map<std::string, Tensor> load_checkpoint(const std::string& path);

}  // namespace cognisnn
