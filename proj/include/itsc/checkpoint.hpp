#pragma once

#include <map>
#include <string>

#include "itsc/tensor.hpp"

namespace itsc::nn {

/// Binary snapshot of named tensors. The format round-trips doubles
/// bit-exactly and is versioned; readers reject unknown versions.
void save_checkpoint(const std::string& path, const std::map<std::string, Tensor>& tensors);

std::map<std::string, Tensor> load_checkpoint(const std::string& path);

}  // namespace itsc::nn
