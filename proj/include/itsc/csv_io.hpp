#pragma once

#include <string>

#include "itsc/dataset.hpp"

namespace itsc::data {

/// Reads the wide CSV layout: header `label,c0_t0,...,c{C-1}_t{l-1}` with the
/// time index varying fastest, one sample per row. Errors name the offending
/// 1-based file row.
Dataset load_csv(const std::string& path);

/// Writes the same layout with shortest round-trip decimal formatting, so
/// load_csv(write_csv(d)) reproduces every value bit-exactly.
void write_csv(const std::string& path, const Dataset& data);

}  // namespace itsc::data
