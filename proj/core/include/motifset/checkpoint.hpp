#pragma once

#include <filesystem>
#include <iosfwd>

#include "motifset/network.hpp"

namespace motifset {

// Binary checkpoint layout (all integers little-endian):
//   "MOTIFCKP" | u32 version | u32 weight_mode | u32 activation | u32 init
//   u32 density_mode | f64 density_value
//   u64 length + topology text (motif-topology v1)
//   per layer: u64 n + n f64 weights (row-major), u64 n + n f64 biases
// float networks are widened to f64 on save.

template <typename T>
void save_checkpoint(std::ostream& os, const BasicNetwork<T>& network);

template <typename T>
void save_checkpoint(const std::filesystem::path& path, const BasicNetwork<T>& network);

template <typename T = double>
BasicNetwork<T> load_checkpoint(std::istream& is);

template <typename T = double>
BasicNetwork<T> load_checkpoint(const std::filesystem::path& path);

}  // namespace motifset
