#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

// Little-endian primitives shared by the checkpoint and dataset containers.
namespace motifset::binary {

void write_u32(std::ostream& os, std::uint32_t v);
void write_u64(std::ostream& os, std::uint64_t v);
void write_f64(std::ostream& os, double v);
void write_f64s(std::ostream& os, std::span<const double> values);
void write_string(std::ostream& os, const std::string& s);

std::uint32_t read_u32(std::istream& is);
std::uint64_t read_u64(std::istream& is);
double read_f64(std::istream& is);
std::vector<double> read_f64s(std::istream& is, std::size_t count);
std::string read_string(std::istream& is, std::size_t max_len = std::size_t{1} << 32);

/// CRC-32 (zlib polynomial) of a byte range.
std::uint32_t crc32(std::span<const char> bytes, std::uint32_t seed = 0);

}  // namespace motifset::binary
