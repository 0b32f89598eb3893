#pragma once

// Little-endian primitives for the checkpoint container. Every artifact file
// starts with a 4-byte magic ("PRLF" network, "PRLD" dataset, "PRLP" PCA,
// "PRLL" Laplace) followed by a u32 format version.

#include <array>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>

namespace prl::io {

inline constexpr std::uint32_t kFormatVersion = 1;

void write_u8(std::ostream& os, std::uint8_t v);
void write_u32(std::ostream& os, std::uint32_t v);
void write_u64(std::ostream& os, std::uint64_t v);
void write_f64(std::ostream& os, double v);
void write_string(std::ostream& os, std::string_view s);

std::uint8_t read_u8(std::istream& is);
std::uint32_t read_u32(std::istream& is);
std::uint64_t read_u64(std::istream& is);
double read_f64(std::istream& is);
std::string read_string(std::istream& is);

void write_header(std::ostream& os, std::string_view magic);
/// Checks magic and version; throws prl::DataError on mismatch or truncation.
void read_header(std::istream& is, std::string_view magic);

}  // namespace prl::io
