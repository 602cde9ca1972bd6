#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace g2d {

// Writes content to path atomically (temp file in the same directory, then
// rename). Creates parent directories as needed.
void atomic_write_file(const std::filesystem::path& path, const std::string& content);

std::string read_file(const std::filesystem::path& path);

// Fixed-format float for CSV/JSON artifacts: shortest round-trip
// representation so identical runs produce byte-identical files.
std::string fmt_double(double v);

// Hexfloat, bit-exact round trip; used by the policy snapshot format.
std::string fmt_double_exact(double v);

uint64_t fnv1a(const std::string& data);

}  // namespace g2d
