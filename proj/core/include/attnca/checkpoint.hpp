#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "attnca/tensor.hpp"

namespace nca {

/// FNV-1a 64-bit hash, used for config digests.
std::uint64_t fnv1a64(std::string_view s);

/// Versioned binary checkpoint. Layout, all integers little-endian:
///   magic "ATTNCAPC" (8 bytes), u32 version (=1), u64 config digest,
///   u32 tensor count, then per tensor:
///   u32 name length, name bytes, u32 rank, u64 dims[rank], f64 data.
/// Round-trips bit-exactly.
void write_checkpoint(std::ostream& os, std::uint64_t config_digest, const std::vector<ParamRef>& params);

/// Loads tensors into `params` (matched by order; names and shapes must
/// agree). Returns the stored config digest.
std::uint64_t read_checkpoint(std::istream& is, const std::vector<ParamRef>& params);

void save_checkpoint(const std::filesystem::path& path, std::uint64_t config_digest,
                     const std::vector<ParamRef>& params);
std::uint64_t load_checkpoint(const std::filesystem::path& path, const std::vector<ParamRef>& params);

}  // namespace nca
