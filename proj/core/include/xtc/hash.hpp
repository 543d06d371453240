#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace xtc {

/// Lowercase hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

/// 64-bit FNV-1a; stable across platforms, used for mock embeddings.
std::uint64_t fnv1a64(std::string_view data) noexcept;

}  // namespace xtc
