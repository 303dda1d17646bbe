#pragma once

#include <array>
#include <cstdint>
#include <string>

namespace taco {

// Self-contained SHA-256 (FIPS 180-4). Used for cache keys and checkpoint
// integrity; no crypto dependency is vendored, and the function is small.
std::array<std::uint8_t, 32> sha256(const void* data, std::size_t len);
std::string sha256_hex(const std::string& data);

}  // namespace taco
