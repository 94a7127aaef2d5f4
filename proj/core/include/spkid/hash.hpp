#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace spkid {

// 64-bit FNV-1a. Used for configuration and corpus fingerprints that must be
// stable across runs and platforms.
constexpr std::uint64_t fnv1a64(std::string_view bytes,
                                std::uint64_t h = 0xcbf29ce484222325ull) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hash_to_hex(std::uint64_t h);

}  // namespace spkid
