#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace harbour {

/// 64-bit FNV-1a. Used for content fingerprints (config hashes, CSV
/// determinism checks), not for security.
constexpr std::uint64_t fnv1a(std::string_view data,
                              std::uint64_t seed = 0xcbf29ce484222325ULL) {
  std::uint64_t h = seed;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string to_hex(std::uint64_t value);

/// Hash of a whole file's bytes. Throws IoError when unreadable.
std::uint64_t hash_file(const std::string& path);

}  // namespace harbour
