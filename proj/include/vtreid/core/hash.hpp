#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace vtreid {

// 64-bit FNV-1a. Used for config hashes and artifact fingerprints; not a
// cryptographic digest.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

std::string hex64(std::uint64_t value);

}  // namespace vtreid
