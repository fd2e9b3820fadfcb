#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace evolvr {

// Lowercase hex SHA-256 of the given bytes.
std::string sha256_hex(std::string_view bytes);

// Cache/fixture key for a chat exchange.  The record separator keeps
// ("ab","c") and ("a","bc") from colliding.
std::string prompt_digest(std::string_view system_text, std::string_view user_text);

inline constexpr std::uint64_t kFnvOffset = 14695981039346656037ull;

// 64-bit FNV-1a, chainable via the seed parameter.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = kFnvOffset);

// Derives a child seed from a master seed and up to two string labels.
// Used everywhere a subsystem needs its own reproducible RNG stream.
std::uint64_t mix_seed(std::uint64_t master, std::string_view a, std::string_view b = {});

}  // namespace evolvr
