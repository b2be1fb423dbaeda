#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace rldx {

inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

/// FNV-1a 64 over the little-endian IEEE-754 binary64 bytes of each value, in
/// order. Producers in other languages reproduce it byte for byte.
std::uint64_t content_digest(std::span<const double> values);

std::string digest_to_hex(std::uint64_t d);
/// Throws ParseError("digest", ...) on malformed input.
std::uint64_t digest_from_hex(std::string_view hex);

}  // namespace rldx
