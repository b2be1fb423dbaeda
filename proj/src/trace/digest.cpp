#include "rldx/digest.hpp"

#include <bit>
#include <charconv>
#include <cstring>

#include "rldx/error.hpp"

namespace rldx {

std::uint64_t content_digest(std::span<const double> values) {
  std::uint64_t h = kFnvOffset;
  for (double v : values) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    for (int byte = 0; byte < 8; ++byte) {
      h ^= (bits >> (8 * byte)) & 0xffU;
      h *= kFnvPrime;
    }
  }
  return h;
}

std::string digest_to_hex(std::uint64_t d) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = kHex[d & 0xfU];
    d >>= 4;
  }
  return out;
}

std::uint64_t digest_from_hex(std::string_view hex) {
  if (hex.size() != 16) throw ParseError("digest", "expected 16 hex digits");
  std::uint64_t d = 0;
  const auto [ptr, ec] = std::from_chars(hex.data(), hex.data() + hex.size(), d, 16);
  if (ec != std::errc{} || ptr != hex.data() + hex.size()) {
    throw ParseError("digest", "invalid hex digits '" + std::string(hex) + "'");
  }
  return d;
}

}  // namespace rldx
