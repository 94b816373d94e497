#include "swarmlab/types.hpp"

#include <openssl/sha.h>

namespace swarmlab {

namespace {
constexpr char kHexDigits[] = "0123456789abcdef";

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}
}  // namespace

std::string Hash256::hex() const {
  std::string out(kSize * 2, '0');
  for (std::size_t i = 0; i < kSize; ++i) {
    out[2 * i] = kHexDigits[bytes[i] >> 4];
    out[2 * i + 1] = kHexDigits[bytes[i] & 0x0f];
  }
  return out;
}

std::optional<Hash256> Hash256::try_from_hex(std::string_view hex) {
  if (hex.size() != kSize * 2) return std::nullopt;
  Hash256 h;
  for (std::size_t i = 0; i < kSize; ++i) {
    const int hi = hex_value(hex[2 * i]);
    const int lo = hex_value(hex[2 * i + 1]);
    if (hi < 0 || lo < 0) return std::nullopt;
    h.bytes[i] = static_cast<std::uint8_t>((hi << 4) | lo);
  }
  return h;
}

Hash256 Hash256::from_hex(std::string_view hex) {
  auto h = try_from_hex(hex);
  if (!h) throw Error(Errc::kInvalidArgument, "malformed 256-bit hex id: '" + std::string(hex) + "'");
  return *h;
}

Hash256 sha256(ByteView data) {
  Hash256 h;
  SHA256(data.data(), data.size(), h.bytes.data());
  return h;
}

}  // namespace swarmlab
