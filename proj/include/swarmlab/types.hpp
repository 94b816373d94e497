#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace swarmlab {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

// Error categories. The numeric values are part of the C API and the CLI
// exit-code mapping; do not reorder.
enum class Errc {
  kInvalidArgument = 1,
  kInfeasible = 2,
  kUnavailable = 3,
  kIo = 4,
  kCorrupt = 5,
  kPrecondition = 6,
};

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

// A 256-bit identifier. Chunk content addresses and peer ids share this
// space so XOR distance is defined between any two of them.
struct Hash256 {
  static constexpr std::size_t kSize = 32;
  std::array<std::uint8_t, kSize> bytes{};

  std::string hex() const;
  static Hash256 from_hex(std::string_view hex);
  static std::optional<Hash256> try_from_hex(std::string_view hex);

  auto operator<=>(const Hash256&) const = default;
  bool operator==(const Hash256&) const = default;
};

using ContentAddress = Hash256;
using PeerId = Hash256;

// SHA-256 of the raw bytes.
Hash256 sha256(ByteView data);

struct Hash256Hasher {
  std::size_t operator()(const Hash256& h) const noexcept {
    std::size_t v = 0;
    for (std::size_t i = 0; i < sizeof(std::size_t); ++i) v = (v << 8) | h.bytes[i];
    return v;
  }
};

// Chunk lookup used by retrieval paths. Returns nullopt when the chunk cannot
// be obtained.
using FetchFn = std::function<std::optional<Bytes>(const ContentAddress&)>;

}  // namespace swarmlab
