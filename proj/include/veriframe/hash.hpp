#pragma once

// Portable MD5 (RFC 1321) and SHA-256 (FIPS 180-4).
//
// These are plain scalar implementations with no ISA extensions, so relative
// MD5/SHA-256 cost is the same on every host, including small ARM boards
// without crypto extensions.

#include "veriframe/bytes.hpp"

#include <array>
#include <cstdint>

namespace veriframe::hash {

class Md5
{
public:
  static constexpr std::size_t kDigestSize = 16;
  using Digest = std::array<std::uint8_t, kDigestSize>;

  Md5();
  void update(ByteView data);
  Digest finish();

  static Digest of(ByteView data);

private:
  void compress(const std::uint8_t* block);

  std::array<std::uint32_t, 4> state_;
  std::array<std::uint8_t, 64> buffer_{};
  std::size_t buffered_ = 0;
  std::uint64_t length_ = 0;
};

class Sha256
{
public:
  static constexpr std::size_t kDigestSize = 32;
  using Digest = std::array<std::uint8_t, kDigestSize>;

  Sha256();
  void update(ByteView data);
  Digest finish();

  static Digest of(ByteView data);

private:
  void compress(const std::uint8_t* block);

  std::array<std::uint32_t, 8> state_;
  std::array<std::uint8_t, 64> buffer_{};
  std::size_t buffered_ = 0;
  std::uint64_t length_ = 0;
};

inline Hash32 sha256(ByteView data) { return Sha256::of(data); }

} // namespace veriframe::hash
