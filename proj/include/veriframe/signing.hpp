#pragma once

// Ed25519 signatures over 32-byte block header hashes (OpenSSL backend).

#include "veriframe/bytes.hpp"

#include <array>
#include <memory>

typedef struct evp_pkey_st EVP_PKEY;

namespace veriframe {

using PublicKey  = std::array<std::uint8_t, 32>;
using SecretSeed = std::array<std::uint8_t, 32>;
using Signature  = Bytes;

inline constexpr std::size_t kSignatureSize = 64;

class SigningKey
{
public:
  explicit SigningKey(const SecretSeed& seed);
  ~SigningKey();
  SigningKey(SigningKey&&) noexcept;
  SigningKey& operator=(SigningKey&&) noexcept;
  SigningKey(const SigningKey&);
  SigningKey& operator=(const SigningKey&);

  const PublicKey& public_key() const noexcept { return public_; }
  const SecretSeed& seed() const noexcept { return seed_; }
  Signature sign(const Hash32& message) const;

private:
  SecretSeed seed_;
  PublicKey public_{};
  EVP_PKEY* key_ = nullptr;
};

bool verify_signature(const PublicKey& key, const Hash32& message, ByteView signature);

} // namespace veriframe
