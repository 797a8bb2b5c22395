#include "veriframe/signing.hpp"

#include <openssl/evp.h>

namespace veriframe {

namespace {

struct CtxDeleter
{
  void operator()(EVP_MD_CTX* c) const { EVP_MD_CTX_free(c); }
};
struct KeyDeleter
{
  void operator()(EVP_PKEY* k) const { EVP_PKEY_free(k); }
};

EVP_PKEY* load_private(const SecretSeed& seed)
{
  EVP_PKEY* key = EVP_PKEY_new_raw_private_key(EVP_PKEY_ED25519, nullptr, seed.data(), seed.size());
  if (key == nullptr)
  {
    throw Error("failed to load Ed25519 key");
  }
  return key;
}

} // namespace

SigningKey::SigningKey(const SecretSeed& seed)
  : seed_(seed)
  , key_(load_private(seed))
{
  std::size_t len = public_.size();
  if (EVP_PKEY_get_raw_public_key(key_, public_.data(), &len) != 1 || len != public_.size())
  {
    EVP_PKEY_free(key_);
    throw Error("failed to derive Ed25519 public key");
  }
}

SigningKey::~SigningKey() { EVP_PKEY_free(key_); }

SigningKey::SigningKey(SigningKey&& other) noexcept
  : seed_(other.seed_)
  , public_(other.public_)
  , key_(std::exchange(other.key_, nullptr))
{}

SigningKey& SigningKey::operator=(SigningKey&& other) noexcept
{
  if (this != &other)
  {
    EVP_PKEY_free(key_);
    seed_   = other.seed_;
    public_ = other.public_;
    key_    = std::exchange(other.key_, nullptr);
  }
  return *this;
}

SigningKey::SigningKey(const SigningKey& other)
  : SigningKey(other.seed_)
{}

SigningKey& SigningKey::operator=(const SigningKey& other)
{
  if (this != &other)
  {
    *this = SigningKey(other.seed_);
  }
  return *this;
}

Signature SigningKey::sign(const Hash32& message) const
{
  std::unique_ptr<EVP_MD_CTX, CtxDeleter> ctx(EVP_MD_CTX_new());
  Signature sig(kSignatureSize);
  std::size_t len = sig.size();
  if (!ctx || EVP_DigestSignInit(ctx.get(), nullptr, nullptr, nullptr, key_) != 1 ||
      EVP_DigestSign(ctx.get(), sig.data(), &len, message.data(), message.size()) != 1)
  {
    throw Error("Ed25519 signing failed");
  }
  sig.resize(len);
  return sig;
}

bool verify_signature(const PublicKey& key, const Hash32& message, ByteView signature)
{
  if (signature.size() != kSignatureSize)
  {
    return false;
  }
  std::unique_ptr<EVP_PKEY, KeyDeleter> pkey(
      EVP_PKEY_new_raw_public_key(EVP_PKEY_ED25519, nullptr, key.data(), key.size()));
  if (!pkey)
  {
    return false;
  }
  std::unique_ptr<EVP_MD_CTX, CtxDeleter> ctx(EVP_MD_CTX_new());
  if (!ctx || EVP_DigestVerifyInit(ctx.get(), nullptr, nullptr, nullptr, pkey.get()) != 1)
  {
    return false;
  }
  return EVP_DigestVerify(ctx.get(), signature.data(), signature.size(), message.data(), message.size()) == 1;
}

} // namespace veriframe
