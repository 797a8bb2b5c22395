#pragma once

#include "veriframe/bytes.hpp"

#include <openssl/evp.h>

#include <filesystem>
#include <random>
#include <string>

namespace testsupport {

/// Scratch directory removed on scope exit.
class TempDir
{
public:
  TempDir()
  {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("veriframe-test-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir()
  {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&)            = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
  std::filesystem::path path_;
};

// OpenSSL as an independent digest oracle.
inline veriframe::Bytes openssl_digest(const char* name, veriframe::ByteView data)
{
  veriframe::Bytes out(EVP_MAX_MD_SIZE);
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_get_digestbyname(name), nullptr);
  out.resize(len);
  return out;
}

inline veriframe::Bytes random_bytes(std::mt19937_64& rng, std::size_t n)
{
  veriframe::Bytes b(n);
  for (auto& x : b)
  {
    x = static_cast<std::uint8_t>(rng());
  }
  return b;
}

} // namespace testsupport
