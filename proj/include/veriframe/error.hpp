#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace veriframe {

class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error
{
public:
  using Error::Error;
};

class IoError : public Error
{
public:
  using Error::Error;
};

/// Malformed input; `offset()` is the byte position where decoding failed.
class ParseError : public Error
{
public:
  ParseError(const std::string& what, std::uint64_t offset)
    : Error(what + " at offset " + std::to_string(offset))
    , offset_(offset)
  {}

  std::uint64_t offset() const noexcept { return offset_; }

private:
  std::uint64_t offset_;
};

class ProtocolError : public Error
{
public:
  using Error::Error;
};

class LedgerError : public Error
{
public:
  using Error::Error;
};

} // namespace veriframe
