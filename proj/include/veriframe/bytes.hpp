#pragma once

#include "veriframe/error.hpp"

#include <array>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace veriframe {

using Bytes    = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;
using StreamId = std::array<std::uint8_t, 16>;
using Hash32   = std::array<std::uint8_t, 32>;

inline ByteView as_bytes(std::string_view s)
{
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

std::string to_hex(ByteView data);
Bytes from_hex(std::string_view hex);
StreamId stream_id_from_hex(std::string_view hex);

template <std::size_t N>
std::string to_hex(const std::array<std::uint8_t, N>& a)
{
  return to_hex(ByteView{a});
}

/// Little-endian encoder into a growable buffer.
class ByteWriter
{
public:
  ByteWriter() = default;
  explicit ByteWriter(std::size_t reserve) { buf_.reserve(reserve); }

  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u16(std::uint16_t v) { put_le(v, 2); }
  void u32(std::uint32_t v) { put_le(v, 4); }
  void u64(std::uint64_t v) { put_le(v, 8); }
  void bytes(ByteView v) { buf_.insert(buf_.end(), v.begin(), v.end()); }

  template <std::size_t N>
  void bytes(const std::array<std::uint8_t, N>& a)
  {
    buf_.insert(buf_.end(), a.begin(), a.end());
  }

  std::size_t size() const noexcept { return buf_.size(); }
  const Bytes& data() const& noexcept { return buf_; }
  Bytes take() && noexcept { return std::move(buf_); }

private:
  void put_le(std::uint64_t v, int n)
  {
    for (int i = 0; i < n; ++i)
    {
      buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
  }

  Bytes buf_;
};

/// Little-endian decoder over a borrowed buffer. Every short read throws
/// ParseError carrying the absolute offset (base + position).
class ByteReader
{
public:
  explicit ByteReader(ByteView data, std::uint64_t base_offset = 0)
    : data_(data)
    , base_(base_offset)
  {}

  std::uint8_t u8(std::string_view what = "u8") { return static_cast<std::uint8_t>(get_le(1, what)); }
  std::uint16_t u16(std::string_view what = "u16") { return static_cast<std::uint16_t>(get_le(2, what)); }
  std::uint32_t u32(std::string_view what = "u32") { return static_cast<std::uint32_t>(get_le(4, what)); }
  std::uint64_t u64(std::string_view what = "u64") { return get_le(8, what); }

  ByteView bytes(std::size_t n, std::string_view what = "bytes")
  {
    require(n, what);
    ByteView out = data_.subspan(pos_, n);
    pos_ += n;
    return out;
  }

  template <std::size_t N>
  std::array<std::uint8_t, N> array(std::string_view what = "bytes")
  {
    std::array<std::uint8_t, N> out{};
    ByteView v = bytes(N, what);
    std::memcpy(out.data(), v.data(), N);
    return out;
  }

  std::size_t position() const noexcept { return pos_; }
  std::uint64_t offset() const noexcept { return base_ + pos_; }
  std::size_t remaining() const noexcept { return data_.size() - pos_; }
  bool empty() const noexcept { return pos_ == data_.size(); }

  void expect_end(std::string_view what) const
  {
    if (!empty())
    {
      throw ParseError("trailing bytes after " + std::string(what), offset());
    }
  }

private:
  void require(std::size_t n, std::string_view what) const
  {
    if (remaining() < n)
    {
      throw ParseError("truncated " + std::string(what), offset());
    }
  }

  std::uint64_t get_le(int n, std::string_view what)
  {
    require(static_cast<std::size_t>(n), what);
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i)
    {
      v |= static_cast<std::uint64_t>(data_[pos_ + i]) << (8 * i);
    }
    pos_ += static_cast<std::size_t>(n);
    return v;
  }

  ByteView data_;
  std::uint64_t base_;
  std::size_t pos_ = 0;
};

} // namespace veriframe
