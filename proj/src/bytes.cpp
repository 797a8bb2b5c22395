#include "veriframe/bytes.hpp"

namespace veriframe {

namespace {

int nibble(char c)
{
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

} // namespace

std::string to_hex(ByteView data)
{
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out(data.size() * 2, '0');
  for (std::size_t i = 0; i < data.size(); ++i)
  {
    out[2 * i]     = kHex[data[i] >> 4];
    out[2 * i + 1] = kHex[data[i] & 0x0F];
  }
  return out;
}

Bytes from_hex(std::string_view hex)
{
  if (hex.size() % 2 != 0)
  {
    throw InvalidArgument("hex string has odd length");
  }
  Bytes out(hex.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i)
  {
    const int hi = nibble(hex[2 * i]);
    const int lo = nibble(hex[2 * i + 1]);
    if (hi < 0 || lo < 0)
    {
      throw InvalidArgument("invalid hex digit in '" + std::string(hex) + "'");
    }
    out[i] = static_cast<std::uint8_t>((hi << 4) | lo);
  }
  return out;
}

StreamId stream_id_from_hex(std::string_view hex)
{
  const Bytes raw = from_hex(hex);
  if (raw.size() != 16)
  {
    throw InvalidArgument("stream id must be 32 hex digits");
  }
  StreamId id{};
  std::copy(raw.begin(), raw.end(), id.begin());
  return id;
}

} // namespace veriframe
