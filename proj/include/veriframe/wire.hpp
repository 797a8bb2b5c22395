#pragma once

// Capture-side wire formats.
//
// Reliable (digest) channel: u32 LE payload length, then payload.
//   StreamAnnounce  0x02 | SFV1 header (41 bytes)
//   DigestRecord    0x01 | DigestRecord encoding
//   EndOfStream     0x03 | stream_id[16]
//
// Lossy (frame) channel, one fragment per datagram:
//   stream_id[16] | frame_id u64 | frag_index u16 | frag_count u16 |
//   payload_len u16 | payload (<= 1400 bytes)

#include "veriframe/digest.hpp"
#include "veriframe/frame_io.hpp"

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

namespace veriframe::wire {

inline constexpr std::size_t kMaxFragmentPayload = 1400;
inline constexpr std::size_t kDatagramHeaderSize = 30;
inline constexpr std::uint32_t kMaxMessageSize   = 1u << 20;

enum class MessageType : std::uint8_t
{
  digest_record   = 1,
  stream_announce = 2,
  end_of_stream   = 3,
};

struct StreamAnnounce
{
  StreamHeader header;
  bool operator==(const StreamAnnounce&) const = default;
};

struct RecordMessage
{
  DigestRecord record;
  bool operator==(const RecordMessage&) const = default;
};

struct EndOfStream
{
  StreamId stream_id{};
  bool operator==(const EndOfStream&) const = default;
};

using HashChannelMessage = std::variant<StreamAnnounce, RecordMessage, EndOfStream>;

/// Payload without the length prefix.
Bytes encode_message(const HashChannelMessage& msg);
/// Throws ProtocolError on any malformed payload.
HashChannelMessage decode_message(ByteView payload);

/// Prepends the u32 length.
Bytes frame_payload(ByteView payload);

/// Incremental splitter for a byte stream of length-prefixed payloads.
class FrameDecoder
{
public:
  void feed(ByteView data);
  /// Next complete payload, if buffered. Throws ProtocolError on oversize length.
  std::optional<Bytes> next();
  std::size_t buffered() const noexcept { return buf_.size() - pos_; }

private:
  Bytes buf_;
  std::size_t pos_ = 0;
};

struct FrameDatagram
{
  StreamId stream_id{};
  std::uint64_t frame_id   = 0;
  std::uint16_t frag_index = 0;
  std::uint16_t frag_count = 1;
  Bytes payload;

  Bytes encode() const;
  /// Throws ParseError on malformed input.
  static FrameDatagram decode(ByteView data);

  bool operator==(const FrameDatagram&) const = default;
};

/// Splits a frame's pixel bytes into fragments of at most 1400 bytes. A
/// zero-length frame yields a single empty fragment.
std::vector<FrameDatagram> fragment_frame(const StreamId& stream_id, std::uint64_t frame_id, ByteView pixels);

std::uint16_t fragment_count(std::uint64_t frame_size);

} // namespace veriframe::wire
