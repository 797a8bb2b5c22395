#include "veriframe/wire.hpp"

#include <cstring>

namespace veriframe::wire {

Bytes encode_message(const HashChannelMessage& msg)
{
  ByteWriter w;
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, StreamAnnounce>)
        {
          w.u8(static_cast<std::uint8_t>(MessageType::stream_announce));
          w.bytes(m.header.encode());
        }
        else if constexpr (std::is_same_v<T, RecordMessage>)
        {
          w.u8(static_cast<std::uint8_t>(MessageType::digest_record));
          m.record.encode_to(w);
        }
        else
        {
          w.u8(static_cast<std::uint8_t>(MessageType::end_of_stream));
          w.bytes(m.stream_id);
        }
      },
      msg);
  return std::move(w).take();
}

HashChannelMessage decode_message(ByteView payload)
{
  try
  {
    ByteReader r(payload);
    const std::uint8_t type = r.u8("message type");
    switch (static_cast<MessageType>(type))
    {
    case MessageType::stream_announce: {
      StreamAnnounce m{StreamHeader::decode(r.bytes(kStreamHeaderSize, "stream header"), 1)};
      r.expect_end("stream announce");
      return m;
    }
    case MessageType::digest_record: {
      RecordMessage m{DigestRecord::decode(r)};
      r.expect_end("digest record");
      return m;
    }
    case MessageType::end_of_stream: {
      EndOfStream m{r.array<16>("stream id")};
      r.expect_end("end of stream");
      return m;
    }
    }
    throw ProtocolError("unknown hash channel message type " + std::to_string(type));
  }
  catch (const ParseError& e)
  {
    throw ProtocolError(std::string("malformed hash channel message: ") + e.what());
  }
}

Bytes frame_payload(ByteView payload)
{
  ByteWriter w(4 + payload.size());
  w.u32(static_cast<std::uint32_t>(payload.size()));
  w.bytes(payload);
  return std::move(w).take();
}

void FrameDecoder::feed(ByteView data)
{
  if (pos_ > 0 && pos_ == buf_.size())
  {
    buf_.clear();
    pos_ = 0;
  }
  buf_.insert(buf_.end(), data.begin(), data.end());
}

std::optional<Bytes> FrameDecoder::next()
{
  if (buffered() < 4)
  {
    return std::nullopt;
  }
  ByteReader r(ByteView{buf_}.subspan(pos_, 4));
  const std::uint32_t len = r.u32();
  if (len > kMaxMessageSize)
  {
    throw ProtocolError("message length " + std::to_string(len) + " exceeds limit");
  }
  if (buffered() < 4 + static_cast<std::size_t>(len))
  {
    return std::nullopt;
  }
  Bytes out(buf_.begin() + static_cast<std::ptrdiff_t>(pos_ + 4),
            buf_.begin() + static_cast<std::ptrdiff_t>(pos_ + 4 + len));
  pos_ += 4 + len;
  if (pos_ > 65536 && pos_ * 2 > buf_.size())
  {
    buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(pos_));
    pos_ = 0;
  }
  return out;
}

Bytes FrameDatagram::encode() const
{
  ByteWriter w(kDatagramHeaderSize + payload.size());
  w.bytes(stream_id);
  w.u64(frame_id);
  w.u16(frag_index);
  w.u16(frag_count);
  w.u16(static_cast<std::uint16_t>(payload.size()));
  w.bytes(payload);
  return std::move(w).take();
}

FrameDatagram FrameDatagram::decode(ByteView data)
{
  ByteReader r(data);
  FrameDatagram d;
  d.stream_id              = r.array<16>("stream id");
  d.frame_id               = r.u64("frame id");
  d.frag_index             = r.u16("fragment index");
  d.frag_count             = r.u16("fragment count");
  const std::uint16_t plen = r.u16("payload length");
  if (d.frag_count == 0 || d.frag_index >= d.frag_count)
  {
    throw ParseError("fragment index out of range", 24);
  }
  if (plen > kMaxFragmentPayload)
  {
    throw ParseError("fragment payload exceeds 1400 bytes", 28);
  }
  const ByteView payload = r.bytes(plen, "fragment payload");
  d.payload.assign(payload.begin(), payload.end());
  r.expect_end("datagram");
  return d;
}

std::uint16_t fragment_count(std::uint64_t frame_size)
{
  const std::uint64_t count = frame_size == 0 ? 1 : (frame_size + kMaxFragmentPayload - 1) / kMaxFragmentPayload;
  if (count > 0xFFFF)
  {
    throw InvalidArgument("frame of " + std::to_string(frame_size) + " bytes needs more than 65535 fragments");
  }
  return static_cast<std::uint16_t>(count);
}

std::vector<FrameDatagram> fragment_frame(const StreamId& stream_id, std::uint64_t frame_id, ByteView pixels)
{
  const std::uint16_t count = fragment_count(pixels.size());
  std::vector<FrameDatagram> out;
  out.reserve(count);
  for (std::uint16_t i = 0; i < count; ++i)
  {
    const std::size_t begin = static_cast<std::size_t>(i) * kMaxFragmentPayload;
    const std::size_t len   = std::min(kMaxFragmentPayload, pixels.size() - begin);
    FrameDatagram d;
    d.stream_id  = stream_id;
    d.frame_id   = frame_id;
    d.frag_index = i;
    d.frag_count = count;
    d.payload.assign(pixels.begin() + static_cast<std::ptrdiff_t>(begin),
                     pixels.begin() + static_cast<std::ptrdiff_t>(begin + len));
    out.push_back(std::move(d));
  }
  return out;
}

} // namespace veriframe::wire
