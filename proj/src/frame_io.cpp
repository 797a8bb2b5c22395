#include "veriframe/frame_io.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <random>

namespace veriframe {

namespace {

std::uint64_t splitmix64(std::uint64_t x)
{
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t parse_period(std::string_view text, std::string_view full)
{
  std::uint64_t value = 0;
  auto [ptr, ec]      = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size())
  {
    throw InvalidArgument("invalid selection policy '" + std::string(full) + "'");
  }
  return value;
}

} // namespace

void StreamHeader::validate() const
{
  if (width < 1 || height < 1)
  {
    throw InvalidArgument("stream width and height must be >= 1");
  }
  if (channels != 1 && channels != 3)
  {
    throw InvalidArgument("stream channels must be 1 or 3, got " + std::to_string(channels));
  }
  if (fps_denominator < 1)
  {
    throw InvalidArgument("fps denominator must be >= 1");
  }
}

Bytes StreamHeader::encode() const
{
  ByteWriter w(kStreamHeaderSize);
  w.bytes(as_bytes("SFV1"));
  w.bytes(stream_id);
  w.u32(width);
  w.u32(height);
  w.u8(channels);
  w.u16(fps_numerator);
  w.u16(fps_denominator);
  w.u64(frame_count);
  return std::move(w).take();
}

StreamHeader StreamHeader::decode(ByteView data, std::uint64_t base_offset)
{
  if (data.size() < kStreamHeaderSize)
  {
    throw ParseError("truncated header (" + std::to_string(data.size()) + " of 41 bytes)",
                     base_offset + data.size());
  }
  ByteReader r(data.first(kStreamHeaderSize), base_offset);
  const ByteView magic = r.bytes(4, "magic");
  if (!std::equal(magic.begin(), magic.end(), as_bytes("SFV1").begin()))
  {
    throw ParseError("bad magic, expected SFV1", base_offset);
  }
  StreamHeader h;
  h.stream_id = r.array<16>("stream id");
  const std::uint64_t dims_offset = r.offset();
  h.width                         = r.u32();
  h.height                        = r.u32();
  h.channels                      = r.u8();
  h.fps_numerator                 = r.u16();
  h.fps_denominator               = r.u16();
  h.frame_count                   = r.u64();
  try
  {
    h.validate();
  }
  catch (const InvalidArgument& e)
  {
    throw ParseError(std::string("invalid header: ") + e.what(), dims_offset);
  }
  return h;
}

SelectionPolicy SelectionPolicy::parse(std::string_view text)
{
  if (text == "all")
  {
    return all();
  }
  const auto colon = text.find(':');
  if (colon == std::string_view::npos)
  {
    throw InvalidArgument("invalid selection policy '" + std::string(text) + "'");
  }
  const std::string_view name = text.substr(0, colon);
  const std::uint64_t period  = parse_period(text.substr(colon + 1), text);
  if (period == 0)
  {
    throw InvalidArgument("selection period must be >= 1");
  }
  if (name == "nth")
  {
    return every_nth(period);
  }
  if (name == "gop")
  {
    return keyframe_only(period);
  }
  throw InvalidArgument("invalid selection policy '" + std::string(text) + "'");
}

std::string SelectionPolicy::to_string() const
{
  switch (kind_)
  {
  case Kind::all:
    return "all";
  case Kind::every_nth:
    return "nth:" + std::to_string(period_);
  case Kind::keyframe_only:
    return "gop:" + std::to_string(period_);
  }
  return "?";
}

std::uint64_t write_stream(const StreamHeader& header, std::span<const Frame> frames, std::ostream& sink)
{
  header.validate();
  if (frames.size() != header.frame_count)
  {
    throw InvalidArgument("header declares " + std::to_string(header.frame_count) + " frames but " +
                          std::to_string(frames.size()) + " were given");
  }
  const std::uint64_t frame_size = header.frame_size();
  for (std::size_t i = 0; i < frames.size(); ++i)
  {
    if (frames[i].index != i)
    {
      throw InvalidArgument("frame " + std::to_string(i) + " has non-contiguous index " +
                            std::to_string(frames[i].index));
    }
    if (frames[i].pixels.size() != frame_size)
    {
      throw InvalidArgument("frame " + std::to_string(i) + " has " + std::to_string(frames[i].pixels.size()) +
                            " pixel bytes, expected " + std::to_string(frame_size));
    }
  }

  const Bytes head = header.encode();
  sink.write(reinterpret_cast<const char*>(head.data()), static_cast<std::streamsize>(head.size()));
  for (const Frame& f : frames)
  {
    sink.write(reinterpret_cast<const char*>(f.pixels.data()), static_cast<std::streamsize>(f.pixels.size()));
  }
  if (!sink)
  {
    throw IoError("failed writing SFV1 stream");
  }
  return kStreamHeaderSize + header.frame_count * frame_size;
}

StreamReader::StreamReader(std::istream& source)
  : source_(&source)
{
  std::array<std::uint8_t, kStreamHeaderSize> raw{};
  source.read(reinterpret_cast<char*>(raw.data()), raw.size());
  header_ = StreamHeader::decode(ByteView{raw.data(), static_cast<std::size_t>(source.gcount())});
}

std::optional<Frame> StreamReader::next()
{
  if (next_index_ >= header_.frame_count)
  {
    return std::nullopt;
  }
  const std::uint64_t size = header_.frame_size();
  Frame f;
  f.index = next_index_;
  f.pixels.resize(size);
  source_->read(reinterpret_cast<char*>(f.pixels.data()), static_cast<std::streamsize>(size));
  const auto got = static_cast<std::uint64_t>(source_->gcount());
  if (got != size)
  {
    throw ParseError("truncated frame " + std::to_string(next_index_),
                     kStreamHeaderSize + next_index_ * size + got);
  }
  ++next_index_;
  return f;
}

std::vector<Frame> StreamReader::read_all()
{
  std::vector<Frame> frames;
  frames.reserve(header_.frame_count - next_index_);
  while (auto f = next())
  {
    frames.push_back(std::move(*f));
  }
  return frames;
}

StreamReader read_stream(std::istream& source) { return StreamReader(source); }

std::vector<std::uint64_t> select_frames(const SelectionPolicy& policy, std::uint64_t frame_count)
{
  if (policy.period() == 0)
  {
    throw InvalidArgument("selection period must be >= 1");
  }
  std::vector<std::uint64_t> out;
  out.reserve((frame_count + policy.period() - 1) / policy.period());
  for (std::uint64_t i = 0; i < frame_count; i += policy.period())
  {
    out.push_back(i);
  }
  return out;
}

Frame synthetic_frame(const StreamHeader& header, std::uint64_t seed, std::uint64_t index)
{
  Frame f;
  f.index = index;
  f.pixels.resize(header.frame_size());

  std::mt19937_64 engine(splitmix64(seed ^ splitmix64(index)));
  std::size_t pos = 0;
  while (pos < f.pixels.size())
  {
    std::uint64_t word = engine();
    for (int b = 0; b < 8 && pos < f.pixels.size(); ++b, ++pos)
    {
      f.pixels[pos] = static_cast<std::uint8_t>(word >> (8 * b));
    }
  }
  return f;
}

SyntheticStream generate_synthetic_stream(const StreamHeader& header, std::uint64_t seed)
{
  header.validate();
  SyntheticStream s{header, {}};
  s.frames.reserve(header.frame_count);
  for (std::uint64_t i = 0; i < header.frame_count; ++i)
  {
    s.frames.push_back(synthetic_frame(header, seed, i));
  }
  return s;
}

StreamId synthetic_stream_id(std::uint64_t seed)
{
  StreamId id{};
  const std::uint64_t a = splitmix64(seed);
  const std::uint64_t b = splitmix64(a);
  for (int i = 0; i < 8; ++i)
  {
    id[i]     = static_cast<std::uint8_t>(a >> (8 * i));
    id[8 + i] = static_cast<std::uint8_t>(b >> (8 * i));
  }
  return id;
}

} // namespace veriframe
