#pragma once

// SFV1: an uncompressed, bit-exact frame container.
//
//   magic "SFV1" | stream_id[16] | width u32 | height u32 | channels u8 |
//   fps_num u16 | fps_den u16 | frame_count u64            (41 bytes, LE)
//   frame_count x (width * height * channels) pixel bytes, no per-frame header

#include "veriframe/bytes.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace veriframe {

inline constexpr std::size_t kStreamHeaderSize = 41;

struct StreamHeader
{
  StreamId stream_id{};
  std::uint32_t width          = 1;
  std::uint32_t height         = 1;
  std::uint8_t channels        = 1;
  std::uint16_t fps_numerator  = 30;
  std::uint16_t fps_denominator = 1;
  std::uint64_t frame_count    = 0;

  std::uint64_t frame_size() const noexcept
  {
    return static_cast<std::uint64_t>(width) * height * channels;
  }

  /// Throws InvalidArgument when a field is out of range.
  void validate() const;

  Bytes encode() const;
  static StreamHeader decode(ByteView data, std::uint64_t base_offset = 0);

  bool operator==(const StreamHeader&) const = default;
};

struct Frame
{
  std::uint64_t index = 0;
  Bytes pixels;

  bool operator==(const Frame&) const = default;
};

class SelectionPolicy
{
public:
  enum class Kind : std::uint8_t
  {
    all,
    every_nth,
    keyframe_only,
  };

  static SelectionPolicy all() { return {Kind::all, 1}; }
  static SelectionPolicy every_nth(std::uint64_t n) { return {Kind::every_nth, n}; }
  /// Models I-frame selection as a fixed group-of-pictures period.
  static SelectionPolicy keyframe_only(std::uint64_t gop) { return {Kind::keyframe_only, gop}; }

  /// Accepts "all", "nth:<n>", "gop:<g>".
  static SelectionPolicy parse(std::string_view text);
  std::string to_string() const;

  Kind kind() const noexcept { return kind_; }
  std::uint64_t period() const noexcept { return period_; }
  bool selects(std::uint64_t index) const noexcept { return period_ != 0 && index % period_ == 0; }

  bool operator==(const SelectionPolicy&) const = default;

private:
  SelectionPolicy(Kind kind, std::uint64_t period)
    : kind_(kind)
    , period_(period)
  {}

  Kind kind_;
  std::uint64_t period_;
};

/// Writes header and frames as SFV1; returns bytes written.
std::uint64_t write_stream(const StreamHeader& header, std::span<const Frame> frames, std::ostream& sink);

/// Single-consumer reader yielding frames in index order.
class StreamReader
{
public:
  explicit StreamReader(std::istream& source);

  const StreamHeader& header() const noexcept { return header_; }

  /// Next frame, or nullopt after the last one. Throws ParseError on truncation.
  std::optional<Frame> next();

  /// Reads all remaining frames.
  std::vector<Frame> read_all();

private:
  std::istream* source_;
  StreamHeader header_;
  std::uint64_t next_index_ = 0;
};

StreamReader read_stream(std::istream& source);

std::vector<std::uint64_t> select_frames(const SelectionPolicy& policy, std::uint64_t frame_count);

struct SyntheticStream
{
  StreamHeader header;
  std::vector<Frame> frames;
};

/// Pixels of frame `index`: std::mt19937_64 seeded with
/// splitmix64(seed ^ splitmix64(index)), each 64-bit draw emitting 8 bytes LE.
Frame synthetic_frame(const StreamHeader& header, std::uint64_t seed, std::uint64_t index);

SyntheticStream generate_synthetic_stream(const StreamHeader& header, std::uint64_t seed);

/// Deterministic stream id derived from a seed, for synthetic inputs.
StreamId synthetic_stream_id(std::uint64_t seed);

} // namespace veriframe
