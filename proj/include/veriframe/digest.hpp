#pragma once

#include "veriframe/bytes.hpp"
#include "veriframe/frame_io.hpp"
#include "veriframe/hash.hpp"

#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace veriframe {

enum class DigestAlgorithm : std::uint8_t
{
  md5    = 1,
  sha256 = 2,
};

std::size_t digest_size(DigestAlgorithm algorithm);
DigestAlgorithm parse_algorithm(std::string_view text);
DigestAlgorithm algorithm_from_code(std::uint8_t code);
std::string to_string(DigestAlgorithm algorithm);

class WriteMode
{
public:
  enum class Kind : std::uint8_t
  {
    per_frame     = 0,
    batch_bytes   = 1,
    batch_digests = 2,
  };

  static WriteMode per_frame() { return {Kind::per_frame, 1}; }
  static WriteMode batch_bytes(std::uint64_t k) { return {Kind::batch_bytes, k}; }
  static WriteMode batch_digests(std::uint64_t k) { return {Kind::batch_digests, k}; }

  /// Wire form; rejects unknown codes, k = 0, and per-frame with k != 1.
  static WriteMode from_wire(std::uint8_t code, std::uint64_t k);
  /// Accepts "perframe", "batchbytes:<k>", "batchdigests:<k>".
  static WriteMode parse(std::string_view text);
  std::string to_string() const;

  Kind kind() const noexcept { return kind_; }
  std::uint8_t code() const noexcept { return static_cast<std::uint8_t>(kind_); }
  /// Frames per record.
  std::uint64_t batch_size() const noexcept { return k_; }

  bool operator==(const WriteMode&) const = default;

private:
  WriteMode(Kind kind, std::uint64_t k)
    : kind_(kind)
    , k_(k)
  {}

  Kind kind_;
  std::uint64_t k_;
};

/// Binds a range of selected frames of one stream to a digest. The frame
/// ids travel beside the digest; they are never part of the digest input.
struct DigestRecord
{
  StreamId stream_id{};
  WriteMode mode = WriteMode::per_frame();
  std::uint64_t frame_id_start = 0;
  std::uint64_t frame_id_end   = 0; // inclusive
  DigestAlgorithm algorithm    = DigestAlgorithm::md5;
  Bytes digest;

  bool covers(std::uint64_t frame_id) const noexcept
  {
    return frame_id_start <= frame_id && frame_id <= frame_id_end;
  }

  void validate() const;

  /// stream_id 16 | mode u8 | k u64 | start u64 | end u64 | algorithm u8 |
  /// digest_len u8 | digest
  Bytes encode() const;
  void encode_to(ByteWriter& w) const;
  static DigestRecord decode(ByteReader& r);

  bool operator==(const DigestRecord&) const = default;
};

/// Incremental MD5 / SHA-256 selected at runtime.
class Hasher
{
public:
  explicit Hasher(DigestAlgorithm algorithm);

  void update(ByteView data);
  Bytes finish();
  DigestAlgorithm algorithm() const noexcept { return algorithm_; }

private:
  DigestAlgorithm algorithm_;
  std::variant<hash::Md5, hash::Sha256> state_;
};

/// The canonical byte form of a frame: its raw pixel bytes, row-major and
/// channel-interleaved. No header and no frame index.
Bytes serialize_frame(const Frame& frame);

Bytes digest_bytes(DigestAlgorithm algorithm, ByteView data);

struct EmittedRecord
{
  DigestRecord record;
  std::uint64_t input_bytes = 0; // bytes fed to the record's digest
};

/// Groups consecutive selected frames into records as they arrive. The final
/// partial group is emitted by `flush()`.
class RecordBuilder
{
public:
  RecordBuilder(StreamId stream_id, DigestAlgorithm algorithm, WriteMode mode);

  std::optional<EmittedRecord> push(std::uint64_t frame_id, ByteView serialized);
  std::optional<EmittedRecord> flush();

  DigestAlgorithm algorithm() const noexcept { return algorithm_; }
  WriteMode mode() const noexcept { return mode_; }

private:
  EmittedRecord emit();

  StreamId stream_id_;
  DigestAlgorithm algorithm_;
  WriteMode mode_;
  Hasher batch_;
  std::uint64_t pending_      = 0;
  std::uint64_t first_id_     = 0;
  std::uint64_t last_id_      = 0;
  std::uint64_t input_bytes_  = 0;
};

/// `frames` must be in selection order (ascending index).
std::vector<DigestRecord> digest_selected(std::span<const Frame> frames, DigestAlgorithm algorithm,
                                          WriteMode mode, const StreamId& stream_id);

struct TimedDigest
{
  Bytes digest;
  std::chrono::nanoseconds serialize_duration{};
  std::chrono::nanoseconds hash_duration{};
};

TimedDigest timed_digest(const Frame& frame, DigestAlgorithm algorithm);

} // namespace veriframe
