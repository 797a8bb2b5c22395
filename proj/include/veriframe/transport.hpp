#pragma once

// Capture agent and base-station ingest.
//
// The agent streams every frame on a best-effort fragment channel and the
// digest records of the selected frames on a reliable, ordered channel.
// Ingest reassembles frames, archives them, and forwards to the ledger only
// the records whose whole frame range was reassembled.

#include "veriframe/digest.hpp"
#include "veriframe/frame_io.hpp"
#include "veriframe/ledger/api.hpp"
#include "veriframe/wire.hpp"

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace veriframe::transport {

class DigestChannel
{
public:
  virtual ~DigestChannel() = default;
  /// Delivers or throws IoError; never drops silently.
  virtual void send(const wire::HashChannelMessage& msg) = 0;
};

class FrameChannel
{
public:
  virtual ~FrameChannel() = default;
  /// Best effort. May throw IoError; the agent logs and keeps streaming.
  virtual void send(ByteView datagram) = 0;
};

/// Seeded per-datagram drop decisions. Each call consumes one 64-bit draw
/// of std::mt19937_64(seed); the datagram is dropped iff
/// (draw >> 11) * 2^-53 < p.
class LossModel
{
public:
  LossModel(double drop_probability, std::uint64_t seed);
  bool drop();
  double probability() const noexcept { return p_; }

private:
  std::mt19937_64 engine_;
  double p_;
};

struct CaptureConfig
{
  SelectionPolicy policy    = SelectionPolicy::all();
  DigestAlgorithm algorithm = DigestAlgorithm::md5;
  WriteMode mode            = WriteMode::per_frame();
  double drop_probability   = 0.0;
  std::uint64_t seed        = 0;
};

struct CaptureSummary
{
  std::uint64_t frames_sent       = 0;
  std::uint64_t datagrams_sent    = 0;
  std::uint64_t datagrams_dropped = 0;
  std::uint64_t records_sent      = 0;
  std::chrono::nanoseconds wall_time{};
  bool aborted = false;
  std::string error;
};

using FrameSource = std::function<std::optional<Frame>()>;

CaptureSummary run_capture_agent(const StreamHeader& header, const FrameSource& next_frame,
                                 const CaptureConfig& config, DigestChannel& digests, FrameChannel& frames);

CaptureSummary run_capture_agent(StreamReader& source, const CaptureConfig& config, DigestChannel& digests,
                                 FrameChannel& frames);

/// Destination for reassembled frames.
class ArchiveSink
{
public:
  virtual ~ArchiveSink() = default;
  virtual void begin(const StreamHeader& header) = 0;
  virtual void write_frame(std::uint64_t frame_id, ByteView pixels) = 0;
  /// Called once; missing frames are zero-filled placeholders listed in `gaps`.
  virtual void finish(const std::vector<std::uint64_t>& gaps) = 0;
};

/// SFV1 file plus a sidecar gap list.
class FileArchive : public ArchiveSink
{
public:
  FileArchive(std::filesystem::path archive, std::filesystem::path gaps);
  void begin(const StreamHeader& header) override;
  void write_frame(std::uint64_t frame_id, ByteView pixels) override;
  void finish(const std::vector<std::uint64_t>& gaps) override;

private:
  std::filesystem::path archive_path_;
  std::filesystem::path gaps_path_;
  StreamHeader header_;
  std::fstream file_;
};

class MemoryArchive : public ArchiveSink
{
public:
  void begin(const StreamHeader& header) override;
  void write_frame(std::uint64_t frame_id, ByteView pixels) override;
  void finish(const std::vector<std::uint64_t>& gaps) override;

  /// SFV1 bytes with zero-filled gaps.
  Bytes sfv_bytes() const;

  std::optional<StreamHeader> header;
  std::map<std::uint64_t, Bytes> frames;
  std::vector<std::uint64_t> gaps;
  std::uint64_t write_calls = 0;
};

/// Counts bytes and discards them.
class NullArchive : public ArchiveSink
{
public:
  void begin(const StreamHeader&) override {}
  void write_frame(std::uint64_t, ByteView pixels) override { bytes += pixels.size(); }
  void finish(const std::vector<std::uint64_t>&) override {}
  std::uint64_t bytes = 0;
};

/// Gap sidecar: "# veriframe gaps" header line, then one decimal frame id per line.
void write_gap_list(const std::filesystem::path& path, const std::vector<std::uint64_t>& gaps);
std::vector<std::uint64_t> read_gap_list(const std::filesystem::path& path);

struct DiscardedRecord
{
  DigestRecord record;
  std::vector<std::uint64_t> missing;
  std::string reason;
};

struct IngestSummary
{
  std::uint64_t frames_received     = 0;
  std::uint64_t records_received    = 0;
  std::uint64_t records_committed   = 0;
  std::uint64_t records_discarded   = 0;
  std::uint64_t datagrams_received  = 0;
  std::uint64_t datagrams_malformed = 0;
  std::vector<std::uint64_t> gaps;
  std::vector<DiscardedRecord> discarded;
};

/// Single-owner reconciliation state for one stream.
class IngestState
{
public:
  IngestState(ArchiveSink& archive, ledger::LedgerSink& ledger);

  /// Throws ProtocolError when a record or end-of-stream arrives out of order.
  void on_hash_message(const wire::HashChannelMessage& msg);
  void on_hash_payload(ByteView payload);
  /// Malformed or inconsistent datagrams are counted and dropped.
  void on_datagram(ByteView raw);

  bool announced() const noexcept { return header_.has_value(); }
  bool end_of_stream_seen() const noexcept { return ended_; }
  const std::vector<DigestRecord>& records() const noexcept { return records_; }
  const std::set<std::uint64_t>& reassembled() const noexcept { return complete_; }

  /// Closes the window: finalizes the archive and forwards fully covered records.
  IngestSummary close_window();

private:
  struct Partial
  {
    std::vector<bool> have;
    std::uint32_t count = 0;
    Bytes pixels;
  };

  void accept_fragment(const wire::FrameDatagram& d);
  bool fragment_consistent(const wire::FrameDatagram& d) const;

  ArchiveSink& archive_;
  ledger::LedgerSink& ledger_;
  std::optional<StreamHeader> header_;
  bool ended_  = false;
  bool closed_ = false;
  std::vector<DigestRecord> records_;
  std::map<std::uint64_t, Partial> partial_;
  std::set<std::uint64_t> complete_;
  std::vector<wire::FrameDatagram> early_;
  IngestSummary summary_;
};

/// In-process channels feeding an IngestState through the wire encodings.
class LoopbackDigestChannel : public DigestChannel
{
public:
  explicit LoopbackDigestChannel(IngestState& ingest)
    : ingest_(ingest)
  {}
  void send(const wire::HashChannelMessage& msg) override;

private:
  IngestState& ingest_;
};

class LoopbackFrameChannel : public FrameChannel
{
public:
  explicit LoopbackFrameChannel(IngestState& ingest)
    : ingest_(ingest)
  {}
  void send(ByteView datagram) override { ingest_.on_datagram(datagram); }

private:
  IngestState& ingest_;
};

} // namespace veriframe::transport
