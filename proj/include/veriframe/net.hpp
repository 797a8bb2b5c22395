#pragma once

// Socket transports for the capture/ingest channels and the ledger service.
//
// Ledger service framing (TCP, both directions): u32 LE length | opcode u8 | body
//
//   client requests                      responses
//   0x10 SubmitTx    DigestRecord        0x90 status u8 (0 accepted, 1 already known)
//   0x11 QueryDigest stream_id[16] u64   0x91 count u32, count x (height u64 |
//                                             timestamp_us u64 | tx_index u32 | DigestRecord)
//   0x12 ChainInfo   -                   0x92 height u64 | tip_hash[32] | members u16 | quorum u16
//   any failure                          0xFF utf-8 message
//
//   peer messages (no response)
//   0x20 Consensus   from u16 | consensus message
//   0x21 TxGossip    DigestRecord

#include "veriframe/ledger/api.hpp"
#include "veriframe/ledger/config.hpp"
#include "veriframe/transport.hpp"

#include <chrono>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>

namespace veriframe::net {

enum class Op : std::uint8_t
{
  submit_tx    = 0x10,
  query_digest = 0x11,
  chain_info   = 0x12,
  consensus    = 0x20,
  tx_gossip    = 0x21,
  error        = 0xFF,
};

inline constexpr std::uint8_t kResponseBit = 0x80;

struct Endpoint
{
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;

  /// "host:port"; throws InvalidArgument.
  static Endpoint parse(std::string_view text);
  std::string to_string() const;
};

class TcpDigestChannel : public transport::DigestChannel
{
public:
  /// Retries the connection until `connect_timeout` expires, then throws IoError.
  TcpDigestChannel(const Endpoint& to, std::chrono::milliseconds connect_timeout);
  ~TcpDigestChannel() override;

  void send(const wire::HashChannelMessage& msg) override;

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

class UdpFrameChannel : public transport::FrameChannel
{
public:
  /// `pace` is slept after every datagram so a local receiver is not overrun.
  UdpFrameChannel(const Endpoint& to, std::chrono::microseconds pace);
  ~UdpFrameChannel() override;

  void send(ByteView datagram) override;

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct IngestOptions
{
  Endpoint hash_listen;
  Endpoint frame_listen;
  /// How long to keep collecting fragments after end of stream.
  std::chrono::milliseconds window{2000};
  /// Give up if no capture agent connects in time (0 waits forever).
  std::chrono::milliseconds accept_timeout{0};
  /// Called once both sockets are bound, with the actual ports.
  std::function<void(std::uint16_t hash_port, std::uint16_t frame_port)> on_listening;
};

/// Serves one capture session on a single thread and returns after the
/// reconciliation window closes.
transport::IngestSummary run_ingest(const IngestOptions& options, transport::ArchiveSink& archive,
                                    ledger::LedgerSink& ledger);

struct ChainInfo
{
  std::uint64_t height = 0;
  Hash32 tip_hash{};
  std::uint16_t members = 0;
  std::uint16_t quorum  = 0;
};

/// Client of a ledger node. Every call opens a short connection.
class RemoteLedger : public ledger::LedgerSink, public ledger::LedgerView
{
public:
  explicit RemoteLedger(Endpoint node, std::chrono::milliseconds timeout = std::chrono::milliseconds(5000));

  void submit(const DigestRecord& record) override;
  /// Throws IoError when the node is unreachable.
  std::vector<ledger::QueryHit> query(const StreamId& stream_id, std::uint64_t frame_id) const override;
  ChainInfo chain_info() const;

  /// True when the last submit was already known to the node.
  bool last_was_duplicate() const noexcept { return duplicate_; }

private:
  Bytes call(Op op, ByteView body) const;

  Endpoint node_;
  std::chrono::milliseconds timeout_;
  bool duplicate_ = false;
};

/// One ledger member serving peers and clients on its configured address.
class LedgerServer
{
public:
  LedgerServer(ledger::ClusterConfig config, ledger::NodeId id, SigningKey key,
               std::optional<std::filesystem::path> chain_file);
  ~LedgerServer();

  /// Binds the listening socket; `run` serves until `stop`.
  void run();
  /// Safe from any thread.
  void stop();
  std::uint16_t port() const;
  /// Thread-safe snapshot of the committed height.
  std::uint64_t height() const;

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

} // namespace veriframe::net
