#pragma once

// Block and consensus message encodings (little-endian).
//
// Block:      height u64 | prev_hash 32 | tx_root 32 | timestamp_us u64 |
//             leader_id u16 | tx_count u32 | tx_count x DigestRecord
// Committed:  Block | vote_count u16 | vote_count x (validator_id u16 | sig_len u16 | sig)
//
// prev_hash links to SHA-256 of the predecessor's Block encoding (votes
// excluded). Votes sign SHA-256 of the 82-byte header.

#include "veriframe/digest.hpp"
#include "veriframe/signing.hpp"

#include <compare>
#include <cstdint>
#include <span>
#include <tuple>
#include <variant>
#include <vector>

namespace veriframe::ledger {

using NodeId = std::uint16_t;

inline constexpr std::size_t kBlockHeaderSize = 82;

Hash32 tx_hash(const DigestRecord& record);
Hash32 compute_tx_root(std::span<const DigestRecord> txs);

/// Identity used for duplicate rejection: same stream, range, algorithm and mode.
struct RecordKey
{
  StreamId stream_id{};
  std::uint64_t start = 0;
  std::uint64_t end   = 0;
  std::uint8_t algorithm = 0;
  std::uint8_t mode      = 0;
  std::uint64_t k        = 0;

  static RecordKey of(const DigestRecord& r);
  auto operator<=>(const RecordKey&) const = default;
};

struct Transaction
{
  DigestRecord record;
  std::uint64_t receipt_time_us = 0;
  Hash32 hash{};

  static Transaction make(DigestRecord record, std::uint64_t receipt_time_us);
};

struct BlockHeader
{
  std::uint64_t height       = 0;
  Hash32 prev_hash{};
  Hash32 tx_root{};
  std::uint64_t timestamp_us = 0;
  NodeId leader_id           = 0;

  void encode_to(ByteWriter& w) const;
  static BlockHeader decode(ByteReader& r);
  /// The value validators sign.
  Hash32 hash() const;

  bool operator==(const BlockHeader&) const = default;
};

struct Vote
{
  NodeId validator_id = 0;
  Hash32 header_hash{};
  Signature signature;

  bool verify(const PublicKey& key) const { return verify_signature(key, header_hash, signature); }
  /// validator_id u16 | sig_len u16 | sig. The header hash is implied by context.
  void encode_to(ByteWriter& w) const;
  static Vote decode(ByteReader& r, const Hash32& header_hash);

  bool operator==(const Vote&) const = default;
};

struct Block
{
  BlockHeader header;
  std::vector<DigestRecord> txs;

  Bytes encode() const;
  void encode_to(ByteWriter& w) const;
  static Block decode(ByteReader& r);

  /// SHA-256 of `encode()`; the successor's prev_hash.
  Hash32 hash() const;
  Hash32 header_hash() const { return header.hash(); }

  bool operator==(const Block&) const = default;
};

struct CommittedBlock
{
  Block block;
  std::vector<Vote> votes;

  Bytes encode() const;
  /// Exact: the input must hold one committed block and nothing else.
  static CommittedBlock decode(ByteView data, std::uint64_t base_offset = 0);

  bool operator==(const CommittedBlock&) const = default;
};

struct Propose
{
  std::uint64_t view = 0;
  Block block;
  Vote leader_vote;
  bool operator==(const Propose&) const = default;
};

struct SignedRelay
{
  std::uint64_t height = 0;
  std::uint64_t view   = 0;
  Hash32 header_hash{};
  Vote vote;
  bool operator==(const SignedRelay&) const = default;
};

struct Confirm
{
  std::uint64_t height = 0;
  Hash32 header_hash{};
  std::vector<Vote> votes;
  bool operator==(const Confirm&) const = default;
};

using ConsensusMessage = std::variant<Propose, SignedRelay, Confirm>;

/// type u8 (1 Propose, 2 SignedRelay, 3 Confirm) | body
Bytes encode_consensus(const ConsensusMessage& msg);
ConsensusMessage decode_consensus(ByteView data);

std::string_view message_name(const ConsensusMessage& msg);

} // namespace veriframe::ledger
