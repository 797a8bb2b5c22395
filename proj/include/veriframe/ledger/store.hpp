#pragma once

// Append-only block log with an in-memory frame index.
//
// Log file: sequence of entries `u32 length | CommittedBlock`, genesis first.
// The index is rebuilt by replay on open.

#include "veriframe/ledger/api.hpp"
#include "veriframe/ledger/block.hpp"
#include "veriframe/ledger/config.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace veriframe::ledger {

struct ChainViolation
{
  std::uint64_t height = 0;
  std::string reason;
};

/// Checks that `votes` holds at least a quorum of distinct member signatures
/// over `header_hash`, every one of them valid. Returns the failure reason.
std::optional<std::string> check_votes(const ClusterConfig& config, const Hash32& header_hash,
                                       std::span<const Vote> votes);

/// Structural checks of `next` against its predecessor: height, link,
/// tx_root, timestamp, leader membership, record validity.
std::optional<std::string> check_successor(const ClusterConfig& config, const Block& prev, const Block& next);

class BlockStore
{
public:
  static BlockStore in_memory(const ClusterConfig& config);
  /// Creates the log with a genesis entry when missing; otherwise replays it
  /// and throws LedgerError on the first violation.
  static BlockStore open(const std::filesystem::path& path, const ClusterConfig& config);

  std::uint64_t height() const noexcept { return blocks_.size() - 1; }
  const CommittedBlock& tip() const noexcept { return blocks_.back(); }
  Hash32 tip_hash() const { return tip_hash_; }
  const std::vector<CommittedBlock>& blocks() const noexcept { return blocks_; }
  const ClusterConfig& config() const noexcept { return config_; }

  /// Throws LedgerError when votes, height, or linkage are wrong. The block
  /// is flushed to the log before the index is updated.
  void append(const Block& block, std::vector<Vote> votes);

  std::vector<QueryHit> query(const StreamId& stream_id, std::uint64_t frame_id) const;
  bool contains(const DigestRecord& record) const;

  /// The persisted log bytes (identical to the file for file-backed stores).
  const Bytes& log_bytes() const noexcept { return log_; }
  const std::optional<std::filesystem::path>& path() const noexcept { return path_; }

private:
  struct IndexEntry
  {
    std::uint64_t start;
    std::uint64_t end;
    std::uint64_t height;
    std::uint32_t tx_index;
  };

  explicit BlockStore(const ClusterConfig& config);
  void push(CommittedBlock committed, bool persist);
  void index_block(const CommittedBlock& committed);

  ClusterConfig config_;
  std::vector<CommittedBlock> blocks_;
  Hash32 tip_hash_{};
  Bytes log_;
  std::optional<std::filesystem::path> path_;
  std::map<StreamId, std::vector<IndexEntry>> index_;
  std::set<RecordKey> keys_;
};

/// Walks genesis to tip re-verifying every entry; reports the first violation.
std::optional<ChainViolation> validate_chain(ByteView log, const ClusterConfig& config);
std::optional<ChainViolation> validate_chain(const std::filesystem::path& path, const ClusterConfig& config);
std::optional<ChainViolation> validate_chain(const BlockStore& store);

/// Read-only view over a store.
class StoreView : public LedgerView
{
public:
  explicit StoreView(const BlockStore& store)
    : store_(store)
  {}
  std::vector<QueryHit> query(const StreamId& stream_id, std::uint64_t frame_id) const override
  {
    return store_.query(stream_id, frame_id);
  }

private:
  const BlockStore& store_;
};

/// Loads a chain file for offline verification. With a config, the chain
/// is fully validated (signatures included); without one, only linkage and
/// tx roots are checked.
class SnapshotLedger : public LedgerView
{
public:
  SnapshotLedger(const std::filesystem::path& chain_file, const ClusterConfig* config);
  std::vector<QueryHit> query(const StreamId& stream_id, std::uint64_t frame_id) const override;
  std::uint64_t height() const noexcept { return blocks_.size() - 1; }

private:
  std::vector<CommittedBlock> blocks_;
};

Bytes read_file(const std::filesystem::path& path);

} // namespace veriframe::ledger
