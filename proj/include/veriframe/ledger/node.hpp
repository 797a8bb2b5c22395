#pragma once

// One member of the voting cluster, as a single-owner state machine.
//
// Round at height h, view v, leader L = leader_for(h, v):
//   1. L assembles a block from its pending pool, signs the header hash and
//      sends Propose to every validator.
//   2. A validator checks the block (link, tx_root, every tx known and not yet
//      committed), signs it and relays its signed copy to the other validators.
//   3. Once it holds copies from all n - 1 other members (or the round timer
//      fires) it decides: commit iff at least q(n) valid signatures agree on
//      its proposal's header hash and no valid signature names a different
//      header at this height. It then sends Confirm with its vote set to L.
//   4. L commits on the first Confirm that carries a valid quorum.

#include "veriframe/ledger/block.hpp"
#include "veriframe/ledger/config.hpp"
#include "veriframe/ledger/store.hpp"

#include <map>
#include <optional>
#include <set>
#include <vector>

namespace veriframe::ledger {

/// Fault injection for simulation. Honest nodes use `none`.
enum class Fault : std::uint8_t
{
  none,
  silent,            // never sends anything
  garbage_signature, // follows the protocol but its signatures do not verify
  equivocate,        // as leader, sends conflicting blocks to different validators
};

enum class RoundOutcome : std::uint8_t
{
  pending,
  committed,
  no_commit,
  aborted_conflict,
};

std::string_view to_string(RoundOutcome outcome);

struct Outgoing
{
  NodeId to = 0;
  ConsensusMessage message;
};

struct BlockLimits
{
  std::uint32_t max_txs = 256;
};

/// Builds the successor of `store`'s tip from `pending`, ordered by receipt
/// time then tx hash, skipping records already committed. Returns nullopt for
/// an empty pool. Throws LedgerError when `tip` is not the store's tip.
std::optional<Block> assemble_block(std::span<const Transaction> pending, const CommittedBlock& tip,
                                    NodeId leader_id, const BlockLimits& limits, std::uint64_t timestamp_us,
                                    const BlockStore& store);

class ConsensusNode
{
public:
  ConsensusNode(NodeId id, SigningKey key, BlockStore store, Fault fault = Fault::none);

  NodeId id() const noexcept { return id_; }
  Fault fault() const noexcept { return fault_; }
  bool honest() const noexcept { return fault_ == Fault::none; }
  const BlockStore& store() const noexcept { return store_; }
  const ClusterConfig& config() const noexcept { return store_.config(); }

  /// False for records already pending or committed.
  bool submit(const DigestRecord& record, std::uint64_t receipt_time_us);
  std::size_t pending() const noexcept { return pool_.size(); }

  /// Resets round state for the next height under `view`.
  std::vector<Outgoing> begin_round(std::uint64_t view, std::uint64_t now_us);
  std::vector<Outgoing> receive(NodeId from, const ConsensusMessage& msg);
  std::vector<Outgoing> round_timeout();

  RoundOutcome outcome() const noexcept { return outcome_; }
  std::uint64_t round_height() const noexcept { return height_; }
  std::uint64_t round_view() const noexcept { return view_; }
  NodeId round_leader() const noexcept { return leader_; }
  bool round_active() const noexcept { return active_; }
  std::optional<Hash32> proposal_hash() const;
  /// Valid signatures held for this node's proposal.
  std::size_t votes_collected() const;

private:
  Vote make_vote(const Hash32& header_hash) const;
  std::optional<std::string> check_proposal(const Block& block) const;
  std::vector<Outgoing> on_propose(NodeId from, const Propose& p);
  std::vector<Outgoing> on_relay(NodeId from, const SignedRelay& r);
  std::vector<Outgoing> on_confirm(NodeId from, const Confirm& c);
  std::vector<Outgoing> maybe_decide();
  std::vector<Outgoing> decide();
  void commit(std::vector<Vote> votes);
  void add_vote_if_valid(NodeId from, const Vote& v, const Hash32& header_hash);

  NodeId id_;
  SigningKey key_;
  BlockStore store_;
  Fault fault_;

  std::map<RecordKey, Transaction> pool_;

  bool active_          = false;
  std::uint64_t height_ = 0;
  std::uint64_t view_   = 0;
  NodeId leader_        = 0;
  std::optional<Block> proposal_;
  std::map<Hash32, std::map<NodeId, Vote>> votes_;
  std::set<NodeId> copies_from_;
  bool conflicting_proposal_ = false;
  RoundOutcome outcome_      = RoundOutcome::pending;
};

} // namespace veriframe::ledger
