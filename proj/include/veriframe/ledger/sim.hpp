#pragma once

// In-process cluster under a deterministic, seeded message scheduler.
//
// Messages travel as encoded bytes. Each delivery step picks a uniformly
// random in-flight message, so every seed yields a different interleaving.
// A fault script can drop messages by predicate or probability. The round
// timer fires when nothing is left in flight.

#include "veriframe/ledger/api.hpp"
#include "veriframe/ledger/node.hpp"

#include <functional>
#include <random>
#include <vector>

namespace veriframe::ledger {

struct Envelope
{
  NodeId from = 0;
  NodeId to   = 0;
  Bytes payload;
};

struct FaultScript
{
  /// Return true to drop the message.
  std::function<bool(NodeId from, NodeId to, const ConsensusMessage&)> drop;
  double drop_probability = 0.0;
};

class SimNetwork
{
public:
  explicit SimNetwork(std::uint64_t seed, FaultScript faults = {});

  void send(NodeId from, const Outgoing& out);
  void send_all(NodeId from, const std::vector<Outgoing>& outs);
  std::optional<Envelope> next();

  std::size_t in_flight() const noexcept { return queue_.size(); }
  std::uint64_t delivered() const noexcept { return delivered_; }
  std::uint64_t dropped() const noexcept { return dropped_; }

private:
  std::mt19937_64 rng_;
  FaultScript faults_;
  std::vector<Envelope> queue_;
  std::uint64_t delivered_ = 0;
  std::uint64_t dropped_   = 0;
};

struct NodeRoundReport
{
  NodeId id = 0;
  bool honest = true;
  RoundOutcome outcome = RoundOutcome::pending;
  std::size_t votes = 0;
};

struct CommitResult
{
  std::uint64_t height = 0;
  std::uint64_t view   = 0;
  NodeId leader        = 0;
  /// Header hash committed by at least one honest node.
  std::optional<Hash32> committed;
  std::vector<NodeRoundReport> nodes;
};

/// Runs one round at the nodes' next height to quiescence, then fires the
/// validators' round timers, then the leader's.
CommitResult run_consensus_round(std::vector<ConsensusNode>& nodes, SimNetwork& network, std::uint64_t view,
                                 std::uint64_t now_us);

class Cluster
{
public:
  /// `faults[i]` applies to members[i]; missing entries are honest. With a
  /// data directory each node persists to `<dir>/node-<id>.chain`.
  Cluster(const Bootstrap& bootstrap, std::vector<Fault> faults = {},
          std::optional<std::filesystem::path> data_dir = std::nullopt);

  const ClusterConfig& config() const noexcept { return config_; }
  std::vector<ConsensusNode>& nodes() noexcept { return nodes_; }
  const std::vector<ConsensusNode>& nodes() const noexcept { return nodes_; }
  ConsensusNode& node(NodeId id);

  /// Delivers the record to every node's pool.
  void submit(const DigestRecord& record);

  CommitResult run_round(SimNetwork& network, std::uint64_t view);

  /// Runs rounds until no honest node has pending records, moving to the next
  /// view after a failed round. Throws LedgerError when n consecutive views
  /// fail at one height.
  std::uint64_t commit_pending(SimNetwork& network);

  /// Logical clock in microseconds since epoch; advances one second per round.
  std::uint64_t now_us() const noexcept { return now_us_; }

private:
  ClusterConfig config_;
  std::vector<ConsensusNode> nodes_;
  std::uint64_t now_us_;
};

/// Submits straight into an in-process cluster.
class ClusterSink : public LedgerSink
{
public:
  explicit ClusterSink(Cluster& cluster)
    : cluster_(cluster)
  {}
  void submit(const DigestRecord& record) override { cluster_.submit(record); }

private:
  Cluster& cluster_;
};

} // namespace veriframe::ledger
