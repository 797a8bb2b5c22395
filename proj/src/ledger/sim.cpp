#include "veriframe/ledger/sim.hpp"

#include <algorithm>

namespace veriframe::ledger {

SimNetwork::SimNetwork(std::uint64_t seed, FaultScript faults)
  : rng_(seed)
  , faults_(std::move(faults))
{}

void SimNetwork::send(NodeId from, const Outgoing& out)
{
  if (faults_.drop && faults_.drop(from, out.to, out.message))
  {
    ++dropped_;
    return;
  }
  if (faults_.drop_probability > 0.0)
  {
    const double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
    if (u < faults_.drop_probability)
    {
      ++dropped_;
      return;
    }
  }
  queue_.push_back({from, out.to, encode_consensus(out.message)});
}

void SimNetwork::send_all(NodeId from, const std::vector<Outgoing>& outs)
{
  for (const Outgoing& o : outs)
  {
    send(from, o);
  }
}

std::optional<Envelope> SimNetwork::next()
{
  if (queue_.empty())
  {
    return std::nullopt;
  }
  const std::size_t pick = static_cast<std::size_t>(rng_() % queue_.size());
  std::swap(queue_[pick], queue_.back());
  Envelope e = std::move(queue_.back());
  queue_.pop_back();
  ++delivered_;
  return e;
}

namespace {

ConsensusNode* find_node(std::vector<ConsensusNode>& nodes, NodeId id)
{
  for (ConsensusNode& n : nodes)
  {
    if (n.id() == id)
    {
      return &n;
    }
  }
  return nullptr;
}

void drain(std::vector<ConsensusNode>& nodes, SimNetwork& network)
{
  while (auto e = network.next())
  {
    ConsensusNode* target = find_node(nodes, e->to);
    if (target == nullptr)
    {
      continue;
    }
    network.send_all(e->to, target->receive(e->from, decode_consensus(e->payload)));
  }
}

} // namespace

CommitResult run_consensus_round(std::vector<ConsensusNode>& nodes, SimNetwork& network, std::uint64_t view,
                                 std::uint64_t now_us)
{
  for (ConsensusNode& n : nodes)
  {
    network.send_all(n.id(), n.begin_round(view, now_us));
  }
  drain(nodes, network);

  // Faulty members may lag behind, so the round is read off an honest one.
  const auto reference = std::find_if(nodes.begin(), nodes.end(), [](const ConsensusNode& n) { return n.honest(); });
  const ConsensusNode& ref = reference != nodes.end() ? *reference : nodes.front();
  CommitResult result;
  result.height = ref.round_height();
  result.view   = view;
  result.leader = ref.round_leader();

  for (ConsensusNode& n : nodes)
  {
    if (n.id() != result.leader)
    {
      network.send_all(n.id(), n.round_timeout());
    }
  }
  drain(nodes, network);
  if (ConsensusNode* leader = find_node(nodes, result.leader))
  {
    leader->round_timeout();
  }

  for (const ConsensusNode& n : nodes)
  {
    result.nodes.push_back({n.id(), n.honest(), n.outcome(), n.votes_collected()});
    if (n.honest() && n.outcome() == RoundOutcome::committed && !result.committed)
    {
      result.committed = n.store().tip().block.header_hash();
    }
  }
  return result;
}

Cluster::Cluster(const Bootstrap& bootstrap, std::vector<Fault> faults, std::optional<std::filesystem::path> data_dir)
  : config_(bootstrap.config)
  , now_us_(bootstrap.config.genesis_timestamp_us)
{
  config_.validate();
  faults.resize(config_.n(), Fault::none);
  if (data_dir)
  {
    std::filesystem::create_directories(*data_dir);
  }
  for (std::size_t i = 0; i < config_.n(); ++i)
  {
    const NodeId id = config_.members[i].id;
    BlockStore store = data_dir ? BlockStore::open(*data_dir / ("node-" + std::to_string(id) + ".chain"), config_)
                                : BlockStore::in_memory(config_);
    nodes_.emplace_back(id, bootstrap.keys[i], std::move(store), faults[i]);
  }
}

ConsensusNode& Cluster::node(NodeId id)
{
  ConsensusNode* n = find_node(nodes_, id);
  if (n == nullptr)
  {
    throw InvalidArgument("no node " + std::to_string(id));
  }
  return *n;
}

void Cluster::submit(const DigestRecord& record)
{
  now_us_ += 1;
  for (ConsensusNode& n : nodes_)
  {
    n.submit(record, now_us_);
  }
}

CommitResult Cluster::run_round(SimNetwork& network, std::uint64_t view)
{
  now_us_ += 1'000'000;
  return run_consensus_round(nodes_, network, view, now_us_);
}

std::uint64_t Cluster::commit_pending(SimNetwork& network)
{
  auto work_left = [&] {
    for (const ConsensusNode& n : nodes_)
    {
      if (n.honest() && n.pending() > 0)
      {
        return true;
      }
    }
    return false;
  };

  std::uint64_t committed_blocks = 0;
  while (work_left())
  {
    bool done = false;
    for (std::uint64_t view = 0; view < config_.n() && !done; ++view)
    {
      done = run_round(network, view).committed.has_value();
    }
    if (!done)
    {
      throw LedgerError("no quorum reached in " + std::to_string(config_.n()) + " consecutive views");
    }
    ++committed_blocks;
  }
  return committed_blocks;
}

} // namespace veriframe::ledger
