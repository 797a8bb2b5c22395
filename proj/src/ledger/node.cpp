#include "veriframe/ledger/node.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>

namespace veriframe::ledger {

std::string_view to_string(RoundOutcome outcome)
{
  switch (outcome)
  {
  case RoundOutcome::pending:
    return "pending";
  case RoundOutcome::committed:
    return "committed";
  case RoundOutcome::no_commit:
    return "no-commit";
  case RoundOutcome::aborted_conflict:
    return "aborted-conflict";
  }
  return "?";
}

std::optional<Block> assemble_block(std::span<const Transaction> pending, const CommittedBlock& tip,
                                    NodeId leader_id, const BlockLimits& limits, std::uint64_t timestamp_us,
                                    const BlockStore& store)
{
  const Hash32 tip_hash = tip.block.hash();
  if (tip_hash != store.tip_hash())
  {
    throw LedgerError("stale tip: block " + std::to_string(tip.block.header.height) + " is not the chain tip");
  }

  std::vector<const Transaction*> ordered;
  ordered.reserve(pending.size());
  for (const Transaction& t : pending)
  {
    ordered.push_back(&t);
  }
  std::sort(ordered.begin(), ordered.end(), [](const Transaction* a, const Transaction* b) {
    return std::tie(a->receipt_time_us, a->hash) < std::tie(b->receipt_time_us, b->hash);
  });

  Block block;
  std::set<RecordKey> seen;
  for (const Transaction* t : ordered)
  {
    if (block.txs.size() >= limits.max_txs)
    {
      break;
    }
    if (store.contains(t->record) || !seen.insert(RecordKey::of(t->record)).second)
    {
      continue;
    }
    block.txs.push_back(t->record);
  }
  if (block.txs.empty())
  {
    return std::nullopt;
  }

  block.header.height       = tip.block.header.height + 1;
  block.header.prev_hash    = tip_hash;
  block.header.tx_root      = compute_tx_root(block.txs);
  block.header.timestamp_us = std::max(timestamp_us, tip.block.header.timestamp_us);
  block.header.leader_id    = leader_id;
  return block;
}

ConsensusNode::ConsensusNode(NodeId id, SigningKey key, BlockStore store, Fault fault)
  : id_(id)
  , key_(std::move(key))
  , store_(std::move(store))
  , fault_(fault)
{
  const Member* me = store_.config().member(id);
  if (me == nullptr)
  {
    throw InvalidArgument("node " + std::to_string(id) + " is not a cluster member");
  }
  if (me->public_key != key_.public_key())
  {
    throw InvalidArgument("signing key does not match the registered key of node " + std::to_string(id));
  }
}

bool ConsensusNode::submit(const DigestRecord& record, std::uint64_t receipt_time_us)
{
  record.validate();
  if (store_.contains(record))
  {
    return false;
  }
  return pool_.try_emplace(RecordKey::of(record), Transaction::make(record, receipt_time_us)).second;
}

std::optional<Hash32> ConsensusNode::proposal_hash() const
{
  if (!proposal_)
  {
    return std::nullopt;
  }
  return proposal_->header_hash();
}

std::size_t ConsensusNode::votes_collected() const
{
  if (!proposal_)
  {
    return 0;
  }
  auto it = votes_.find(proposal_->header_hash());
  return it == votes_.end() ? 0 : it->second.size();
}

Vote ConsensusNode::make_vote(const Hash32& header_hash) const
{
  Vote v{id_, header_hash, key_.sign(header_hash)};
  if (fault_ == Fault::garbage_signature)
  {
    for (auto& b : v.signature)
    {
      b ^= 0x5A;
    }
  }
  return v;
}

std::vector<Outgoing> ConsensusNode::begin_round(std::uint64_t view, std::uint64_t now_us)
{
  active_               = true;
  height_               = store_.height() + 1;
  view_                 = view;
  leader_               = config().leader_for(height_, view_);
  proposal_.reset();
  votes_.clear();
  copies_from_.clear();
  conflicting_proposal_ = false;
  outcome_              = RoundOutcome::pending;

  if (leader_ != id_ || fault_ == Fault::silent)
  {
    return {};
  }

  std::vector<Transaction> pending;
  pending.reserve(pool_.size());
  for (const auto& [key, tx] : pool_)
  {
    pending.push_back(tx);
  }
  auto block = assemble_block(pending, store_.tip(), id_, BlockLimits{config().max_block_txs}, now_us, store_);
  if (!block)
  {
    return {};
  }

  proposal_             = *block;
  const Hash32 hh       = block->header_hash();
  const Vote own        = make_vote(hh);
  add_vote_if_valid(id_, own, hh);

  std::optional<Block> alternate;
  if (fault_ == Fault::equivocate)
  {
    alternate = *block;
    alternate->header.timestamp_us += 1;
  }

  std::vector<Outgoing> out;
  std::size_t validator_index = 0;
  for (const Member& m : config().members)
  {
    if (m.id == id_)
    {
      continue;
    }
    const bool second_half = alternate && (validator_index++ % 2 == 1);
    if (second_half)
    {
      out.push_back({m.id, Propose{view_, *alternate, make_vote(alternate->header_hash())}});
    }
    else
    {
      out.push_back({m.id, Propose{view_, *block, own}});
    }
  }
  return out;
}

std::vector<Outgoing> ConsensusNode::receive(NodeId from, const ConsensusMessage& msg)
{
  if (!active_ || fault_ == Fault::silent || config().member(from) == nullptr || from == id_)
  {
    return {};
  }
  return std::visit(
      [&](const auto& m) -> std::vector<Outgoing> {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Propose>)
        {
          return on_propose(from, m);
        }
        else if constexpr (std::is_same_v<T, SignedRelay>)
        {
          return on_relay(from, m);
        }
        else
        {
          return on_confirm(from, m);
        }
      },
      msg);
}

void ConsensusNode::add_vote_if_valid(NodeId from, const Vote& v, const Hash32& header_hash)
{
  const Member* m = config().member(from);
  if (m != nullptr && v.validator_id == from && v.header_hash == header_hash && v.verify(m->public_key))
  {
    votes_[header_hash][from] = v;
  }
}

std::optional<std::string> ConsensusNode::check_proposal(const Block& block) const
{
  if (auto why = check_successor(config(), store_.tip().block, block))
  {
    return why;
  }
  for (const DigestRecord& r : block.txs)
  {
    if (store_.contains(r))
    {
      return std::string("transaction already committed");
    }
    if (!pool_.contains(RecordKey::of(r)))
    {
      return std::string("transaction was never submitted to this node");
    }
  }
  return std::nullopt;
}

std::vector<Outgoing> ConsensusNode::on_propose(NodeId from, const Propose& p)
{
  if (outcome_ != RoundOutcome::pending || leader_ == id_ || from != leader_ || p.view != view_ ||
      p.block.header.height != height_ || p.block.header.leader_id != from)
  {
    return {};
  }
  const Hash32 hh = p.block.header_hash();
  if (copies_from_.contains(from))
  {
    // Second, different block from the same leader at this height.
    if (!proposal_ || proposal_->header_hash() != hh)
    {
      conflicting_proposal_ = true;
    }
    return maybe_decide();
  }
  copies_from_.insert(from);
  add_vote_if_valid(from, p.leader_vote, hh);

  std::vector<Outgoing> out;
  if (auto why = check_proposal(p.block))
  {
    spdlog::debug("node {} rejects block {} from {}: {}", id_, height_, from, *why);
  }
  else
  {
    proposal_       = p.block;
    const Vote mine = make_vote(hh);
    add_vote_if_valid(id_, mine, hh);
    for (const Member& m : config().members)
    {
      if (m.id != id_ && m.id != leader_)
      {
        out.push_back({m.id, SignedRelay{height_, view_, hh, mine}});
      }
    }
  }
  auto decided = maybe_decide();
  out.insert(out.end(), decided.begin(), decided.end());
  return out;
}

std::vector<Outgoing> ConsensusNode::on_relay(NodeId from, const SignedRelay& r)
{
  if (outcome_ != RoundOutcome::pending || leader_ == id_ || from == leader_ || r.height != height_ ||
      r.view != view_ || copies_from_.contains(from))
  {
    return {};
  }
  copies_from_.insert(from);
  add_vote_if_valid(from, r.vote, r.header_hash);
  return maybe_decide();
}

std::vector<Outgoing> ConsensusNode::on_confirm(NodeId from, const Confirm& c)
{
  if (outcome_ != RoundOutcome::pending || leader_ != id_ || !proposal_ || c.height != height_)
  {
    return {};
  }
  const Hash32 hh = proposal_->header_hash();
  if (c.header_hash != hh || check_votes(config(), hh, c.votes))
  {
    spdlog::debug("leader {} ignores confirm from {}", id_, from);
    return {};
  }
  commit(c.votes);
  return {};
}

std::vector<Outgoing> ConsensusNode::maybe_decide()
{
  if (copies_from_.size() + 1 >= config().n())
  {
    return decide();
  }
  return {};
}

std::vector<Outgoing> ConsensusNode::round_timeout()
{
  if (!active_ || fault_ == Fault::silent)
  {
    return {};
  }
  if (leader_ == id_)
  {
    if (outcome_ == RoundOutcome::pending)
    {
      outcome_ = RoundOutcome::no_commit;
    }
    return {};
  }
  return decide();
}

std::vector<Outgoing> ConsensusNode::decide()
{
  if (outcome_ != RoundOutcome::pending)
  {
    return {};
  }
  if (conflicting_proposal_ || votes_.size() > 1)
  {
    outcome_ = RoundOutcome::aborted_conflict;
    spdlog::debug("node {} aborts height {}: conflicting signed blocks", id_, height_);
    return {};
  }
  if (!proposal_ || votes_collected() < config().quorum())
  {
    outcome_ = RoundOutcome::no_commit;
    return {};
  }

  const Hash32 hh = proposal_->header_hash();
  std::vector<Vote> votes;
  for (const auto& [id, v] : votes_[hh])
  {
    votes.push_back(v);
  }
  commit(votes);
  return {{leader_, Confirm{height_, hh, std::move(votes)}}};
}

void ConsensusNode::commit(std::vector<Vote> votes)
{
  store_.append(*proposal_, std::move(votes));
  for (const DigestRecord& r : proposal_->txs)
  {
    pool_.erase(RecordKey::of(r));
  }
  outcome_ = RoundOutcome::committed;
}

} // namespace veriframe::ledger
