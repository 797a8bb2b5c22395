#include "veriframe/ledger/store.hpp"

#include <algorithm>

namespace veriframe::ledger {

namespace {

Bytes log_entry(const CommittedBlock& committed)
{
  const Bytes body = committed.encode();
  ByteWriter w(4 + body.size());
  w.u32(static_cast<std::uint32_t>(body.size()));
  w.bytes(body);
  return std::move(w).take();
}

struct LogEntry
{
  std::uint64_t offset;
  std::variant<CommittedBlock, std::string> parsed;
};

/// Splits a log into entries; stops after the first unparseable entry.
std::vector<LogEntry> parse_log(ByteView log)
{
  std::vector<LogEntry> out;
  std::size_t pos = 0;
  while (pos < log.size())
  {
    if (log.size() - pos < 4)
    {
      out.push_back({pos, std::string("truncated entry length")});
      break;
    }
    ByteReader r(log.subspan(pos, 4), pos);
    const std::uint32_t len = r.u32();
    if (log.size() - pos - 4 < len)
    {
      out.push_back({pos, std::string("entry length runs past end of log")});
      break;
    }
    try
    {
      out.push_back({pos, CommittedBlock::decode(log.subspan(pos + 4, len), pos + 4)});
    }
    catch (const ParseError& e)
    {
      out.push_back({pos, std::string("malformed block: ") + e.what()});
      break;
    }
    pos += 4 + len;
  }
  return out;
}

std::optional<std::string> check_genesis(const ClusterConfig& config, const CommittedBlock& c)
{
  if (c.block != make_genesis(config))
  {
    return "genesis block does not match cluster configuration";
  }
  if (!c.votes.empty())
  {
    return "genesis block carries votes";
  }
  return std::nullopt;
}

} // namespace

std::optional<std::string> check_votes(const ClusterConfig& config, const Hash32& header_hash,
                                       std::span<const Vote> votes)
{
  std::set<NodeId> seen;
  for (const Vote& v : votes)
  {
    const Member* m = config.member(v.validator_id);
    if (m == nullptr)
    {
      return "vote from unknown validator " + std::to_string(v.validator_id);
    }
    if (!seen.insert(v.validator_id).second)
    {
      return "duplicate vote from validator " + std::to_string(v.validator_id);
    }
    if (v.header_hash != header_hash)
    {
      return "vote for a different header from validator " + std::to_string(v.validator_id);
    }
    if (!v.verify(m->public_key))
    {
      return "invalid signature from validator " + std::to_string(v.validator_id);
    }
  }
  if (seen.size() < config.quorum())
  {
    return "quorum not met: " + std::to_string(seen.size()) + " of " + std::to_string(config.quorum()) +
           " required votes";
  }
  return std::nullopt;
}

std::optional<std::string> check_successor(const ClusterConfig& config, const Block& prev, const Block& next)
{
  if (next.header.height != prev.header.height + 1)
  {
    return "height " + std::to_string(next.header.height) + " does not follow " +
           std::to_string(prev.header.height);
  }
  if (next.header.prev_hash != prev.hash())
  {
    return "prev_hash does not match predecessor";
  }
  if (next.header.tx_root != compute_tx_root(next.txs))
  {
    return "tx_root does not match block body";
  }
  if (next.header.timestamp_us < prev.header.timestamp_us)
  {
    return "timestamp precedes predecessor";
  }
  if (config.member(next.header.leader_id) == nullptr)
  {
    return "leader is not a cluster member";
  }
  if (next.txs.empty())
  {
    return "block has no transactions";
  }
  std::set<RecordKey> keys;
  for (const DigestRecord& r : next.txs)
  {
    try
    {
      r.validate();
    }
    catch (const InvalidArgument& e)
    {
      return std::string("invalid transaction: ") + e.what();
    }
    if (!keys.insert(RecordKey::of(r)).second)
    {
      return "duplicate transaction within block";
    }
  }
  return std::nullopt;
}

BlockStore::BlockStore(const ClusterConfig& config)
  : config_(config)
{}

BlockStore BlockStore::in_memory(const ClusterConfig& config)
{
  config.validate();
  BlockStore s(config);
  s.push(CommittedBlock{make_genesis(config), {}}, false);
  return s;
}

BlockStore BlockStore::open(const std::filesystem::path& path, const ClusterConfig& config)
{
  config.validate();
  BlockStore s(config);
  s.path_ = path;
  if (!std::filesystem::exists(path))
  {
    s.push(CommittedBlock{make_genesis(config), {}}, true);
    return s;
  }

  const Bytes log = read_file(path);
  if (auto v = validate_chain(log, config))
  {
    throw LedgerError("block log " + path.string() + " failed validation at height " + std::to_string(v->height) +
                      ": " + v->reason);
  }
  for (LogEntry& e : parse_log(log))
  {
    s.push(std::move(std::get<CommittedBlock>(e.parsed)), false);
  }
  return s;
}

void BlockStore::append(const Block& block, std::vector<Vote> votes)
{
  if (block.header.height <= height())
  {
    throw LedgerError("height conflict: block " + std::to_string(block.header.height) + " already committed");
  }
  if (auto why = check_successor(config_, tip().block, block))
  {
    throw LedgerError("rejected block " + std::to_string(block.header.height) + ": " + *why);
  }
  for (const DigestRecord& r : block.txs)
  {
    if (contains(r))
    {
      throw LedgerError("rejected block " + std::to_string(block.header.height) + ": record already committed");
    }
  }
  const Hash32 hh = block.header_hash();
  if (auto why = check_votes(config_, hh, votes))
  {
    throw LedgerError("rejected block " + std::to_string(block.header.height) + ": " + *why);
  }
  std::sort(votes.begin(), votes.end(), [](const Vote& a, const Vote& b) { return a.validator_id < b.validator_id; });
  push(CommittedBlock{block, std::move(votes)}, true);
}

void BlockStore::push(CommittedBlock committed, bool persist)
{
  const Bytes entry = log_entry(committed);
  if (persist && path_)
  {
    std::ofstream out(*path_, std::ios::binary | std::ios::app);
    out.write(reinterpret_cast<const char*>(entry.data()), static_cast<std::streamsize>(entry.size()));
    out.flush();
    if (!out)
    {
      throw IoError("failed appending to block log " + path_->string());
    }
  }
  log_.insert(log_.end(), entry.begin(), entry.end());
  tip_hash_ = committed.block.hash();
  index_block(committed);
  blocks_.push_back(std::move(committed));
}

void BlockStore::index_block(const CommittedBlock& committed)
{
  const auto& txs = committed.block.txs;
  for (std::uint32_t i = 0; i < txs.size(); ++i)
  {
    index_[txs[i].stream_id].push_back({txs[i].frame_id_start, txs[i].frame_id_end, committed.block.header.height, i});
    keys_.insert(RecordKey::of(txs[i]));
  }
}

std::vector<QueryHit> BlockStore::query(const StreamId& stream_id, std::uint64_t frame_id) const
{
  std::vector<QueryHit> hits;
  auto it = index_.find(stream_id);
  if (it == index_.end())
  {
    return hits;
  }
  for (const IndexEntry& e : it->second)
  {
    if (e.start <= frame_id && frame_id <= e.end)
    {
      const Block& b = blocks_[e.height].block;
      hits.push_back({b.txs[e.tx_index], e.height, b.header.timestamp_us, e.tx_index});
    }
  }
  return hits;
}

bool BlockStore::contains(const DigestRecord& record) const { return keys_.contains(RecordKey::of(record)); }

std::optional<ChainViolation> validate_chain(ByteView log, const ClusterConfig& config)
{
  const std::vector<LogEntry> entries = parse_log(log);
  if (entries.empty())
  {
    return ChainViolation{0, "empty log: genesis missing"};
  }

  std::optional<Block> prev;
  std::set<RecordKey> committed;
  for (std::uint64_t height = 0; height < entries.size(); ++height)
  {
    const LogEntry& e = entries[height];
    if (const auto* err = std::get_if<std::string>(&e.parsed))
    {
      return ChainViolation{height, *err};
    }
    const CommittedBlock& c = std::get<CommittedBlock>(e.parsed);
    if (c.block.header.height != height)
    {
      return ChainViolation{height, "stored height field is " + std::to_string(c.block.header.height)};
    }
    if (height == 0)
    {
      if (auto why = check_genesis(config, c))
      {
        return ChainViolation{0, *why};
      }
    }
    else
    {
      if (auto why = check_successor(config, *prev, c.block))
      {
        return ChainViolation{height, *why};
      }
      for (const DigestRecord& r : c.block.txs)
      {
        if (!committed.insert(RecordKey::of(r)).second)
        {
          return ChainViolation{height, "record committed twice"};
        }
      }
      if (auto why = check_votes(config, c.block.header_hash(), c.votes))
      {
        return ChainViolation{height, *why};
      }
      for (std::size_t i = 1; i < c.votes.size(); ++i)
      {
        if (c.votes[i - 1].validator_id >= c.votes[i].validator_id)
        {
          return ChainViolation{height, "votes not in canonical order"};
        }
      }
    }
    prev = c.block;
  }
  return std::nullopt;
}

std::optional<ChainViolation> validate_chain(const std::filesystem::path& path, const ClusterConfig& config)
{
  return validate_chain(read_file(path), config);
}

std::optional<ChainViolation> validate_chain(const BlockStore& store)
{
  return validate_chain(store.log_bytes(), store.config());
}

SnapshotLedger::SnapshotLedger(const std::filesystem::path& chain_file, const ClusterConfig* config)
{
  const Bytes log = read_file(chain_file);
  if (config != nullptr)
  {
    if (auto v = validate_chain(log, *config))
    {
      throw LedgerError("snapshot failed validation at height " + std::to_string(v->height) + ": " + v->reason);
    }
  }
  for (LogEntry& e : parse_log(log))
  {
    if (const auto* err = std::get_if<std::string>(&e.parsed))
    {
      throw LedgerError("snapshot unreadable at entry " + std::to_string(blocks_.size()) + ": " + *err);
    }
    CommittedBlock c = std::move(std::get<CommittedBlock>(e.parsed));
    if (c.block.header.height != blocks_.size())
    {
      throw LedgerError("snapshot height gap at entry " + std::to_string(blocks_.size()));
    }
    if (!blocks_.empty())
    {
      const Block& prev = blocks_.back().block;
      if (c.block.header.prev_hash != prev.hash() || c.block.header.tx_root != compute_tx_root(c.block.txs))
      {
        throw LedgerError("snapshot broken at height " + std::to_string(c.block.header.height));
      }
    }
    blocks_.push_back(std::move(c));
  }
  if (blocks_.empty())
  {
    throw LedgerError("snapshot is empty");
  }
}

std::vector<QueryHit> SnapshotLedger::query(const StreamId& stream_id, std::uint64_t frame_id) const
{
  std::vector<QueryHit> hits;
  for (const CommittedBlock& c : blocks_)
  {
    for (std::uint32_t i = 0; i < c.block.txs.size(); ++i)
    {
      const DigestRecord& r = c.block.txs[i];
      if (r.stream_id == stream_id && r.covers(frame_id))
      {
        hits.push_back({r, c.block.header.height, c.block.header.timestamp_us, i});
      }
    }
  }
  return hits;
}

Bytes read_file(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
  {
    throw IoError("cannot open " + path.string());
  }
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

} // namespace veriframe::ledger
