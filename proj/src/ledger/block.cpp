#include "veriframe/ledger/block.hpp"

namespace veriframe::ledger {

Hash32 tx_hash(const DigestRecord& record) { return hash::sha256(record.encode()); }

Hash32 compute_tx_root(std::span<const DigestRecord> txs)
{
  hash::Sha256 h;
  for (const DigestRecord& r : txs)
  {
    const Hash32 th = tx_hash(r);
    h.update(th);
  }
  return h.finish();
}

RecordKey RecordKey::of(const DigestRecord& r)
{
  return {r.stream_id,
          r.frame_id_start,
          r.frame_id_end,
          static_cast<std::uint8_t>(r.algorithm),
          r.mode.code(),
          r.mode.batch_size()};
}

Transaction Transaction::make(DigestRecord record, std::uint64_t receipt_time_us)
{
  Transaction t{std::move(record), receipt_time_us, {}};
  t.hash = tx_hash(t.record);
  return t;
}

void BlockHeader::encode_to(ByteWriter& w) const
{
  w.u64(height);
  w.bytes(prev_hash);
  w.bytes(tx_root);
  w.u64(timestamp_us);
  w.u16(leader_id);
}

BlockHeader BlockHeader::decode(ByteReader& r)
{
  BlockHeader h;
  h.height       = r.u64("block height");
  h.prev_hash    = r.array<32>("prev hash");
  h.tx_root      = r.array<32>("tx root");
  h.timestamp_us = r.u64("block timestamp");
  h.leader_id    = r.u16("leader id");
  return h;
}

Hash32 BlockHeader::hash() const
{
  ByteWriter w(kBlockHeaderSize);
  encode_to(w);
  return hash::sha256(w.data());
}

void Vote::encode_to(ByteWriter& w) const
{
  w.u16(validator_id);
  w.u16(static_cast<std::uint16_t>(signature.size()));
  w.bytes(signature);
}

Vote Vote::decode(ByteReader& r, const Hash32& header_hash)
{
  Vote v;
  v.validator_id          = r.u16("validator id");
  const std::uint16_t len = r.u16("signature length");
  const ByteView sig      = r.bytes(len, "signature");
  v.signature.assign(sig.begin(), sig.end());
  v.header_hash = header_hash;
  return v;
}

void Block::encode_to(ByteWriter& w) const
{
  header.encode_to(w);
  w.u32(static_cast<std::uint32_t>(txs.size()));
  for (const DigestRecord& r : txs)
  {
    r.encode_to(w);
  }
}

Bytes Block::encode() const
{
  ByteWriter w;
  encode_to(w);
  return std::move(w).take();
}

Block Block::decode(ByteReader& r)
{
  Block b;
  b.header                = BlockHeader::decode(r);
  const std::uint32_t n   = r.u32("tx count");
  // Each record is at least 43 bytes; reject counts the input cannot hold.
  if (static_cast<std::uint64_t>(n) * 43 > r.remaining())
  {
    throw ParseError("tx count exceeds block size", r.offset());
  }
  b.txs.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i)
  {
    b.txs.push_back(DigestRecord::decode(r));
  }
  return b;
}

Hash32 Block::hash() const { return hash::sha256(encode()); }

Bytes CommittedBlock::encode() const
{
  ByteWriter w;
  block.encode_to(w);
  w.u16(static_cast<std::uint16_t>(votes.size()));
  for (const Vote& v : votes)
  {
    v.encode_to(w);
  }
  return std::move(w).take();
}

CommittedBlock CommittedBlock::decode(ByteView data, std::uint64_t base_offset)
{
  ByteReader r(data, base_offset);
  CommittedBlock c;
  c.block                 = Block::decode(r);
  const Hash32 hh         = c.block.header_hash();
  const std::uint16_t n   = r.u16("vote count");
  c.votes.reserve(n);
  for (std::uint16_t i = 0; i < n; ++i)
  {
    c.votes.push_back(Vote::decode(r, hh));
  }
  r.expect_end("committed block");
  return c;
}

Bytes encode_consensus(const ConsensusMessage& msg)
{
  ByteWriter w;
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Propose>)
        {
          w.u8(1);
          w.u64(m.view);
          m.block.encode_to(w);
          m.leader_vote.encode_to(w);
        }
        else if constexpr (std::is_same_v<T, SignedRelay>)
        {
          w.u8(2);
          w.u64(m.height);
          w.u64(m.view);
          w.bytes(m.header_hash);
          m.vote.encode_to(w);
        }
        else
        {
          w.u8(3);
          w.u64(m.height);
          w.bytes(m.header_hash);
          w.u16(static_cast<std::uint16_t>(m.votes.size()));
          for (const Vote& v : m.votes)
          {
            v.encode_to(w);
          }
        }
      },
      msg);
  return std::move(w).take();
}

ConsensusMessage decode_consensus(ByteView data)
{
  ByteReader r(data);
  const std::uint8_t type = r.u8("consensus message type");
  ConsensusMessage out;
  switch (type)
  {
  case 1: {
    Propose p;
    p.view        = r.u64("view");
    p.block       = Block::decode(r);
    p.leader_vote = Vote::decode(r, p.block.header_hash());
    out           = std::move(p);
    break;
  }
  case 2: {
    SignedRelay s;
    s.height      = r.u64("height");
    s.view        = r.u64("view");
    s.header_hash = r.array<32>("header hash");
    s.vote        = Vote::decode(r, s.header_hash);
    out           = std::move(s);
    break;
  }
  case 3: {
    Confirm c;
    c.height              = r.u64("height");
    c.header_hash         = r.array<32>("header hash");
    const std::uint16_t n = r.u16("vote count");
    for (std::uint16_t i = 0; i < n; ++i)
    {
      c.votes.push_back(Vote::decode(r, c.header_hash));
    }
    out = std::move(c);
    break;
  }
  default:
    throw ParseError("unknown consensus message type " + std::to_string(type), 0);
  }
  r.expect_end("consensus message");
  return out;
}

std::string_view message_name(const ConsensusMessage& msg)
{
  switch (msg.index())
  {
  case 0:
    return "Propose";
  case 1:
    return "SignedRelay";
  default:
    return "Confirm";
  }
}

} // namespace veriframe::ledger
