#include "veriframe/ledger/block.hpp"
#include "veriframe/ledger/store.hpp"
#include "veriframe/wire.hpp"

#include <doctest.h>

using namespace veriframe;

namespace {

Bytes golden(const char* name) { return ledger::read_file(std::string(VERIFRAME_GOLDEN_DIR) + "/" + name); }

StreamId fixture_stream()
{
  StreamId id{};
  for (std::uint8_t i = 0; i < 16; ++i)
  {
    id[i] = i;
  }
  return id;
}

DigestRecord fixture_record()
{
  DigestRecord r;
  r.stream_id      = fixture_stream();
  r.mode           = WriteMode::batch_digests(30);
  r.frame_id_start = 0;
  r.frame_id_end   = 29;
  r.algorithm      = DigestAlgorithm::md5;
  r.digest         = from_hex("900150983cd24fb0d6963f7d28e17f72");
  return r;
}

} // namespace

TEST_CASE("stream announce")
{
  StreamHeader h;
  h.stream_id   = fixture_stream();
  h.width       = 2;
  h.height      = 2;
  h.channels    = 1;
  h.frame_count = 1;
  const Bytes bytes = wire::frame_payload(wire::encode_message(wire::StreamAnnounce{h}));
  CHECK(to_hex(bytes) == to_hex(golden("stream_announce.bin")));

  wire::FrameDecoder dec;
  dec.feed(golden("stream_announce.bin"));
  const auto payload = dec.next();
  REQUIRE(payload.has_value());
  CHECK(std::get<wire::StreamAnnounce>(wire::decode_message(*payload)).header == h);
}

TEST_CASE("digest record")
{
  CHECK(to_hex(fixture_record().encode()) == to_hex(golden("digest_record.bin")));
  const Bytes g = golden("digest_record.bin");
  ByteReader r(g);
  CHECK(DigestRecord::decode(r) == fixture_record());
}

TEST_CASE("frame datagram")
{
  wire::FrameDatagram d;
  d.stream_id  = fixture_stream();
  d.frame_id   = 7;
  d.frag_index = 1;
  d.frag_count = 3;
  d.payload    = {1, 2, 3, 4, 5};
  CHECK(to_hex(d.encode()) == to_hex(golden("frame_datagram.bin")));
  CHECK(wire::FrameDatagram::decode(golden("frame_datagram.bin")) == d);
}

TEST_CASE("committed block")
{
  ledger::Block b;
  b.header.height = 1;
  b.header.prev_hash.fill(0x11);
  b.txs                 = {fixture_record()};
  b.header.tx_root      = ledger::compute_tx_root(b.txs);
  b.header.timestamp_us = 1'700'000'000'000'000ULL;
  b.header.leader_id    = 0;

  ledger::CommittedBlock c{b, {}};
  const Hash32 hh = b.header_hash();
  for (std::uint8_t id : {1, 2})
  {
    SecretSeed seed;
    seed.fill(id);
    c.votes.push_back({id, hh, SigningKey(seed).sign(hh)});
  }
  CHECK(to_hex(c.encode()) == to_hex(golden("block.bin")));
  CHECK(ledger::CommittedBlock::decode(golden("block.bin")) == c);
}
