#include "support.hpp"
#include "veriframe/transport.hpp"

#include <doctest.h>

#include <fstream>
#include <set>

using namespace veriframe;
using namespace veriframe::transport;

namespace {

SyntheticStream stream(std::uint32_t w, std::uint32_t h, std::uint64_t frames, std::uint64_t seed = 5)
{
  StreamHeader hd;
  hd.stream_id   = synthetic_stream_id(seed);
  hd.width       = w;
  hd.height      = h;
  hd.frame_count = frames;
  return generate_synthetic_stream(hd, seed);
}

FrameSource source_of(const SyntheticStream& s)
{
  auto i = std::make_shared<std::size_t>(0);
  return [&s, i]() -> std::optional<Frame> {
    if (*i >= s.frames.size())
    {
      return std::nullopt;
    }
    return s.frames[(*i)++];
  };
}

// Drops every datagram of the chosen frames.
class SelectiveChannel : public FrameChannel
{
public:
  SelectiveChannel(IngestState& ingest, std::set<std::uint64_t> lose)
    : ingest_(ingest)
    , lose_(std::move(lose))
  {}
  void send(ByteView datagram) override
  {
    if (!lose_.contains(wire::FrameDatagram::decode(datagram).frame_id))
    {
      ingest_.on_datagram(datagram);
    }
  }

private:
  IngestState& ingest_;
  std::set<std::uint64_t> lose_;
};

class CollectingChannel : public FrameChannel
{
public:
  void send(ByteView d) override { datagrams.emplace_back(d.begin(), d.end()); }
  std::vector<Bytes> datagrams;
};

class FailingDigestChannel : public DigestChannel
{
public:
  explicit FailingDigestChannel(int fail_at)
    : fail_at_(fail_at)
  {}
  void send(const wire::HashChannelMessage&) override
  {
    if (++count_ >= fail_at_)
    {
      throw IoError("link down");
    }
  }

private:
  int fail_at_;
  int count_ = 0;
};

class FailingFrameChannel : public FrameChannel
{
public:
  void send(ByteView) override { throw IoError("no route"); }
};

// Independent restatement of the seeded loss process: one 53-bit uniform per
// datagram from mt19937_64(seed), in send order.
std::set<std::uint64_t> predicted_lost_frames(std::uint64_t frames, std::uint64_t frame_bytes, double p,
                                              std::uint64_t seed)
{
  std::mt19937_64 eng(seed);
  const std::uint64_t per_frame = std::max<std::uint64_t>(1, (frame_bytes + 1399) / 1400);
  std::set<std::uint64_t> lost;
  for (std::uint64_t f = 0; f < frames; ++f)
  {
    for (std::uint64_t d = 0; d < per_frame; ++d)
    {
      if (std::ldexp(static_cast<double>(eng() >> 11), -53) < p)
      {
        lost.insert(f);
      }
    }
  }
  return lost;
}

} // namespace

TEST_CASE("lossless capture forwards every record and archives every frame")
{
  const auto s = stream(16, 8, 40);
  MemoryArchive archive;
  ledger::RecordingSink sink;
  IngestState ingest(archive, sink);
  LoopbackDigestChannel dc(ingest);
  LoopbackFrameChannel fc(ingest);

  CaptureConfig cfg;
  cfg.mode = WriteMode::batch_bytes(7);
  const auto cs = run_capture_agent(s.header, source_of(s), cfg, dc, fc);
  CHECK_FALSE(cs.aborted);
  CHECK(cs.frames_sent == 40);
  CHECK(cs.records_sent == 6);

  const auto summary = ingest.close_window();
  CHECK(summary.records_committed == 6);
  CHECK(summary.records_discarded == 0);
  CHECK(summary.gaps.empty());
  CHECK(sink.records == digest_selected(s.frames, DigestAlgorithm::md5, cfg.mode, s.header.stream_id));

  std::ostringstream expect(std::ios::binary);
  write_stream(s.header, s.frames, expect);
  const std::string e = expect.str();
  CHECK(archive.sfv_bytes() == Bytes(e.begin(), e.end()));
}

TEST_CASE("discard soundness over every loss subset of five frames")
{
  const auto s = stream(40, 40, 5); // 1600 bytes: two fragments per frame
  for (auto mode : {WriteMode::per_frame(), WriteMode::batch_bytes(2), WriteMode::batch_digests(3)})
  {
    for (unsigned mask = 0; mask < 32; ++mask)
    {
      std::set<std::uint64_t> lose;
      for (std::uint64_t i = 0; i < 5; ++i)
      {
        if (mask & (1u << i))
        {
          lose.insert(i);
        }
      }
      MemoryArchive archive;
      ledger::RecordingSink sink;
      IngestState ingest(archive, sink);
      LoopbackDigestChannel dc(ingest);
      SelectiveChannel fc(ingest, lose);
      CaptureConfig cfg;
      cfg.mode = mode;
      run_capture_agent(s.header, source_of(s), cfg, dc, fc);
      const auto summary = ingest.close_window();

      CHECK(std::set<std::uint64_t>(summary.gaps.begin(), summary.gaps.end()) == lose);
      const auto all = digest_selected(s.frames, DigestAlgorithm::md5, mode, s.header.stream_id);
      std::vector<DigestRecord> expected;
      for (const auto& r : all)
      {
        bool intact = true;
        for (auto f : lose)
        {
          intact = intact && !r.covers(f);
        }
        if (intact)
        {
          expected.push_back(r);
        }
      }
      CHECK(sink.records == expected);
      CHECK(summary.records_discarded == all.size() - expected.size());
    }
  }
}

TEST_CASE("seeded loss matches the replay oracle")
{
  const auto s = stream(256, 134, 60); // 34304 bytes, 25 fragments
  for (std::uint64_t seed : {1ULL, 2ULL, 99ULL})
  {
    MemoryArchive archive;
    ledger::RecordingSink sink;
    IngestState ingest(archive, sink);
    LoopbackDigestChannel dc(ingest);
    LoopbackFrameChannel fc(ingest);
    CaptureConfig cfg;
    cfg.drop_probability = 0.01;
    cfg.seed             = seed;
    const auto cs        = run_capture_agent(s.header, source_of(s), cfg, dc, fc);
    const auto summary   = ingest.close_window();

    const auto lost = predicted_lost_frames(60, 34304, 0.01, seed);
    CHECK(std::set<std::uint64_t>(summary.gaps.begin(), summary.gaps.end()) == lost);
    CHECK(summary.records_committed == 60 - lost.size());
    CHECK(cs.datagrams_sent + cs.datagrams_dropped == 60 * 25);
    for (const auto& r : sink.records)
    {
      CHECK_FALSE(lost.contains(r.frame_id_start));
    }
  }
}

TEST_CASE("reordered and duplicated datagrams reassemble, early ones are buffered")
{
  const auto s = stream(60, 50, 6);
  CollectingChannel collect;
  ledger::RecordingSink unused;
  MemoryArchive scratch;
  IngestState scratch_ingest(scratch, unused);
  LoopbackDigestChannel scratch_dc(scratch_ingest);
  run_capture_agent(s.header, source_of(s), {}, scratch_dc, collect);

  auto datagrams = collect.datagrams;
  datagrams.insert(datagrams.end(), collect.datagrams.begin(), collect.datagrams.begin() + 4);
  std::mt19937_64 rng(4);
  std::shuffle(datagrams.begin(), datagrams.end(), rng);

  MemoryArchive archive;
  ledger::RecordingSink sink;
  IngestState ingest(archive, sink);
  // Half the datagrams arrive before the stream announce.
  const std::size_t half = datagrams.size() / 2;
  for (std::size_t i = 0; i < half; ++i)
  {
    ingest.on_datagram(datagrams[i]);
  }
  ingest.on_hash_message(wire::StreamAnnounce{s.header});
  for (std::size_t i = half; i < datagrams.size(); ++i)
  {
    ingest.on_datagram(datagrams[i]);
  }
  for (const auto& r : digest_selected(s.frames, DigestAlgorithm::md5, WriteMode::per_frame(), s.header.stream_id))
  {
    ingest.on_hash_message(wire::RecordMessage{r});
  }
  ingest.on_hash_message(wire::EndOfStream{s.header.stream_id});
  const auto summary = ingest.close_window();
  CHECK(summary.gaps.empty());
  CHECK(summary.records_committed == 6);
  CHECK(archive.write_calls == 6);
  for (const auto& f : s.frames)
  {
    CHECK(archive.frames.at(f.index) == f.pixels);
  }
}

TEST_CASE("malformed and foreign datagrams are counted and ignored")
{
  const auto s = stream(4, 4, 2);
  MemoryArchive archive;
  ledger::RecordingSink sink;
  IngestState ingest(archive, sink);
  ingest.on_hash_message(wire::StreamAnnounce{s.header});
  ingest.on_datagram(Bytes{1, 2, 3});

  wire::FrameDatagram foreign;
  foreign.stream_id = synthetic_stream_id(777);
  foreign.payload   = Bytes(16, 0);
  ingest.on_datagram(foreign.encode());

  wire::FrameDatagram wrong_size;
  wrong_size.stream_id = s.header.stream_id;
  wrong_size.payload   = Bytes(3, 0);
  ingest.on_datagram(wrong_size.encode());

  wire::FrameDatagram out_of_range;
  out_of_range.stream_id = s.header.stream_id;
  out_of_range.frame_id  = 2;
  out_of_range.payload   = Bytes(16, 0);
  ingest.on_datagram(out_of_range.encode());

  const auto summary = ingest.close_window();
  CHECK(summary.datagrams_malformed == 4);
  CHECK(summary.gaps == std::vector<std::uint64_t>{0, 1});
}

TEST_CASE("hash channel ordering is enforced")
{
  const auto s = stream(4, 4, 2);
  MemoryArchive archive;
  ledger::RecordingSink sink;
  IngestState ingest(archive, sink);
  DigestRecord r;
  r.stream_id = s.header.stream_id;
  r.digest    = Bytes(16, 0);
  CHECK_THROWS_AS(ingest.on_hash_message(wire::RecordMessage{r}), ProtocolError);
  ingest.on_hash_message(wire::StreamAnnounce{s.header});
  CHECK_THROWS_AS(ingest.on_hash_message(wire::StreamAnnounce{s.header}), ProtocolError);
  ingest.on_hash_message(wire::EndOfStream{s.header.stream_id});
  CHECK_THROWS_AS(ingest.on_hash_message(wire::RecordMessage{r}), ProtocolError);
}

TEST_CASE("digest channel failure aborts with a partial summary")
{
  const auto s = stream(4, 4, 10);
  FailingDigestChannel dc(4); // announce + two records succeed
  CollectingChannel fc;
  const auto cs = run_capture_agent(s.header, source_of(s), {}, dc, fc);
  CHECK(cs.aborted);
  CHECK(cs.records_sent == 2);
  CHECK(cs.frames_sent == 3);
  CHECK(cs.error.find("link down") != std::string::npos);
}

TEST_CASE("frame channel failure does not stop digests")
{
  const auto s = stream(4, 4, 10);
  MemoryArchive archive;
  ledger::RecordingSink sink;
  IngestState ingest(archive, sink);
  LoopbackDigestChannel dc(ingest);
  FailingFrameChannel fc;
  const auto cs = run_capture_agent(s.header, source_of(s), {}, dc, fc);
  CHECK_FALSE(cs.aborted);
  CHECK(cs.records_sent == 10);
  const auto summary = ingest.close_window();
  CHECK(summary.records_discarded == 10);
  CHECK(sink.records.empty());
}

TEST_CASE("file archive zero-fills gaps and writes the sidecar")
{
  testsupport::TempDir dir;
  const auto s = stream(8, 4, 6);
  {
    FileArchive archive(dir / "a.sfv", dir / "a.gaps");
    ledger::RecordingSink sink;
    IngestState ingest(archive, sink);
    LoopbackDigestChannel dc(ingest);
    SelectiveChannel fc(ingest, {1, 4});
    run_capture_agent(s.header, source_of(s), {}, dc, fc);
    ingest.close_window();
  }
  CHECK(read_gap_list(dir / "a.gaps") == std::vector<std::uint64_t>{1, 4});
  std::ifstream in(dir / "a.sfv", std::ios::binary);
  StreamReader reader(in);
  const auto frames = reader.read_all();
  REQUIRE(frames.size() == 6);
  for (const auto& f : frames)
  {
    if (f.index == 1 || f.index == 4)
    {
      CHECK(f.pixels == Bytes(32, 0));
    }
    else
    {
      CHECK(f.pixels == s.frames[f.index].pixels);
    }
  }
}

TEST_CASE("gap list parsing")
{
  testsupport::TempDir dir;
  write_gap_list(dir / "g", {});
  CHECK(read_gap_list(dir / "g").empty());
  {
    std::ofstream f(dir / "bad");
    f << "# veriframe gaps\n12x\n";
  }
  CHECK_THROWS_AS(read_gap_list(dir / "bad"), InvalidArgument);
  CHECK_THROWS_AS(read_gap_list(dir / "missing"), IoError);
}

TEST_CASE("loss model validates probability")
{
  CHECK_THROWS_AS(LossModel(1.5, 0), InvalidArgument);
  LossModel never(0.0, 1);
  LossModel always(1.0, 1);
  for (int i = 0; i < 100; ++i)
  {
    CHECK_FALSE(never.drop());
    CHECK(always.drop());
  }
}
