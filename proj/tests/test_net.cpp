#include "ledger_support.hpp"
#include "support.hpp"
#include "veriframe/digest.hpp"
#include "veriframe/ledger/api.hpp"
#include "veriframe/ledger/config.hpp"
#include "veriframe/net.hpp"
#include "veriframe/transport.hpp"

#include <doctest.h>

#include <future>
#include <random>
#include <thread>

using namespace veriframe;
using namespace std::chrono_literals;

namespace {

std::uint16_t random_base_port()
{
  std::random_device rd;
  return static_cast<std::uint16_t>(20000 + rd() % 30000);
}

struct RunningCluster
{
  explicit RunningCluster(std::size_t n)
  {
    boot                              = ledger::bootstrap_cluster(n, {}, 3, "127.0.0.1", random_base_port());
    boot.config.block_interval_ms     = 40;
    boot.config.round_timeout_ms      = 600;
    for (std::size_t i = 0; i < n; ++i)
    {
      servers.push_back(std::make_unique<net::LedgerServer>(boot.config, boot.config.members[i].id, boot.keys[i], std::nullopt));
    }
    for (auto& s : servers)
    {
      threads.emplace_back([&s] { s->run(); });
    }
  }
  ~RunningCluster()
  {
    for (auto& s : servers)
    {
      s->stop();
    }
    for (auto& t : threads)
    {
      t.join();
    }
  }
  net::Endpoint endpoint(std::size_t i) const { return net::Endpoint::parse(boot.config.members[i].address); }

  bool wait_for_height(std::uint64_t h, std::chrono::milliseconds limit) const
  {
    const auto deadline = std::chrono::steady_clock::now() + limit;
    while (std::chrono::steady_clock::now() < deadline)
    {
      bool all = true;
      for (const auto& s : servers)
      {
        all = all && s->height() >= h;
      }
      if (all)
      {
        return true;
      }
      std::this_thread::sleep_for(20ms);
    }
    return false;
  }

  ledger::Bootstrap boot;
  std::vector<std::unique_ptr<net::LedgerServer>> servers;
  std::vector<std::thread> threads;
};

} // namespace

TEST_CASE("endpoint parsing")
{
  const auto e = net::Endpoint::parse("127.0.0.1:7100");
  CHECK(e.host == "127.0.0.1");
  CHECK(e.port == 7100);
  CHECK(e.to_string() == "127.0.0.1:7100");
  CHECK_THROWS_AS(net::Endpoint::parse("7100"), InvalidArgument);
  CHECK_THROWS_AS(net::Endpoint::parse("host:99999"), InvalidArgument);
  CHECK_THROWS_AS(net::Endpoint::parse("host:"), InvalidArgument);
}

TEST_CASE("three ledger nodes over TCP commit, answer queries and agree")
{
  RunningCluster c(3);
  const StreamId sid = synthetic_stream_id(11);

  net::RemoteLedger client(c.endpoint(1));
  for (std::uint64_t f = 0; f < 5; ++f)
  {
    client.submit(testsupport::per_frame_record(sid, f));
    CHECK_FALSE(client.last_was_duplicate());
  }
  client.submit(testsupport::per_frame_record(sid, 0));
  CHECK(client.last_was_duplicate());

  REQUIRE(c.wait_for_height(1, 10s));
  // all five may span several blocks
  const auto deadline = std::chrono::steady_clock::now() + 10s;
  std::vector<ledger::QueryHit> hits;
  while (std::chrono::steady_clock::now() < deadline)
  {
    hits = net::RemoteLedger(c.endpoint(2)).query(sid, 4);
    if (!hits.empty())
    {
      break;
    }
    std::this_thread::sleep_for(20ms);
  }
  REQUIRE(hits.size() == 1);
  CHECK(hits[0].record == testsupport::per_frame_record(sid, 4));
  CHECK(hits[0].height >= 1);

  const std::uint64_t h = c.servers[0]->height();
  REQUIRE(c.wait_for_height(h, 5s));
  std::this_thread::sleep_for(200ms);
  const auto i0 = net::RemoteLedger(c.endpoint(0)).chain_info();
  CHECK(i0.members == 3);
  CHECK(i0.quorum == 2);
  for (std::size_t i = 1; i < 3; ++i)
  {
    const auto ii = net::RemoteLedger(c.endpoint(i)).chain_info();
    CHECK(ii.height == i0.height);
    CHECK(ii.tip_hash == i0.tip_hash);
  }
  CHECK(net::RemoteLedger(c.endpoint(0)).query(synthetic_stream_id(12), 0).empty());
}

TEST_CASE("unreachable ledger node is an IoError")
{
  net::RemoteLedger client(net::Endpoint{"127.0.0.1", 1}, 500ms);
  CHECK_THROWS_AS(client.chain_info(), IoError);
}

TEST_CASE("capture over TCP and UDP into ingest on loopback")
{
  StreamHeader hd;
  hd.stream_id   = synthetic_stream_id(4);
  hd.width       = 96;
  hd.height      = 40;
  hd.frame_count = 50;
  const auto s   = generate_synthetic_stream(hd, 4);

  transport::MemoryArchive archive;
  ledger::RecordingSink sink;
  std::promise<std::pair<std::uint16_t, std::uint16_t>> ports;
  net::IngestOptions opts;
  opts.hash_listen    = {"127.0.0.1", 0};
  opts.frame_listen   = {"127.0.0.1", 0};
  opts.window         = 300ms;
  opts.accept_timeout = 10s;
  opts.on_listening   = [&](std::uint16_t h, std::uint16_t f) { ports.set_value({h, f}); };
  auto ingest = std::async(std::launch::async, [&] { return net::run_ingest(opts, archive, sink); });
  const auto [hp, fp] = ports.get_future().get();

  transport::CaptureConfig cfg;
  cfg.mode = WriteMode::batch_digests(10);
  net::TcpDigestChannel dc({"127.0.0.1", hp}, 2s);
  net::UdpFrameChannel fc({"127.0.0.1", fp}, 20us);
  std::size_t i = 0;
  const auto cs = transport::run_capture_agent(
      s.header,
      [&]() -> std::optional<Frame> {
        if (i >= s.frames.size())
        {
          return std::nullopt;
        }
        return s.frames[i++];
      },
      cfg, dc, fc);
  CHECK_FALSE(cs.aborted);

  const auto summary = ingest.get();
  CHECK(summary.gaps.empty());
  CHECK(summary.records_committed == 5);
  CHECK(sink.records == digest_selected(s.frames, DigestAlgorithm::md5, cfg.mode, hd.stream_id));
}

TEST_CASE("ingest gives up when no capture agent connects")
{
  transport::NullArchive archive;
  ledger::RecordingSink sink;
  net::IngestOptions opts;
  opts.hash_listen    = {"127.0.0.1", 0};
  opts.frame_listen   = {"127.0.0.1", 0};
  opts.accept_timeout = 200ms;
  CHECK_THROWS_AS(net::run_ingest(opts, archive, sink), IoError);
}
