#include "ledger_support.hpp"
#include "support.hpp"
#include "veriframe/pipeline.hpp"
#include "veriframe/verifier.hpp"

#include <doctest.h>

#include <sstream>

using namespace veriframe;
using namespace veriframe::verify;

namespace {

struct Captured
{
  SyntheticStream stream;
  std::unique_ptr<ledger::Cluster> cluster;
  Bytes archive;
  std::set<std::uint64_t> gaps;
};

Captured capture(std::uint64_t frames, const VerifyParams& p, std::uint64_t seed = 3, double drop = 0.0,
                 std::uint32_t w = 16, std::uint32_t h = 12)
{
  Captured c;
  StreamHeader hd;
  hd.stream_id   = synthetic_stream_id(seed);
  hd.width       = w;
  hd.height      = h;
  hd.frame_count = frames;
  c.stream       = generate_synthetic_stream(hd, seed);
  c.cluster      = std::make_unique<ledger::Cluster>(ledger::bootstrap_cluster(3, {}, seed));

  transport::CaptureConfig cc;
  cc.policy           = p.policy;
  cc.algorithm        = p.algorithm;
  cc.mode             = p.mode;
  cc.drop_probability = drop;
  cc.seed             = seed;
  std::size_t i       = 0;
  transport::MemoryArchive archive;
  ledger::SimNetwork net(seed);
  pipeline::run_pipeline(
      hd, [&]() -> std::optional<Frame> { return i < c.stream.frames.size() ? std::optional(c.stream.frames[i++]) : std::nullopt; },
      cc, archive, *c.cluster, net);
  c.archive = archive.sfv_bytes();
  c.gaps.insert(archive.gaps.begin(), archive.gaps.end());
  return c;
}

VerificationReport run_verify(const Captured& c, const Bytes& archive, const VerifyParams& p)
{
  std::istringstream in(std::string(archive.begin(), archive.end()), std::ios::binary);
  StreamReader reader(in);
  ledger::StoreView view(c.cluster->node(0).store());
  return verify_stream(reader, c.gaps, view, p);
}

class FailingLedger : public ledger::LedgerView
{
public:
  std::vector<ledger::QueryHit> query(const StreamId&, std::uint64_t) const override
  {
    throw IoError("ledger unreachable");
  }
};

} // namespace

TEST_CASE("untampered archive is authentic")
{
  const VerifyParams p{};
  const auto c = capture(100, p);
  const auto r = run_verify(c, c.archive, p);
  CHECK(r.overall == Overall::authentic);
  CHECK(r.count(Status::authentic) == 100);
  CHECK(exit_code(r.overall) == 0);
  REQUIRE(r.verdicts[5].matched.has_value());
  CHECK(r.verdicts[5].matched->height >= 1);
}

TEST_CASE("byte flips are localized per frame")
{
  const VerifyParams p{};
  const auto c = capture(100, p);
  const std::vector<std::uint64_t> ids{3, 17};
  const Bytes bad = tamper(c.archive, ids, Mutation::byte_flip, 5);
  const auto r    = run_verify(c, bad, p);
  CHECK(r.frames_with(Status::tampered) == ids);
  CHECK(r.count(Status::authentic) == 98);
  CHECK(r.overall == Overall::tampered);
  CHECK(exit_code(r.overall) == 2);
}

TEST_CASE("batch granularity marks the whole batch")
{
  const VerifyParams p{SelectionPolicy::all(), DigestAlgorithm::md5, WriteMode::batch_digests(30)};
  const auto c = capture(100, p);
  Bytes bad    = c.archive;
  bad[kStreamHeaderSize + 12 * 16 * 12 + 40] ^= 0x01; // one pixel of frame 12
  const auto r = run_verify(c, bad, p);
  std::vector<std::uint64_t> first_batch(30);
  std::iota(first_batch.begin(), first_batch.end(), 0);
  CHECK(r.frames_with(Status::tampered) == first_batch);
  CHECK(r.count(Status::authentic) == 70);
}

TEST_CASE("soundness across policies, algorithms and modes")
{
  for (auto algo : {DigestAlgorithm::md5, DigestAlgorithm::sha256})
  {
    for (auto mode : {WriteMode::per_frame(), WriteMode::batch_bytes(30), WriteMode::batch_digests(30),
                      WriteMode::batch_bytes(4)})
    {
      for (auto policy : {SelectionPolicy::all(), SelectionPolicy::every_nth(15), SelectionPolicy::keyframe_only(7)})
      {
        const VerifyParams p{policy, algo, mode};
        const auto c = capture(64, p, 11);
        const auto r = run_verify(c, c.archive, p);
        CHECK(r.overall == Overall::authentic);
        CHECK(r.count(Status::tampered) == 0);
        CHECK(r.count(Status::authentic) == select_frames(policy, 64).size());
        CHECK(r.count(Status::not_covered) == 64 - select_frames(policy, 64).size());
      }
    }
  }
}

TEST_CASE("completeness: any covered pixel change is detected")
{
  std::mt19937_64 rng(17);
  for (auto mode : {WriteMode::per_frame(), WriteMode::batch_bytes(5), WriteMode::batch_digests(5)})
  {
    const VerifyParams p{SelectionPolicy::every_nth(2), DigestAlgorithm::sha256, mode};
    const auto c = capture(20, p);
    for (int trial = 0; trial < 10; ++trial)
    {
      const std::uint64_t frame = 2 * (rng() % 10);
      Bytes bad                 = c.archive;
      bad[kStreamHeaderSize + frame * 192 + rng() % 192] ^= static_cast<std::uint8_t>(1 + rng() % 255);
      const auto r = run_verify(c, bad, p);
      CHECK(r.verdicts[frame].status == Status::tampered);
      const std::uint64_t k     = mode.batch_size();
      const std::uint64_t group = (frame / 2) / k;
      for (std::uint64_t f = 0; f < 20; ++f)
      {
        const bool selected = f % 2 == 0;
        const bool in_group = selected && (f / 2) / k == group;
        CHECK(r.verdicts[f].status ==
              (in_group ? Status::tampered : selected ? Status::authentic : Status::not_covered));
      }
    }
  }
}

TEST_CASE("lost frames are never tampered")
{
  for (auto mode : {WriteMode::per_frame(), WriteMode::batch_digests(4)})
  {
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL, 4ULL})
    {
      const VerifyParams p{SelectionPolicy::all(), DigestAlgorithm::md5, mode};
      const auto c = capture(40, p, seed, 0.05, 64, 40); // two fragments per frame
      const auto r = run_verify(c, c.archive, p);
      CHECK(r.count(Status::tampered) == 0);
      for (auto g : c.gaps)
      {
        CHECK((r.verdicts[g].status == Status::not_on_ledger || r.verdicts[g].status == Status::frame_missing));
        CHECK(c.cluster->node(0).store().query(c.stream.header.stream_id, g).empty());
      }
      if (mode == WriteMode::per_frame())
      {
        CHECK(r.count(Status::not_on_ledger) + r.count(Status::frame_missing) == c.gaps.size());
      }
      CHECK(r.overall == (c.gaps.empty() ? Overall::authentic : Overall::incomplete));
    }
  }
}

TEST_CASE("gap frames with ledger coverage are FrameMissing")
{
  const VerifyParams p{};
  auto c = capture(10, p);
  c.gaps = {4};
  const auto r = run_verify(c, c.archive, p);
  CHECK(r.verdicts[4].status == Status::frame_missing);
  CHECK(r.overall == Overall::incomplete);
  CHECK(exit_code(r.overall) == 3);
}

TEST_CASE("mismatched parameters yield NotOnLedger")
{
  const VerifyParams p{};
  const auto c = capture(10, p);
  const auto r = run_verify(c, c.archive, {SelectionPolicy::all(), DigestAlgorithm::sha256, WriteMode::per_frame()});
  CHECK(r.count(Status::not_on_ledger) == 10);
  CHECK(r.overall == Overall::incomplete);
}

TEST_CASE("discovery lists committed modes")
{
  const VerifyParams p{SelectionPolicy::all(), DigestAlgorithm::sha256, WriteMode::batch_bytes(3)};
  const auto c = capture(10, p);
  ledger::StoreView view(c.cluster->node(0).store());
  const auto modes = discover_modes(view, c.stream.header.stream_id);
  REQUIRE(modes.size() == 1);
  CHECK(modes[0].first == DigestAlgorithm::sha256);
  CHECK(modes[0].second == WriteMode::batch_bytes(3));
}

TEST_CASE("ledger failure aborts verification")
{
  const auto c = capture(3, {});
  std::istringstream in(std::string(c.archive.begin(), c.archive.end()), std::ios::binary);
  StreamReader reader(in);
  FailingLedger ledger;
  CHECK_THROWS_AS(verify_stream(reader, {}, ledger, {}), IoError);
}

TEST_CASE("report rendering round trips and is deterministic")
{
  const VerifyParams p{SelectionPolicy::every_nth(3), DigestAlgorithm::md5, WriteMode::batch_bytes(2)};
  const auto c   = capture(20, p);
  const Bytes bad = tamper(c.archive, std::vector<std::uint64_t>{6}, Mutation::region_overwrite, 1);
  const auto r    = run_verify(c, bad, p);
  const std::string json = render_json(r);
  CHECK(parse_report_json(json) == r);
  CHECK(render_json(run_verify(c, bad, p)) == json);
  CHECK(json.find("\"stream_id\"") < json.find("\"verdicts\""));
  CHECK(render_text(r).find("TAMPERED") != std::string::npos);
  CHECK_THROWS_AS(parse_report_json("{}"), InvalidArgument);

  CHECK(exit_code(Overall::authentic) == 0);
  CHECK(exit_code(Overall::tampered) == 2);
  CHECK(exit_code(Overall::incomplete) == 3);
}

TEST_CASE("tamper tool")
{
  const auto s = generate_synthetic_stream([] {
    StreamHeader h;
    h.width       = 32;
    h.height      = 16;
    h.channels    = 3;
    h.frame_count = 8;
    return h;
  }(), 4);
  std::ostringstream out(std::ios::binary);
  write_stream(s.header, s.frames, out);
  const std::string str = out.str();
  const Bytes original(str.begin(), str.end());
  const std::size_t fsize = 32 * 16 * 3;

  auto diff_positions = [&](const Bytes& b) {
    std::vector<std::size_t> d;
    for (std::size_t i = 0; i < b.size(); ++i)
    {
      if (b[i] != original[i])
      {
        d.push_back(i);
      }
    }
    return d;
  };

  const std::vector<std::uint64_t> zero{0};
  const Bytes flipped = tamper(original, zero, Mutation::byte_flip, 9);
  CHECK(diff_positions(flipped).size() == 1);
  CHECK(diff_positions(flipped)[0] >= kStreamHeaderSize);
  CHECK(diff_positions(flipped)[0] < kStreamHeaderSize + fsize);

  CHECK(tamper(original, {}, Mutation::region_overwrite, 9) == original);
  const std::vector<std::uint64_t> some{5, 2};
  CHECK(tamper(original, some, Mutation::region_overwrite, 3) == tamper(original, some, Mutation::region_overwrite, 3));

  const Bytes region = tamper(original, some, Mutation::region_overwrite, 3);
  for (auto pos : diff_positions(region))
  {
    const auto frame = (pos - kStreamHeaderSize) / fsize;
    CHECK((frame == 2 || frame == 5));
  }
  CHECK(diff_positions(region).size() >= 2 * 8 * 4 * 3 - 4); // an inverted byte can't stay equal

  const std::vector<std::uint64_t> bad{8};
  CHECK_THROWS_AS(tamper(original, bad, Mutation::byte_flip, 1), InvalidArgument);
  CHECK_THROWS_AS(parse_mutation("smudge"), InvalidArgument);
}

TEST_CASE("demo scenarios")
{
  testsupport::TempDir dir;
  pipeline::DemoOptions o;
  o.out_dir = dir.path();
  o.frames  = 40;
  o.width   = 32;
  o.height  = 20;

  const auto clean = pipeline::run_demo(o);
  CHECK(clean.exit_code == 0);
  CHECK(clean.report.count(Status::authentic) == 40);
  CHECK(std::filesystem::exists(clean.report_json));

  o.scenario = pipeline::Scenario::parse("tampered:5");
  const auto t = pipeline::run_demo(o);
  CHECK(t.exit_code == 2);
  CHECK(t.report.frames_with(Status::tampered) == t.tampered_frames);
  CHECK(t.tampered_frames.size() == 5);

  CHECK(render_json(pipeline::run_demo(o).report) == render_json(t.report));

  o.scenario = pipeline::Scenario::parse("lossy:0.3");
  const auto l = pipeline::run_demo(o);
  CHECK_FALSE(l.lost_frames.empty());
  CHECK(l.exit_code == 3);
  CHECK(l.report.count(Status::tampered) == 0);

  CHECK_THROWS_AS(pipeline::Scenario::parse("tampered:0"), InvalidArgument);
  CHECK_THROWS_AS(pipeline::Scenario::parse("lossy:2"), InvalidArgument);
  CHECK_THROWS_AS(pipeline::Scenario::parse("noisy"), InvalidArgument);
  CHECK(pipeline::demo_tamper_frames(10, 10, 1).size() == 10);
  CHECK_THROWS_AS(pipeline::demo_tamper_frames(10, 11, 1), InvalidArgument);
}
