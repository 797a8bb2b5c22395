#include "ledger_support.hpp"
#include "support.hpp"
#include "veriframe/ledger/node.hpp"
#include "veriframe/ledger/sim.hpp"

#include <doctest.h>

#include <algorithm>
#include <numeric>

using namespace veriframe;
using namespace veriframe::ledger;
using testsupport::per_frame_record;

namespace {

const StreamId kStream = synthetic_stream_id(31);

void submit_frames(Cluster& c, std::uint64_t from, std::uint64_t count)
{
  for (std::uint64_t f = from; f < from + count; ++f)
  {
    c.submit(per_frame_record(kStream, f));
  }
}

std::size_t honest_committed(const CommitResult& r)
{
  return static_cast<std::size_t>(std::count_if(r.nodes.begin(), r.nodes.end(), [](const NodeRoundReport& n) {
    return n.honest && n.outcome == RoundOutcome::committed;
  }));
}

bool honest_chains_identical(const Cluster& c)
{
  const Bytes* first = nullptr;
  for (const auto& n : c.nodes())
  {
    if (!n.honest())
    {
      continue;
    }
    if (first == nullptr)
    {
      first = &n.store().log_bytes();
    }
    else if (n.store().log_bytes() != *first)
    {
      return false;
    }
  }
  return true;
}

} // namespace

TEST_CASE("three honest members commit")
{
  Cluster c(bootstrap_cluster(3));
  submit_frames(c, 0, 5);
  SimNetwork net(1);
  const auto r = c.run_round(net, 0);
  REQUIRE(r.committed.has_value());
  CHECK(r.height == 1);
  CHECK(honest_committed(r) == 3);
  for (const auto& n : c.nodes())
  {
    CHECK(n.store().height() == 1);
    CHECK(n.store().tip().votes.size() >= 2);
    CHECK(n.pending() == 0);
    CHECK_FALSE(validate_chain(n.store()).has_value());
  }
  CHECK(honest_chains_identical(c));
  CHECK(c.node(0).store().tip().block.txs.size() == 5);
}

TEST_CASE("four members with one silent validator commit")
{
  Cluster c(bootstrap_cluster(4), {Fault::none, Fault::none, Fault::none, Fault::silent});
  submit_frames(c, 0, 3);
  SimNetwork net(2);
  const auto r = c.run_round(net, 0); // leader of height 1 is member 1
  REQUIRE(r.committed.has_value());
  CHECK(honest_committed(r) == 3);
  CHECK(c.node(3).store().height() == 0);
  CHECK(honest_chains_identical(c));
}

TEST_CASE("four members with two byzantine validators never commit")
{
  const std::vector<std::vector<Fault>> scripts{
      {Fault::none, Fault::none, Fault::silent, Fault::silent},
      {Fault::none, Fault::none, Fault::garbage_signature, Fault::garbage_signature},
      {Fault::none, Fault::none, Fault::silent, Fault::garbage_signature},
      {Fault::garbage_signature, Fault::none, Fault::none, Fault::silent},
  };
  for (const auto& faults : scripts)
  {
    for (std::uint64_t seed = 0; seed < 20; ++seed)
    {
      Cluster c(bootstrap_cluster(4), faults);
      submit_frames(c, 0, 2);
      SimNetwork net(seed);
      for (std::uint64_t view = 0; view < 4; ++view)
      {
        const auto r = c.run_round(net, view);
        CHECK_FALSE(r.committed.has_value());
      }
      for (const auto& n : c.nodes())
      {
        CHECK(n.store().height() == 0);
      }
    }
  }
}

TEST_CASE("equivocating leader aborts the round")
{
  for (std::size_t n : {3u, 4u, 5u})
  {
    std::vector<Fault> faults(n, Fault::none);
    faults[1] = Fault::equivocate; // leader of height 1, view 0
    for (std::uint64_t seed = 0; seed < 10; ++seed)
    {
      Cluster c(bootstrap_cluster(n), faults);
      submit_frames(c, 0, 2);
      SimNetwork net(seed);
      const auto r = c.run_round(net, 0);
      CHECK_FALSE(r.committed.has_value());
      for (const auto& node : r.nodes)
      {
        if (node.id != 1)
        {
          CHECK(node.outcome == RoundOutcome::aborted_conflict);
        }
      }
      // The next view has an honest leader and succeeds.
      CHECK(c.run_round(net, 1).committed.has_value());
      CHECK(honest_chains_identical(c));
    }
  }
}

TEST_CASE("quorum threshold exactness")
{
  for (std::size_t n : {3u, 4u, 5u, 7u})
  {
    const std::size_t q = quorum_for(n);
    CAPTURE(n);
    for (std::size_t honest : {q - 1, q})
    {
      for (std::uint64_t seed = 0; seed < 10; ++seed)
      {
        std::mt19937_64 rng(seed * 131 + n);
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), rng);
        std::vector<Fault> faults(n, Fault::none);
        for (std::size_t i = honest; i < n; ++i)
        {
          faults[order[i]] = (rng() & 1) ? Fault::silent : Fault::garbage_signature;
        }
        Cluster c(bootstrap_cluster(n, {}, seed), faults);
        submit_frames(c, 0, 3);
        SimNetwork net(seed);
        if (honest == q)
        {
          CHECK(c.commit_pending(net) == 1);
          CHECK(honest_chains_identical(c));
        }
        else
        {
          CHECK_THROWS_AS(c.commit_pending(net), LedgerError);
          for (const auto& node : c.nodes())
          {
            CHECK(node.store().height() == 0);
          }
        }
      }
    }
  }
}

TEST_CASE("multi-block chains stay identical across schedules")
{
  for (std::uint64_t seed = 0; seed < 5; ++seed)
  {
    auto boot = bootstrap_cluster(5, {}, seed);
    boot.config.max_block_txs = 4;
    boot.config.leader_rule   = LeaderRule::seeded_random;
    Cluster c(boot);
    submit_frames(c, 0, 18);
    SimNetwork net(seed);
    CHECK(c.commit_pending(net) == 5);
    CHECK(honest_chains_identical(c));
    CHECK(c.node(0).store().height() == 5);
    CHECK_FALSE(validate_chain(c.node(2).store()).has_value());
  }
}

TEST_CASE("persisted cluster chains reopen")
{
  testsupport::TempDir dir;
  const auto boot = bootstrap_cluster(3);
  {
    Cluster c(boot, {}, dir.path());
    submit_frames(c, 0, 4);
    SimNetwork net(3);
    c.commit_pending(net);
  }
  for (int id = 0; id < 3; ++id)
  {
    auto s = BlockStore::open(dir / ("node-" + std::to_string(id) + ".chain"), boot.config);
    CHECK(s.height() == 1);
  }
}

TEST_CASE("assemble_block")
{
  const auto boot = bootstrap_cluster(3);
  auto store      = BlockStore::in_memory(boot.config);
  const auto r1   = per_frame_record(kStream, 1);
  const auto r2   = per_frame_record(kStream, 2);
  std::vector<Transaction> pending{Transaction::make(r2, 20), Transaction::make(r1, 10), Transaction::make(r1, 10)};
  const auto b = assemble_block(pending, store.tip(), 0, {}, 1'800'000'000'000'000ULL, store);
  REQUIRE(b.has_value());
  CHECK(b->header.height == 1);
  CHECK(b->header.prev_hash == store.tip_hash());
  CHECK(b->txs == std::vector<DigestRecord>{r1, r2});
  CHECK_FALSE(assemble_block({}, store.tip(), 0, {}, 0, store).has_value());

  BlockLimits one{1};
  CHECK(assemble_block(pending, store.tip(), 0, one, 0, store)->txs.size() == 1);

  CommittedBlock stale = store.tip();
  stale.block.header.timestamp_us += 1;
  CHECK_THROWS_AS(assemble_block(pending, stale, 0, {}, 0, store), LedgerError);
}

TEST_CASE("duplicate submissions are pooled once")
{
  Cluster c(bootstrap_cluster(3));
  c.submit(per_frame_record(kStream, 1));
  c.submit(per_frame_record(kStream, 1));
  CHECK(c.node(0).pending() == 1);
  SimNetwork net(0);
  c.commit_pending(net);
  CHECK_FALSE(c.node(0).submit(per_frame_record(kStream, 1), 0));
}

TEST_CASE("messages from non-members and stale views are ignored")
{
  auto boot = bootstrap_cluster(3);
  Cluster c(boot);
  submit_frames(c, 0, 1);
  auto& leader = c.node(1);
  const auto out = leader.begin_round(0, c.now_us() + 1);
  REQUIRE(out.size() == 2);
  auto& v = c.node(0);
  v.begin_round(0, c.now_us() + 1);
  CHECK(v.receive(9, out[0].message).empty());
  auto p = std::get<Propose>(out[0].message);
  p.view = 3;
  CHECK(v.receive(1, p).empty());
  CHECK_FALSE(v.proposal_hash().has_value());
}

TEST_CASE("a lagging faulty first member does not derail later heights")
{
  for (std::uint64_t seed = 0; seed < 20; ++seed)
  {
    CAPTURE(seed);
    auto boot                 = bootstrap_cluster(4, {}, seed);
    boot.config.max_block_txs = 2;
    Cluster c(boot, {Fault::silent});
    submit_frames(c, 0, 7);
    SimNetwork net(seed);
    CHECK(c.commit_pending(net) == 4);
    CHECK(honest_chains_identical(c));
    CHECK(c.node(0).store().height() == 0);
    CHECK(c.node(3).store().height() == 4);
  }
}
