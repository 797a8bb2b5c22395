#include "veriframe/bench.hpp"

#include <doctest.h>

#include <fstream>
#include <sstream>

using namespace veriframe;
using namespace veriframe::bench;

namespace {

BenchConfig tiny()
{
  BenchConfig c;
  c.resolutions     = {{"a", 16, 8}, {"b", 32, 16}};
  c.frames          = 303;
  c.repetitions     = 3;
  c.e2e_repetitions = 1;
  return c;
}

const CellResult& find(const BenchResult& r, const std::string& res, DigestAlgorithm a, WriteMode m,
                       SelectionPolicy p)
{
  for (const auto& c : r.cells)
  {
    if (c.resolution.name == res && c.algorithm == a && c.mode == m && c.policy == p)
    {
      return c;
    }
  }
  throw std::runtime_error("cell not found");
}

std::vector<CellResult> synthetic_cells(const std::vector<Resolution>& resolutions)
{
  std::vector<CellResult> cells;
  for (const auto& r : resolutions)
  {
    for (auto a : {DigestAlgorithm::md5, DigestAlgorithm::sha256})
    {
      for (auto p : {SelectionPolicy::all(), SelectionPolicy::every_nth(30)})
      {
        CellResult c;
        c.resolution          = r;
        c.algorithm           = a;
        c.policy              = p;
        c.frames              = 303;
        c.reps                = 20;
        const double scale    = static_cast<double>(r.pixels()) * (p == SelectionPolicy::all() ? 303 : 11);
        c.median_serialize_us = scale * 1e-4;
        c.median_hash_us      = scale * (a == DigestAlgorithm::md5 ? 2e-3 : 4e-3);
        cells.push_back(c);
      }
    }
  }
  return cells;
}

} // namespace

TEST_CASE("bench counts follow mode arithmetic")
{
  const auto r = run_bench(tiny());
  CHECK(r.cells.size() == 2 * 2 * 3 * 3);
  const std::uint64_t fsize = 16 * 8;
  for (auto a : {DigestAlgorithm::md5, DigestAlgorithm::sha256})
  {
    const std::uint64_t d = digest_size(a);
    const auto& pf        = find(r, "a", a, WriteMode::per_frame(), SelectionPolicy::all());
    CHECK(pf.records == 303);
    CHECK(pf.bytes_hashed == 303 * fsize);
    const auto& bb = find(r, "a", a, WriteMode::batch_bytes(30), SelectionPolicy::all());
    CHECK(bb.records == 11);
    CHECK(bb.bytes_hashed == 303 * fsize);
    const auto& bd = find(r, "a", a, WriteMode::batch_digests(30), SelectionPolicy::all());
    CHECK(bd.records == 11);
    CHECK(bd.bytes_hashed == 303 * d);
    CHECK(bd.bytes_hashed < bb.bytes_hashed);
    CHECK(find(r, "a", a, WriteMode::per_frame(), SelectionPolicy::every_nth(30)).records == 11);
    CHECK(find(r, "a", a, WriteMode::per_frame(), SelectionPolicy::every_nth(15)).records == 21);
    CHECK(find(r, "a", a, WriteMode::batch_digests(30), SelectionPolicy::every_nth(15)).records == 1);
  }
  for (const auto& c : r.cells)
  {
    CHECK(c.median_serialize_us >= 0);
    CHECK(c.median_hash_us >= 0);
    REQUIRE(c.median_e2e_us.has_value());
    CHECK(*c.median_e2e_us >= 0);
  }
  // Counts are reproducible; only times vary.
  const auto again = run_bench(tiny());
  for (std::size_t i = 0; i < r.cells.size(); ++i)
  {
    CHECK(again.cells[i].bytes_hashed == r.cells[i].bytes_hashed);
    CHECK(again.cells[i].records == r.cells[i].records);
  }
}

TEST_CASE("csv round trip keeps every non-timing field")
{
  auto cfg            = tiny();
  cfg.e2e_repetitions = 0;
  cfg.modes           = {WriteMode::batch_digests(30)};
  const auto r        = run_bench(cfg);
  std::stringstream ss;
  write_csv(r.cells, ss);
  const auto parsed = parse_csv(ss);
  REQUIRE(parsed.size() == r.cells.size());
  for (std::size_t i = 0; i < parsed.size(); ++i)
  {
    CHECK(parsed[i].resolution == r.cells[i].resolution);
    CHECK(parsed[i].algorithm == r.cells[i].algorithm);
    CHECK(parsed[i].mode == r.cells[i].mode);
    CHECK(parsed[i].policy == r.cells[i].policy);
    CHECK(parsed[i].frames == r.cells[i].frames);
    CHECK(parsed[i].reps == r.cells[i].reps);
    CHECK(parsed[i].bytes_hashed == r.cells[i].bytes_hashed);
    CHECK(parsed[i].records == r.cells[i].records);
    CHECK_FALSE(parsed[i].median_e2e_us.has_value());
  }
  std::istringstream bad("resolution,width\nv1,2\n");
  CHECK_THROWS_AS(parse_csv(bad), ParseError);
}

TEST_CASE("trend assertions and negative controls")
{
  const auto good = synthetic_cells(resolution_presets());
  for (const auto& chk : compare_trend(good))
  {
    CHECK_MESSAGE(chk.pass, chk.name << ": " << chk.detail);
  }

  // Swap the v1 and v6 timings.
  auto swapped = good;
  for (auto& c : swapped)
  {
    for (const auto& o : good)
    {
      const bool pair = (c.resolution.name == "v1" && o.resolution.name == "v6") ||
                        (c.resolution.name == "v6" && o.resolution.name == "v1");
      if (pair && o.algorithm == c.algorithm && o.policy == c.policy)
      {
        c.median_serialize_us = o.median_serialize_us;
        c.median_hash_us      = o.median_hash_us;
      }
    }
  }
  const auto checks = compare_trend(swapped);
  CHECK_FALSE(checks[0].pass);
  CHECK(checks[0].name == "monotone");

  auto slow_md5 = good;
  slow_md5[0].median_hash_us *= 10;
  CHECK_FALSE(compare_trend(slow_md5)[1].pass);

  const auto single = synthetic_cells({resolution_presets()[0]});
  const auto missing = compare_trend(single);
  REQUIRE(missing.size() == 1);
  CHECK_FALSE(missing[0].pass);
  CHECK(missing[0].detail.find("v6") != std::string::npos);
}

TEST_CASE("config parsing")
{
  const auto c = BenchConfig::from_toml(R"(
frames = 60
repetitions = 5
algorithms = ["sha256"]
modes = ["batchdigests:10"]
policies = ["gop:12"]
presets = ["v2"]
[[resolution]]
name = "tiny"
width = 4
height = 2
)");
  CHECK(c.frames == 60);
  CHECK(c.algorithms == std::vector<DigestAlgorithm>{DigestAlgorithm::sha256});
  CHECK(c.modes == std::vector<WriteMode>{WriteMode::batch_digests(10)});
  REQUIRE(c.resolutions.size() == 2);
  CHECK(c.resolutions[0] == resolution_presets()[1]);
  CHECK(c.resolutions[1] == Resolution{"tiny", 4, 2});

  CHECK(BenchConfig::from_toml("").resolutions == resolution_presets());
  CHECK_THROWS_AS(BenchConfig::from_toml("repetitions = 2"), InvalidArgument);
  CHECK_THROWS_AS(BenchConfig::from_toml("presets = [\"v9\"]"), InvalidArgument);
  CHECK_THROWS_AS(BenchConfig::from_toml("modes = [\"zip\"]"), InvalidArgument);
  CHECK_THROWS_AS(BenchConfig::from_toml("frames = ["), InvalidArgument);
  CHECK_NOTHROW(BenchConfig::load(VERIFRAME_DATA_DIR "/bench.toml"));
  CHECK(BenchConfig::load(VERIFRAME_DATA_DIR "/bench-quick.toml").repetitions >= 20);
}

TEST_CASE("presets and reference table")
{
  const auto& p = resolution_presets();
  REQUIRE(p.size() == 6);
  CHECK(p[0].pixels() == 34304);
  CHECK(p[5].pixels() == 1943040);

  std::ostringstream out;
  write_reference_csv(out);
  std::ifstream in(VERIFRAME_DATA_DIR "/table3_reference.csv");
  std::stringstream file;
  file << in.rdbuf();
  CHECK(out.str() == file.str());

  const auto& ref = reference_times();
  for (std::size_t i = 1; i < ref.size(); ++i)
  {
    CHECK(ref[i].conversion_ms + ref[i].hashing_ms > ref[i - 1].conversion_ms + ref[i - 1].hashing_ms);
    CHECK(ref[i].resolution == p[i]);
  }
}
