#include "support.hpp"
#include "veriframe/frame_io.hpp"

#include <doctest.h>

#include <sstream>

using namespace veriframe;

namespace {

StreamHeader header_of(std::uint32_t w, std::uint32_t h, std::uint8_t c, std::uint64_t n)
{
  StreamHeader hd;
  hd.stream_id   = synthetic_stream_id(1);
  hd.width       = w;
  hd.height      = h;
  hd.channels    = c;
  hd.frame_count = n;
  return hd;
}

std::string to_sfv(const SyntheticStream& s)
{
  std::ostringstream out(std::ios::binary);
  write_stream(s.header, s.frames, out);
  return out.str();
}

} // namespace

TEST_CASE("write then read reproduces header and frames")
{
  for (std::uint8_t channels : {1, 3})
  {
    const auto s = generate_synthetic_stream(header_of(4, 3, channels, 10), 42);
    const std::string bytes = to_sfv(s);
    CHECK(bytes.size() == 41 + 10 * 4 * 3 * channels);

    std::istringstream in(bytes, std::ios::binary);
    StreamReader reader(in);
    CHECK(reader.header() == s.header);
    CHECK(reader.read_all() == s.frames);
  }
}

TEST_CASE("header layout is little-endian and 41 bytes")
{
  auto hd = header_of(0x0102, 0x0304, 3, 0x05);
  hd.fps_numerator   = 25;
  hd.fps_denominator = 2;
  const Bytes b = hd.encode();
  REQUIRE(b.size() == kStreamHeaderSize);
  CHECK(std::string(b.begin(), b.begin() + 4) == "SFV1");
  CHECK(b[20] == 0x02);
  CHECK(b[21] == 0x01);
  CHECK(b[24] == 0x04);
  CHECK(b[28] == 3);
  CHECK(b[29] == 25);
  CHECK(b[31] == 2);
  CHECK(b[33] == 5);
  CHECK(StreamHeader::decode(b) == hd);
}

TEST_CASE("zero-frame stream is just the header")
{
  const auto s = generate_synthetic_stream(header_of(2, 2, 1, 0), 1);
  const std::string bytes = to_sfv(s);
  CHECK(bytes.size() == 41);
  std::istringstream in(bytes, std::ios::binary);
  StreamReader reader(in);
  CHECK_FALSE(reader.next().has_value());
}

TEST_CASE("write_stream rejects malformed frames")
{
  auto s = generate_synthetic_stream(header_of(2, 2, 1, 3), 1);
  s.frames[1].pixels.pop_back();
  std::ostringstream out;
  CHECK_THROWS_WITH_AS(write_stream(s.header, s.frames, out), doctest::Contains("frame 1"), InvalidArgument);

  auto gap = generate_synthetic_stream(header_of(2, 2, 1, 3), 1);
  gap.frames[2].index = 5;
  CHECK_THROWS_AS(write_stream(gap.header, gap.frames, out), InvalidArgument);
}

TEST_CASE("reader errors carry offsets")
{
  const auto s = generate_synthetic_stream(header_of(8, 8, 1, 4), 3);
  const std::string bytes = to_sfv(s);

  SUBCASE("bad magic")
  {
    std::string bad = bytes;
    bad[0] = 'X';
    std::istringstream in(bad, std::ios::binary);
    CHECK_THROWS_WITH_AS(StreamReader{in}, doctest::Contains("magic"), ParseError);
  }
  SUBCASE("truncated header")
  {
    std::istringstream in(bytes.substr(0, 20), std::ios::binary);
    CHECK_THROWS_AS(StreamReader{in}, ParseError);
  }
  SUBCASE("invalid dimensions")
  {
    std::string bad = bytes;
    bad[28] = 2; // channels
    std::istringstream in(bad, std::ios::binary);
    CHECK_THROWS_WITH_AS(StreamReader{in}, doctest::Contains("invalid header"), ParseError);
  }
  SUBCASE("truncated final frame")
  {
    std::istringstream in(bytes.substr(0, bytes.size() - 5), std::ios::binary);
    StreamReader reader(in);
    reader.next();
    reader.next();
    reader.next();
    try
    {
      reader.next();
      FAIL("expected ParseError");
    }
    catch (const ParseError& e)
    {
      CHECK(std::string(e.what()).find("frame 3") != std::string::npos);
      CHECK(e.offset() >= 41 + 3 * 64);
    }
  }
}

TEST_CASE("selection policies")
{
  CHECK(select_frames(SelectionPolicy::all(), 5) == std::vector<std::uint64_t>{0, 1, 2, 3, 4});
  CHECK(select_frames(SelectionPolicy::every_nth(30), 303).size() == 11);
  CHECK(select_frames(SelectionPolicy::every_nth(15), 303).size() == 21);
  CHECK(select_frames(SelectionPolicy::keyframe_only(12), 25) == std::vector<std::uint64_t>{0, 12, 24});
  CHECK(select_frames(SelectionPolicy::all(), 0).empty());
  CHECK_THROWS_AS(select_frames(SelectionPolicy::every_nth(0), 10), InvalidArgument);
  CHECK_THROWS_AS(SelectionPolicy::parse("nth:0"), InvalidArgument);
  CHECK_THROWS_AS(SelectionPolicy::parse("every"), InvalidArgument);

  for (const char* text : {"all", "nth:7", "gop:12"})
  {
    CHECK(SelectionPolicy::parse(text).to_string() == text);
  }

  // All is EveryNth(1); KeyframeOnly(g) and EveryNth(g) pick the same indices.
  for (std::uint64_t n : {0ULL, 1ULL, 17ULL, 303ULL})
  {
    CHECK(select_frames(SelectionPolicy::all(), n) == select_frames(SelectionPolicy::every_nth(1), n));
    for (std::uint64_t p : {1ULL, 2ULL, 5ULL, 30ULL})
    {
      const auto picked = select_frames(SelectionPolicy::every_nth(p), n);
      CHECK(picked == select_frames(SelectionPolicy::keyframe_only(p), n));
      CHECK(picked.size() == (n + p - 1) / p);
      for (auto i : picked)
      {
        CHECK(i % p == 0);
        CHECK(i < n);
      }
    }
  }
}

TEST_CASE("synthetic frames are deterministic and seed dependent")
{
  const auto hd = header_of(16, 9, 3, 4);
  CHECK(synthetic_frame(hd, 5, 2) == synthetic_frame(hd, 5, 2));
  CHECK(synthetic_frame(hd, 5, 2) != synthetic_frame(hd, 6, 2));
  CHECK(synthetic_frame(hd, 5, 2) != synthetic_frame(hd, 5, 3));
  CHECK(synthetic_frame(hd, 5, 2).pixels.size() == 16 * 9 * 3);
  CHECK(synthetic_stream_id(1) != synthetic_stream_id(2));
}
