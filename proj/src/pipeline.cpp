#include "veriframe/pipeline.hpp"

#include <spdlog/spdlog.h>

#include <charconv>
#include <fstream>
#include <sstream>

namespace veriframe::pipeline {

PipelineResult run_pipeline(const StreamHeader& header, const transport::FrameSource& source,
                            const transport::CaptureConfig& capture, transport::ArchiveSink& archive,
                            ledger::Cluster& cluster, ledger::SimNetwork& network)
{
  ledger::ClusterSink sink(cluster);
  transport::IngestState ingest(archive, sink);
  transport::LoopbackDigestChannel digests(ingest);
  transport::LoopbackFrameChannel frames(ingest);

  PipelineResult out;
  out.capture = transport::run_capture_agent(header, source, capture, digests, frames);
  if (out.capture.aborted)
  {
    throw IoError("capture aborted: " + out.capture.error);
  }
  out.ingest           = ingest.close_window();
  out.blocks_committed = cluster.commit_pending(network);
  return out;
}

Scenario Scenario::parse(std::string_view text)
{
  Scenario s;
  if (text == "clean")
  {
    return s;
  }
  const auto colon = text.find(':');
  const std::string_view kind = text.substr(0, colon);
  const std::string arg(colon == std::string_view::npos ? std::string_view{} : text.substr(colon + 1));
  if (kind == "tampered" && !arg.empty())
  {
    s.kind   = Kind::tampered;
    auto res = std::from_chars(arg.data(), arg.data() + arg.size(), s.k);
    if (res.ec == std::errc{} && res.ptr == arg.data() + arg.size() && s.k > 0)
    {
      return s;
    }
  }
  else if (kind == "lossy" && !arg.empty())
  {
    s.kind = Kind::lossy;
    try
    {
      std::size_t used = 0;
      s.p              = std::stod(arg, &used);
      if (used == arg.size() && s.p >= 0.0 && s.p <= 1.0)
      {
        return s;
      }
    }
    catch (const std::exception&)
    {
    }
  }
  throw InvalidArgument("invalid scenario '" + std::string(text) + "' (expected clean|tampered:<k>|lossy:<p>)");
}

std::string Scenario::to_string() const
{
  switch (kind)
  {
  case Kind::clean:
    return "clean";
  case Kind::tampered:
    return "tampered:" + std::to_string(k);
  case Kind::lossy: {
    std::ostringstream s;
    s << "lossy:" << p;
    return s.str();
  }
  }
  return "?";
}

std::vector<std::uint64_t> demo_tamper_frames(std::uint64_t frames, std::uint64_t count, std::uint64_t seed)
{
  if (count > frames)
  {
    throw InvalidArgument("cannot tamper " + std::to_string(count) + " of " + std::to_string(frames) + " frames");
  }
  std::vector<std::uint64_t> ids(frames);
  for (std::uint64_t i = 0; i < frames; ++i)
  {
    ids[i] = i;
  }
  std::mt19937_64 rng(seed ^ 0x7461'6d70'6572ULL);
  for (std::uint64_t i = 0; i < count; ++i)
  {
    std::swap(ids[i], ids[i + rng() % (frames - i)]);
  }
  ids.resize(count);
  std::sort(ids.begin(), ids.end());
  return ids;
}

namespace {

template <typename F>
auto stage(const char* name, F&& f)
{
  try
  {
    return f();
  }
  catch (const StageError&)
  {
    throw;
  }
  catch (const std::exception& e)
  {
    throw StageError(name, e.what());
  }
}

void write_text(const std::filesystem::path& p, const std::string& text)
{
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out)
  {
    throw IoError("failed writing " + p.string());
  }
}

} // namespace

DemoResult run_demo(const DemoOptions& o)
{
  DemoResult result;
  const auto& dir = o.out_dir;

  StreamHeader header = stage("setup", [&] {
    std::filesystem::create_directories(dir);
    std::filesystem::remove_all(dir / "ledger");
    std::filesystem::remove(dir / "tampered.sfv");
    StreamHeader h;
    h.stream_id   = synthetic_stream_id(o.seed);
    h.width       = o.width;
    h.height      = o.height;
    h.channels    = o.channels;
    h.frame_count = o.frames;
    h.validate();
    if (o.scenario.kind == Scenario::Kind::tampered)
    {
      result.tampered_frames = demo_tamper_frames(o.frames, o.scenario.k, o.seed);
    }
    return h;
  });

  auto boot = stage("bootstrap", [&] {
    auto b = ledger::bootstrap_cluster(3, {}, o.seed);
    ledger::write_bootstrap(b, dir / "cluster");
    return b;
  });

  const auto archive_path = dir / "archive.sfv";
  const auto gaps_path    = dir / "archive.gaps";
  ledger::Cluster cluster(boot, {}, dir / "ledger");
  stage("capture", [&] {
    transport::CaptureConfig cc;
    cc.policy           = o.policy;
    cc.algorithm        = o.algorithm;
    cc.mode             = o.mode;
    cc.drop_probability = o.scenario.kind == Scenario::Kind::lossy ? o.scenario.p : 0.0;
    cc.seed             = o.seed;

    std::uint64_t next = 0;
    transport::FrameSource source = [&]() -> std::optional<Frame> {
      if (next >= header.frame_count)
      {
        return std::nullopt;
      }
      return synthetic_frame(header, o.seed, next++);
    };
    transport::FileArchive archive(archive_path, gaps_path);
    ledger::SimNetwork network(o.seed);
    result.pipeline    = run_pipeline(header, source, cc, archive, cluster, network);
    result.lost_frames = result.pipeline.ingest.gaps;
    return 0;
  });
  result.chain_file = dir / "ledger" / "node-0.chain";

  const auto exhibit = stage("tamper", [&] {
    if (result.tampered_frames.empty())
    {
      return archive_path;
    }
    const auto out = dir / "tampered.sfv";
    verify::tamper_file(archive_path, out, result.tampered_frames, verify::Mutation::byte_flip, o.seed);
    return out;
  });

  result.report = stage("verify", [&] {
    const auto config = ledger::ClusterConfig::load(dir / "cluster" / "cluster.toml");
    ledger::SnapshotLedger snapshot(result.chain_file, &config);
    return verify::verify_stream(exhibit, gaps_path, snapshot, {o.policy, o.algorithm, o.mode});
  });
  result.exit_code = verify::exit_code(result.report.overall);

  stage("report", [&] {
    result.report_json = dir / "report.json";
    result.report_text = dir / "report.txt";
    write_text(result.report_json, verify::render_json(result.report));
    write_text(result.report_text, verify::render_text(result.report));
    return 0;
  });
  spdlog::info("demo {}: {} ({} frames, {} blocks)", o.scenario.to_string(), verify::to_string(result.report.overall),
               o.frames, result.pipeline.blocks_committed);
  return result;
}

} // namespace veriframe::pipeline
