#include "veriframe/bench.hpp"
#include "veriframe/ledger/config.hpp"
#include "veriframe/ledger/store.hpp"
#include "veriframe/net.hpp"
#include "veriframe/pipeline.hpp"
#include "veriframe/transport.hpp"
#include "veriframe/verifier.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <csignal>
#include <fstream>
#include <iostream>
#include <pthread.h>
#include <thread>

using namespace veriframe;
namespace fs = std::filesystem;

namespace {

struct Globals
{
  std::uint64_t seed    = 1;
  std::string log_level = "info";
};

void write_text(const fs::path& path, const std::string& text)
{
  if (path.has_parent_path())
  {
    fs::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out)
  {
    throw IoError("cannot write " + path.string());
  }
}

std::ifstream open_input(const fs::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
  {
    throw IoError("cannot open " + path.string());
  }
  return in;
}

// Blocks SIGINT/SIGTERM in every thread and calls `on_signal` from a waiter.
class SignalStop
{
public:
  explicit SignalStop(std::function<void()> on_signal)
  {
    sigemptyset(&set_);
    sigaddset(&set_, SIGINT);
    sigaddset(&set_, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set_, nullptr);
    waiter_ = std::thread([this, f = std::move(on_signal)] {
      int sig = 0;
      sigwait(&set_, &sig);
      if (!done_)
      {
        spdlog::info("signal {}, shutting down", sig);
        f();
      }
    });
  }
  ~SignalStop()
  {
    done_ = true;
    pthread_kill(waiter_.native_handle(), SIGTERM);
    waiter_.join();
  }

private:
  sigset_t set_{};
  std::atomic<bool> done_{false};
  std::thread waiter_;
};

// --- bootstrap

struct BootstrapArgs
{
  std::size_t n = 3;
  std::vector<std::string> names;
  fs::path out = "cluster";
  std::string host = "127.0.0.1";
  std::uint16_t base_port = 7100;
};

int cmd_bootstrap(const BootstrapArgs& a, const Globals& g)
{
  const auto boot = ledger::bootstrap_cluster(a.n, a.names, g.seed, a.host, a.base_port);
  ledger::write_bootstrap(boot, a.out);
  std::cout << "wrote " << (a.out / "cluster.toml").string() << " and " << boot.keys.size() << " key files\n";
  for (const auto& m : boot.config.members)
  {
    std::cout << "  " << m.id << "  " << m.name << "  " << m.address << "\n";
  }
  std::cout << "quorum " << boot.config.quorum() << " of " << boot.config.n() << "\n";
  return 0;
}

// --- generate

struct GenerateArgs
{
  fs::path out;
  std::uint32_t width    = 256;
  std::uint32_t height   = 134;
  unsigned channels      = 1;
  std::uint64_t frames   = 303;
  std::uint16_t fps      = 30;
};

int cmd_generate(const GenerateArgs& a, const Globals& g)
{
  StreamHeader h;
  h.stream_id     = synthetic_stream_id(g.seed);
  h.width         = a.width;
  h.height        = a.height;
  h.channels      = static_cast<std::uint8_t>(a.channels);
  h.fps_numerator = a.fps;
  h.frame_count   = a.frames;
  h.validate();
  const auto s = generate_synthetic_stream(h, g.seed);
  if (a.out.has_parent_path())
  {
    fs::create_directories(a.out.parent_path());
  }
  std::ofstream out(a.out, std::ios::binary | std::ios::trunc);
  const auto n = write_stream(s.header, s.frames, out);
  if (!out)
  {
    throw IoError("cannot write " + a.out.string());
  }
  std::cout << "wrote " << a.out.string() << " (" << n << " bytes, stream " << to_hex(h.stream_id) << ")\n";
  return 0;
}

// --- capture

struct CaptureArgs
{
  fs::path input;
  std::string hash_addr  = "127.0.0.1:7000";
  std::string frame_addr = "127.0.0.1:7001";
  std::string policy     = "all";
  std::string algo       = "md5";
  std::string mode       = "perframe";
  double drop            = 0.0;
  unsigned pace_us       = 50;
  unsigned connect_timeout_ms = 5000;
};

int cmd_capture(const CaptureArgs& a, const Globals& g)
{
  transport::CaptureConfig cfg;
  cfg.policy           = SelectionPolicy::parse(a.policy);
  cfg.algorithm        = parse_algorithm(a.algo);
  cfg.mode             = WriteMode::parse(a.mode);
  cfg.drop_probability = a.drop;
  cfg.seed             = g.seed;
  const auto hash_ep   = net::Endpoint::parse(a.hash_addr);
  const auto frame_ep  = net::Endpoint::parse(a.frame_addr);

  auto in     = open_input(a.input);
  auto reader = read_stream(in);
  net::TcpDigestChannel dc(hash_ep, std::chrono::milliseconds(a.connect_timeout_ms));
  net::UdpFrameChannel fc(frame_ep, std::chrono::microseconds(a.pace_us));
  const auto s = transport::run_capture_agent(reader, cfg, dc, fc);
  std::cout << "frames sent " << s.frames_sent << ", records sent " << s.records_sent << ", datagrams "
            << s.datagrams_sent << " (" << s.datagrams_dropped << " dropped by loss model), "
            << std::chrono::duration<double>(s.wall_time).count() << " s\n";
  if (s.aborted)
  {
    std::cerr << "capture aborted: " << s.error << "\n";
    return 1;
  }
  return 0;
}

// --- ingest

struct IngestArgs
{
  std::string hash_listen  = "0.0.0.0:7000";
  std::string frame_listen = "0.0.0.0:7001";
  std::string ledger_addr  = "127.0.0.1:7100";
  fs::path archive         = "archive.sfv";
  fs::path gaps;
  unsigned window_ms          = 2000;
  unsigned accept_timeout_ms  = 0;
};

int cmd_ingest(const IngestArgs& a, const Globals&)
{
  net::IngestOptions o;
  o.hash_listen    = net::Endpoint::parse(a.hash_listen);
  o.frame_listen   = net::Endpoint::parse(a.frame_listen);
  o.window         = std::chrono::milliseconds(a.window_ms);
  o.accept_timeout = std::chrono::milliseconds(a.accept_timeout_ms);
  net::RemoteLedger ledger(net::Endpoint::parse(a.ledger_addr));
  const fs::path gaps = a.gaps.empty() ? fs::path(a.archive.string() + ".gaps") : a.gaps;

  transport::FileArchive archive(a.archive, gaps);
  const auto s = net::run_ingest(o, archive, ledger);
  std::cout << "frames archived " << s.frames_received << ", records committed " << s.records_committed << "/"
            << s.records_received << ", discarded " << s.records_discarded << ", gaps " << s.gaps.size()
            << ", malformed datagrams " << s.datagrams_malformed << "\n";
  for (const auto& d : s.discarded)
  {
    std::cout << "  discarded [" << d.record.frame_id_start << ", " << d.record.frame_id_end << "]: " << d.reason
              << "\n";
  }
  return 0;
}

// --- ledger node

struct LedgerArgs
{
  fs::path config;
  unsigned node_id = 0;
  fs::path key;
  fs::path data;
};

int cmd_ledger(const LedgerArgs& a, const Globals&)
{
  auto cfg = ledger::ClusterConfig::load(a.config);
  const auto id = static_cast<ledger::NodeId>(a.node_id);
  if (cfg.member(id) == nullptr)
  {
    throw InvalidArgument("node id " + std::to_string(a.node_id) + " is not in " + a.config.string());
  }
  const fs::path key_path =
      a.key.empty() ? a.config.parent_path() / ("node-" + std::to_string(a.node_id) + ".key") : a.key;
  auto key = ledger::load_key(key_path);
  if (key.public_key() != cfg.member(id)->public_key)
  {
    throw InvalidArgument(key_path.string() + " does not match the public key of node " + std::to_string(a.node_id));
  }
  std::optional<fs::path> chain;
  if (!a.data.empty())
  {
    fs::create_directories(a.data);
    chain = a.data / ("node-" + std::to_string(a.node_id) + ".chain");
  }
  net::LedgerServer server(std::move(cfg), id, std::move(key), chain);
  SignalStop stop([&] { server.stop(); });
  server.run();
  std::cout << "stopped at height " << server.height() << "\n";
  return 0;
}

// --- ledger-query

struct QueryArgs
{
  std::string addr = "127.0.0.1:7100";
  std::string stream;
  std::uint64_t frame = 0;
  bool info           = false;
};

int cmd_query(const QueryArgs& a, const Globals&)
{
  const auto ep = net::Endpoint::parse(a.addr);
  std::optional<StreamId> sid;
  if (!a.info)
  {
    if (a.stream.empty())
    {
      throw InvalidArgument("--stream is required unless --info is given");
    }
    sid = stream_id_from_hex(a.stream);
  }
  net::RemoteLedger client(ep);
  if (a.info)
  {
    const auto i = client.chain_info();
    std::cout << "height " << i.height << "\ntip " << to_hex(i.tip_hash) << "\nmembers " << i.members
              << "\nquorum " << i.quorum << "\n";
    return 0;
  }
  const auto hits = client.query(*sid, a.frame);
  if (hits.empty())
  {
    std::cout << "no record covers frame " << a.frame << "\n";
    return 3;
  }
  for (const auto& h : hits)
  {
    std::cout << "height " << h.height << " tx " << h.tx_index << " ts " << h.timestamp_us << " frames ["
              << h.record.frame_id_start << ", " << h.record.frame_id_end << "] " << to_string(h.record.algorithm)
              << " " << h.record.mode.to_string() << " " << to_hex(h.record.digest) << "\n";
  }
  return 0;
}

// --- verify

struct VerifyArgs
{
  fs::path archive;
  fs::path gaps;
  std::string ledger_addr;
  fs::path snapshot;
  fs::path config;
  std::string policy = "all";
  std::string algo   = "md5";
  std::string mode   = "perframe";
  fs::path json;
  fs::path text;
  bool discover = false;
  bool quiet    = false;
};

int cmd_verify(const VerifyArgs& a, const Globals&)
{
  verify::VerifyParams p;
  p.policy    = SelectionPolicy::parse(a.policy);
  p.algorithm = parse_algorithm(a.algo);
  p.mode      = WriteMode::parse(a.mode);
  if (a.ledger_addr.empty() == a.snapshot.empty())
  {
    throw InvalidArgument("give exactly one of --ledger or --snapshot");
  }
  std::optional<fs::path> gaps;
  if (!a.gaps.empty())
  {
    gaps = a.gaps;
  }
  else if (fs::exists(a.archive.string() + ".gaps"))
  {
    gaps = fs::path(a.archive.string() + ".gaps");
  }

  std::unique_ptr<ledger::LedgerView> view;
  std::optional<ledger::ClusterConfig> cfg;
  if (!a.ledger_addr.empty())
  {
    view = std::make_unique<net::RemoteLedger>(net::Endpoint::parse(a.ledger_addr));
  }
  else
  {
    if (!a.config.empty())
    {
      cfg = ledger::ClusterConfig::load(a.config);
    }
    view = std::make_unique<ledger::SnapshotLedger>(a.snapshot, cfg ? &*cfg : nullptr);
  }

  if (a.discover)
  {
    auto in           = open_input(a.archive);
    const auto header = read_stream(in).header();
    const auto modes  = verify::discover_modes(*view, header.stream_id);
    if (modes.empty())
    {
      std::cout << "stream " << to_hex(header.stream_id) << " has no record for frame 0\n";
      return 3;
    }
    for (const auto& [alg, mode] : modes)
    {
      std::cout << to_string(alg) << " " << mode.to_string() << "\n";
    }
    return 0;
  }

  const auto report = verify::verify_stream(a.archive, gaps, *view, p);
  const std::string text = verify::render_text(report);
  if (!a.quiet)
  {
    std::cout << text;
  }
  if (!a.json.empty())
  {
    write_text(a.json, verify::render_json(report));
  }
  if (!a.text.empty())
  {
    write_text(a.text, text);
  }
  return verify::exit_code(report.overall);
}

// --- tamper

struct TamperArgs
{
  fs::path in;
  fs::path out;
  std::vector<std::uint64_t> frames;
  std::string mutation = "byte-flip";
};

int cmd_tamper(const TamperArgs& a, const Globals& g)
{
  const auto m = verify::parse_mutation(a.mutation);
  if (a.frames.empty())
  {
    throw InvalidArgument("--frames must name at least one frame");
  }
  verify::tamper_file(a.in, a.out, a.frames, m, g.seed);
  std::cout << "tampered " << a.frames.size() << " frame(s) into " << a.out.string() << "\n";
  return 0;
}

// --- bench

struct BenchArgs
{
  fs::path config;
  fs::path out = "bench.csv";
  fs::path reference;
};

int cmd_bench(const BenchArgs& a, const Globals&)
{
  const auto cfg = a.config.empty() ? bench::BenchConfig{} : bench::BenchConfig::load(a.config);
  cfg.validate();
  const auto result = bench::run_bench(cfg, [](const bench::CellResult& c, std::size_t done, std::size_t total) {
    spdlog::info("[{}/{}] {} {} {} {}: serialize {:.0f} us, hash {:.0f} us", done, total, c.resolution.name,
                 to_string(c.algorithm), c.mode.to_string(), c.policy.to_string(), c.median_serialize_us,
                 c.median_hash_us);
  });
  {
    if (a.out.has_parent_path())
    {
      fs::create_directories(a.out.parent_path());
    }
    std::ofstream out(a.out, std::ios::trunc);
    bench::write_csv(result.cells, out);
    if (!out)
    {
      throw IoError("cannot write " + a.out.string());
    }
  }
  if (!a.reference.empty())
  {
    std::ofstream ref(a.reference, std::ios::trunc);
    bench::write_reference_csv(ref);
  }

  std::vector<bench::Resolution> present;
  for (const auto& c : result.cells)
  {
    if (std::none_of(present.begin(), present.end(), [&](const auto& r) { return r.name == c.resolution.name; }))
    {
      present.push_back(c.resolution);
    }
  }
  std::cout << "wrote " << result.cells.size() << " cells to " << a.out.string() << "\n";
  for (const auto& t : bench::compare_trend(result.cells, present))
  {
    std::cout << (t.pass ? "PASS " : "FAIL ") << t.name << "  " << t.detail << "\n";
  }
  const double duration_us = 1e6 * static_cast<double>(cfg.frames) / 30.0;
  std::size_t realtime     = 0;
  for (const auto& c : result.cells)
  {
    realtime += c.median_e2e_us.value_or(c.median_total_us()) <= duration_us ? 1 : 0;
  }
  std::cout << realtime << " of " << result.cells.size() << " cells finish "
            << (cfg.e2e_repetitions > 0 ? "the pipeline" : "serialize+hash") << " within the "
            << duration_us / 1e6 << " s stream duration at 30 fps (informational)\n";
  return 0;
}

// --- demo

struct DemoArgs
{
  std::string scenario = "clean";
  fs::path out         = "out";
  std::uint64_t frames = 303;
  std::uint32_t width  = 256;
  std::uint32_t height = 134;
  std::string policy   = "all";
  std::string algo     = "md5";
  std::string mode     = "perframe";
};

int cmd_demo(const DemoArgs& a, const Globals& g)
{
  pipeline::DemoOptions o;
  o.scenario  = pipeline::Scenario::parse(a.scenario);
  o.out_dir   = a.out;
  o.seed      = g.seed;
  o.frames    = a.frames;
  o.width     = a.width;
  o.height    = a.height;
  o.policy    = SelectionPolicy::parse(a.policy);
  o.algorithm = parse_algorithm(a.algo);
  o.mode      = WriteMode::parse(a.mode);
  try
  {
    const auto r = pipeline::run_demo(o);
    std::cout << verify::render_text(r.report);
    std::cout << "blocks committed " << r.pipeline.blocks_committed << ", lost frames " << r.lost_frames.size()
              << ", tampered frames " << r.tampered_frames.size() << "\n";
    std::cout << "reports: " << r.report_json.string() << ", " << r.report_text.string() << "\nchain: "
              << r.chain_file.string() << "\n";
    return r.exit_code;
  }
  catch (const pipeline::StageError& e)
  {
    std::cerr << "demo failed in stage '" << e.stage() << "': " << e.what() << "\n";
    return 1;
  }
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{"veriframe: tamper-evident video capture with a permissioned digest ledger"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Seed for every randomized step")->capture_default_str();
  app.add_option("--log-level", g.log_level, "trace, debug, info, warn, error, off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}))
      ->capture_default_str();

  BootstrapArgs ba;
  auto* bootstrap = app.add_subcommand("bootstrap", "Create a cluster config and member keys");
  bootstrap->add_option("--n", ba.n, "Number of members (at least 3)")->capture_default_str();
  bootstrap->add_option("--names", ba.names, "Member names, comma separated")->delimiter(',');
  bootstrap->add_option("--out", ba.out, "Output directory")->capture_default_str();
  bootstrap->add_option("--host", ba.host, "Host written into member addresses")->capture_default_str();
  bootstrap->add_option("--base-port", ba.base_port, "Port of member 0; member i gets base+i")->capture_default_str();

  GenerateArgs ga;
  auto* generate = app.add_subcommand("generate", "Write a seeded synthetic SFV1 stream");
  generate->add_option("--out", ga.out, "Output .sfv file")->required();
  generate->add_option("--width", ga.width)->capture_default_str()->check(CLI::PositiveNumber);
  generate->add_option("--height", ga.height)->capture_default_str()->check(CLI::PositiveNumber);
  generate->add_option("--channels", ga.channels, "1 or 3")->capture_default_str()->check(CLI::IsMember({1u, 3u}));
  generate->add_option("--frames", ga.frames)->capture_default_str();
  generate->add_option("--fps", ga.fps)->capture_default_str()->check(CLI::PositiveNumber);

  CaptureArgs ca;
  auto* capture = app.add_subcommand("capture", "Stream an SFV1 file: digests over TCP, frames over UDP");
  capture->add_option("--input", ca.input, "SFV1 stream to send")->required()->check(CLI::ExistingFile);
  capture->add_option("--hash-addr", ca.hash_addr, "Ingest digest channel host:port")->capture_default_str();
  capture->add_option("--frame-addr", ca.frame_addr, "Ingest frame channel host:port")->capture_default_str();
  capture->add_option("--policy", ca.policy, "all | nth:<n> | gop:<g>")->capture_default_str();
  capture->add_option("--algo", ca.algo, "md5 | sha256")->capture_default_str();
  capture->add_option("--mode", ca.mode, "perframe | batchbytes:<k> | batchdigests:<k>")->capture_default_str();
  capture->add_option("--drop", ca.drop, "Simulated datagram drop probability")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  capture->add_option("--pace-us", ca.pace_us, "Pause after each datagram")->capture_default_str();
  capture->add_option("--connect-timeout-ms", ca.connect_timeout_ms)->capture_default_str();

  IngestArgs ia;
  auto* ingest = app.add_subcommand("ingest", "Receive one stream, archive it and submit reconciled records");
  ingest->add_option("--hash-listen", ia.hash_listen, "TCP listen host:port")->capture_default_str();
  ingest->add_option("--frame-listen", ia.frame_listen, "UDP listen host:port")->capture_default_str();
  ingest->add_option("--ledger", ia.ledger_addr, "Ledger node host:port")->capture_default_str();
  ingest->add_option("--archive", ia.archive, "Archive .sfv to write")->capture_default_str();
  ingest->add_option("--gaps", ia.gaps, "Gap list (default <archive>.gaps)");
  ingest->add_option("--window-ms", ia.window_ms, "Reconciliation window after end of stream")->capture_default_str();
  ingest->add_option("--accept-timeout-ms", ia.accept_timeout_ms, "Give up if no agent connects (0 waits forever)")
      ->capture_default_str();

  LedgerArgs la;
  auto* ledger_cmd = app.add_subcommand("ledger", "Run one ledger member until SIGINT/SIGTERM");
  ledger_cmd->add_option("--config", la.config, "cluster.toml")->required()->check(CLI::ExistingFile);
  ledger_cmd->add_option("--node-id", la.node_id)->required();
  ledger_cmd->add_option("--key", la.key, "Signing key (default node-<id>.key next to the config)");
  ledger_cmd->add_option("--data", la.data, "Directory for the persisted chain (in memory if omitted)");

  QueryArgs qa;
  auto* query = app.add_subcommand("ledger-query", "Look up the records covering a frame");
  query->add_option("--addr", qa.addr, "Ledger node host:port")->capture_default_str();
  query->add_option("--stream", qa.stream, "Stream id, 32 hex digits");
  query->add_option("--frame", qa.frame, "Frame id")->capture_default_str();
  query->add_flag("--info", qa.info, "Print height, tip hash and membership instead");

  VerifyArgs va;
  auto* verify_cmd = app.add_subcommand("verify", "Check an archive against the ledger");
  verify_cmd->add_option("--archive", va.archive, "Archive .sfv")->required()->check(CLI::ExistingFile);
  verify_cmd->add_option("--gaps", va.gaps, "Gap list (default <archive>.gaps if present)")->check(CLI::ExistingFile);
  auto* lo = verify_cmd->add_option("--ledger", va.ledger_addr, "Ledger node host:port");
  auto* so = verify_cmd->add_option("--snapshot", va.snapshot, "Chain file for offline verification")
                 ->check(CLI::ExistingFile);
  lo->excludes(so);
  verify_cmd->add_option("--config", va.config, "cluster.toml; enables signature checks on --snapshot")
      ->check(CLI::ExistingFile);
  verify_cmd->add_option("--policy", va.policy)->capture_default_str();
  verify_cmd->add_option("--algo", va.algo)->capture_default_str();
  verify_cmd->add_option("--mode", va.mode)->capture_default_str();
  verify_cmd->add_option("--json", va.json, "Write the JSON report here");
  verify_cmd->add_option("--text", va.text, "Write the text report here");
  verify_cmd->add_flag("--discover", va.discover, "List committed (algorithm, mode) pairs and exit");
  verify_cmd->add_flag("--quiet", va.quiet, "Do not print the report");

  TamperArgs ta;
  auto* tamper = app.add_subcommand("tamper", "Mutate chosen frames of an archive");
  tamper->add_option("--in", ta.in)->required()->check(CLI::ExistingFile);
  tamper->add_option("--out", ta.out)->required();
  tamper->add_option("--frames", ta.frames, "Frame ids, comma separated")->required()->delimiter(',');
  tamper->add_option("--mutation", ta.mutation, "byte-flip | region-overwrite")->capture_default_str();

  BenchArgs bea;
  auto* bench_cmd = app.add_subcommand("bench", "Time serialization and hashing across resolutions");
  bench_cmd->add_option("--config", bea.config, "bench.toml (built-in grid if omitted)")->check(CLI::ExistingFile);
  bench_cmd->add_option("--out", bea.out, "Results CSV")->capture_default_str();
  bench_cmd->add_option("--reference", bea.reference, "Also write the reference per-frame times CSV");

  DemoArgs da;
  auto* demo = app.add_subcommand("demo", "In-process capture, ingest, commit, tamper and verify");
  demo->add_option("--scenario", da.scenario, "clean | tampered:<k> | lossy:<p>")->capture_default_str();
  demo->add_option("--out", da.out, "Output directory (cleared of previous demo files)")->capture_default_str();
  demo->add_option("--frames", da.frames)->capture_default_str()->check(CLI::PositiveNumber);
  demo->add_option("--width", da.width)->capture_default_str()->check(CLI::PositiveNumber);
  demo->add_option("--height", da.height)->capture_default_str()->check(CLI::PositiveNumber);
  demo->add_option("--policy", da.policy)->capture_default_str();
  demo->add_option("--algo", da.algo)->capture_default_str();
  demo->add_option("--mode", da.mode)->capture_default_str();

  try
  {
    app.parse(argc, argv);
  }
  catch (const CLI::ParseError& e)
  {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  spdlog::set_default_logger(spdlog::stderr_color_mt("veriframe"));
  spdlog::set_level(spdlog::level::from_str(g.log_level));

  try
  {
    if (*bootstrap) return cmd_bootstrap(ba, g);
    if (*generate) return cmd_generate(ga, g);
    if (*capture) return cmd_capture(ca, g);
    if (*ingest) return cmd_ingest(ia, g);
    if (*ledger_cmd) return cmd_ledger(la, g);
    if (*query) return cmd_query(qa, g);
    if (*verify_cmd) return cmd_verify(va, g);
    if (*tamper) return cmd_tamper(ta, g);
    if (*bench_cmd) return cmd_bench(bea, g);
    if (*demo) return cmd_demo(da, g);
  }
  catch (const std::exception& e)
  {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
