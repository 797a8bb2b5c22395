#include "veriframe/bench.hpp"

#include "veriframe/ledger/sim.hpp"
#include "veriframe/pipeline.hpp"

#include <spdlog/spdlog.h>
#include <toml.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <optional>
#include <map>
#include <sstream>

namespace veriframe::bench {

namespace {

using Clock = std::chrono::steady_clock;

double micros(Clock::duration d) { return std::chrono::duration<double, std::micro>(d).count(); }

double median(std::vector<double> v)
{
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

std::vector<std::string> string_list(const toml::table& t, std::string_view key)
{
  std::vector<std::string> out;
  const auto* arr = t[key].as_array();
  if (arr == nullptr)
  {
    throw InvalidArgument("bench config: '" + std::string(key) + "' must be an array of strings");
  }
  for (const auto& v : *arr)
  {
    const auto s = v.value<std::string>();
    if (!s)
    {
      throw InvalidArgument("bench config: '" + std::string(key) + "' must be an array of strings");
    }
    out.push_back(*s);
  }
  return out;
}

std::uint64_t positive(const toml::table& t, std::string_view key, std::uint64_t fallback)
{
  if (!t.contains(key))
  {
    return fallback;
  }
  const auto v = t[key].value<std::int64_t>();
  if (!v || *v < 0)
  {
    throw InvalidArgument("bench config: '" + std::string(key) + "' must be a non-negative integer");
  }
  return static_cast<std::uint64_t>(*v);
}

struct TimedRun
{
  double serialize_us = 0;
  double hash_us      = 0;
  std::uint64_t bytes = 0;
  std::uint64_t records = 0;
};

TimedRun time_digest(const std::vector<Frame>& frames, const StreamId& sid, DigestAlgorithm algo, WriteMode mode,
                     const SelectionPolicy& policy)
{
  TimedRun run;
  Clock::duration ser{};
  Clock::duration hsh{};
  RecordBuilder builder(sid, algo, mode);
  auto count = [&](const std::optional<EmittedRecord>& e) {
    if (e)
    {
      run.bytes += e->input_bytes;
      ++run.records;
    }
  };
  for (const Frame& f : frames)
  {
    if (!policy.selects(f.index))
    {
      continue;
    }
    const auto t0 = Clock::now();
    const Bytes s = serialize_frame(f);
    const auto t1 = Clock::now();
    auto e        = builder.push(f.index, s);
    const auto t2 = Clock::now();
    ser += t1 - t0;
    hsh += t2 - t1;
    count(e);
  }
  const auto t0 = Clock::now();
  auto e        = builder.flush();
  hsh += Clock::now() - t0;
  count(e);
  run.serialize_us = micros(ser);
  run.hash_us      = micros(hsh);
  return run;
}

double time_pipeline(const StreamHeader& header, const std::vector<Frame>& frames, const ledger::Bootstrap& boot,
                     DigestAlgorithm algo, WriteMode mode, const SelectionPolicy& policy, std::uint64_t seed)
{
  ledger::Cluster cluster(boot);
  ledger::SimNetwork network(seed);
  transport::NullArchive archive;
  transport::CaptureConfig cc;
  cc.policy    = policy;
  cc.algorithm = algo;
  cc.mode      = mode;
  cc.seed      = seed;
  std::size_t next = 0;
  const auto t0    = Clock::now();
  pipeline::run_pipeline(
      header,
      [&]() -> std::optional<Frame> {
        if (next >= frames.size())
        {
          return std::nullopt;
        }
        return frames[next++];
      },
      cc, archive, cluster, network);
  return micros(Clock::now() - t0);
}

std::string fmt_us(double v)
{
  std::ostringstream s;
  s << std::fixed << std::setprecision(3) << v;
  return s.str();
}

std::vector<std::string> split_csv_line(const std::string& line)
{
  std::vector<std::string> out;
  std::string cur;
  for (char c : line)
  {
    if (c == ',')
    {
      out.push_back(cur);
      cur.clear();
    }
    else if (c != '\r')
    {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

template <typename T>
T parse_number(const std::string& s, std::size_t line)
{
  T v{};
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
  {
    throw ParseError("bad numeric field '" + s + "' on CSV line " + std::to_string(line), line);
  }
  return v;
}

constexpr const char* kCsvHeader = "resolution,width,height,algorithm,mode,policy,frames,reps,median_serialize_us,"
                                   "median_hash_us,median_e2e_us,bytes_hashed,records";

using CellKey = std::tuple<std::string, std::string, std::string, std::string>;

CellKey key_of(const CellResult& c, const SelectionPolicy& policy)
{
  return {c.resolution.name, to_string(c.algorithm), c.mode.to_string(), policy.to_string()};
}

} // namespace

const std::vector<Resolution>& resolution_presets()
{
  static const std::vector<Resolution> presets{
      {"v1", 256, 134}, {"v2", 426, 224}, {"v3", 640, 338}, {"v4", 854, 450}, {"v5", 1280, 674}, {"v6", 1920, 1012},
  };
  return presets;
}

void BenchConfig::validate() const
{
  if (repetitions < 3)
  {
    throw InvalidArgument("bench repetitions must be >= 3");
  }
  if (resolutions.empty() || algorithms.empty() || modes.empty() || policies.empty())
  {
    throw InvalidArgument("bench config needs at least one resolution, algorithm, mode and policy");
  }
  if (frames == 0)
  {
    throw InvalidArgument("bench frames must be >= 1");
  }
  for (const auto& r : resolutions)
  {
    StreamHeader h;
    h.width    = r.width;
    h.height   = r.height;
    h.channels = channels;
    h.validate();
  }
}

BenchConfig BenchConfig::from_toml(std::string_view text)
{
  toml::table t;
  try
  {
    t = toml::parse(text);
  }
  catch (const toml::parse_error& e)
  {
    throw InvalidArgument(std::string("bench config: ") + std::string(e.description()));
  }

  BenchConfig c;
  c.frames          = positive(t, "frames", c.frames);
  c.repetitions     = positive(t, "repetitions", c.repetitions);
  c.e2e_repetitions = positive(t, "e2e_repetitions", c.e2e_repetitions);
  c.seed            = positive(t, "seed", c.seed);
  c.channels        = static_cast<std::uint8_t>(positive(t, "channels", c.channels));
  if (t.contains("algorithms"))
  {
    c.algorithms.clear();
    for (const auto& s : string_list(t, "algorithms"))
    {
      c.algorithms.push_back(parse_algorithm(s));
    }
  }
  if (t.contains("modes"))
  {
    c.modes.clear();
    for (const auto& s : string_list(t, "modes"))
    {
      c.modes.push_back(WriteMode::parse(s));
    }
  }
  if (t.contains("policies"))
  {
    c.policies.clear();
    for (const auto& s : string_list(t, "policies"))
    {
      c.policies.push_back(SelectionPolicy::parse(s));
    }
  }
  if (t.contains("presets") || t.contains("resolution"))
  {
    c.resolutions.clear();
  }
  if (t.contains("presets"))
  {
    for (const auto& name : string_list(t, "presets"))
    {
      const auto& all = resolution_presets();
      auto it = std::find_if(all.begin(), all.end(), [&](const Resolution& r) { return r.name == name; });
      if (it == all.end())
      {
        throw InvalidArgument("bench config: unknown preset '" + name + "'");
      }
      c.resolutions.push_back(*it);
    }
  }
  if (const auto* arr = t["resolution"].as_array())
  {
    for (const auto& node : *arr)
    {
      const auto* rt = node.as_table();
      const auto name = rt ? (*rt)["name"].value<std::string>() : std::nullopt;
      const auto w    = rt ? (*rt)["width"].value<std::int64_t>() : std::nullopt;
      const auto h    = rt ? (*rt)["height"].value<std::int64_t>() : std::nullopt;
      if (!name || !w || !h || *w < 1 || *h < 1 || *w > 0xFFFFFFFFLL || *h > 0xFFFFFFFFLL)
      {
        throw InvalidArgument("bench config: [[resolution]] needs name, width >= 1, height >= 1");
      }
      c.resolutions.push_back({*name, static_cast<std::uint32_t>(*w), static_cast<std::uint32_t>(*h)});
    }
  }
  c.validate();
  return c;
}

BenchConfig BenchConfig::load(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in)
  {
    throw IoError("cannot open bench config " + path.string());
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return from_toml(ss.str());
}

BenchResult run_bench(const BenchConfig& config, const Progress& progress)
{
  config.validate();
  const auto boot = ledger::bootstrap_cluster(3, {}, config.seed);

  const auto header_for = [&](const Resolution& res) {
    StreamHeader header;
    header.stream_id   = synthetic_stream_id(config.seed);
    header.width       = res.width;
    header.height      = res.height;
    header.channels    = config.channels;
    header.frame_count = config.frames;
    return header;
  };

  struct Samples
  {
    std::vector<double> ser;
    std::vector<double> hsh;
    std::vector<double> tot;
  };
  BenchResult result;
  std::vector<Samples> samples;
  std::vector<std::size_t> first_cell; // per resolution
  for (const Resolution& res : config.resolutions)
  {
    first_cell.push_back(result.cells.size());
    for (auto algo : config.algorithms)
    {
      for (const auto& mode : config.modes)
      {
        for (const auto& policy : config.policies)
        {
          CellResult cell;
          cell.resolution = res;
          cell.algorithm  = algo;
          cell.mode       = mode;
          cell.policy     = policy;
          cell.frames     = config.frames;
          cell.reps       = config.repetitions;
          result.cells.push_back(cell);
          samples.emplace_back();
        }
      }
    }
  }

  // Repetitions are interleaved across resolutions so a transient slowdown of
  // the host lands on every resolution rather than on one.
  std::uint64_t total_bytes = 0;
  for (const Resolution& res : config.resolutions)
  {
    total_bytes += header_for(res).frame_size() * config.frames;
  }
  const bool keep_streams = total_bytes <= (std::uint64_t{256} << 20);
  std::vector<std::optional<SyntheticStream>> streams(config.resolutions.size());

  for (std::uint64_t rep = 0; rep < config.repetitions; ++rep)
  {
    spdlog::debug("bench pass {}/{}", rep + 1, config.repetitions);
    for (std::size_t r = 0; r < config.resolutions.size(); ++r)
    {
      const StreamHeader header = header_for(config.resolutions[r]);
      std::optional<SyntheticStream> local;
      std::optional<SyntheticStream>& slot = keep_streams ? streams[r] : local;
      if (!slot)
      {
        slot = generate_synthetic_stream(header, config.seed);
      }
      const std::size_t end = r + 1 < first_cell.size() ? first_cell[r + 1] : result.cells.size();
      for (std::size_t i = first_cell[r]; i < end; ++i)
      {
        CellResult& cell   = result.cells[i];
        const TimedRun run = time_digest(slot->frames, header.stream_id, cell.algorithm, cell.mode, cell.policy);
        samples[i].ser.push_back(run.serialize_us);
        samples[i].hsh.push_back(run.hash_us);
        samples[i].tot.push_back(run.serialize_us + run.hash_us);
        cell.bytes_hashed = run.bytes;
        cell.records      = run.records;
      }
    }
  }

  for (std::size_t r = 0; r < config.resolutions.size(); ++r)
  {
    const StreamHeader header = header_for(config.resolutions[r]);
    std::optional<SyntheticStream> stream;
    const std::size_t end = r + 1 < first_cell.size() ? first_cell[r + 1] : result.cells.size();
    for (std::size_t i = first_cell[r]; i < end; ++i)
    {
      CellResult& cell         = result.cells[i];
      cell.median_serialize_us = median(samples[i].ser);
      cell.median_hash_us      = median(samples[i].hsh);
      cell.min_total_us        = *std::min_element(samples[i].tot.begin(), samples[i].tot.end());
      cell.max_total_us        = *std::max_element(samples[i].tot.begin(), samples[i].tot.end());
      if (config.e2e_repetitions > 0)
      {
        if (!stream)
        {
          stream = keep_streams ? std::move(streams[r]) : generate_synthetic_stream(header, config.seed);
        }
        std::vector<double> e2e;
        for (std::uint64_t rep = 0; rep < config.e2e_repetitions; ++rep)
        {
          e2e.push_back(
              time_pipeline(header, stream->frames, boot, cell.algorithm, cell.mode, cell.policy, config.seed + rep));
        }
        cell.median_e2e_us = median(e2e);
      }
      if (progress)
      {
        progress(cell, i + 1, result.cells.size());
      }
    }
    streams[r].reset();
  }
  return result;
}

void write_csv(const std::vector<CellResult>& cells, std::ostream& out)
{
  out << kCsvHeader << '\n';
  for (const auto& c : cells)
  {
    out << c.resolution.name << ',' << c.resolution.width << ',' << c.resolution.height << ','
        << to_string(c.algorithm) << ',' << c.mode.to_string() << ',' << c.policy.to_string() << ',' << c.frames
        << ',' << c.reps << ',' << fmt_us(c.median_serialize_us) << ',' << fmt_us(c.median_hash_us) << ','
        << (c.median_e2e_us ? fmt_us(*c.median_e2e_us) : std::string()) << ',' << c.bytes_hashed << ','
        << c.records << '\n';
  }
}

std::vector<CellResult> parse_csv(std::istream& in)
{
  std::string line;
  if (!std::getline(in, line) || split_csv_line(line) != split_csv_line(kCsvHeader))
  {
    throw ParseError("unexpected CSV header", 0);
  }
  std::vector<CellResult> cells;
  std::size_t line_no = 1;
  while (std::getline(in, line))
  {
    ++line_no;
    if (line.empty() || line == "\r")
    {
      continue;
    }
    const auto f = split_csv_line(line);
    if (f.size() != 13)
    {
      throw ParseError("expected 13 fields on CSV line " + std::to_string(line_no), line_no);
    }
    CellResult c;
    c.resolution          = {f[0], parse_number<std::uint32_t>(f[1], line_no), parse_number<std::uint32_t>(f[2], line_no)};
    c.algorithm           = parse_algorithm(f[3]);
    c.mode                = WriteMode::parse(f[4]);
    c.policy              = SelectionPolicy::parse(f[5]);
    c.frames              = parse_number<std::uint64_t>(f[6], line_no);
    c.reps                = parse_number<std::uint64_t>(f[7], line_no);
    c.median_serialize_us = parse_number<double>(f[8], line_no);
    c.median_hash_us      = parse_number<double>(f[9], line_no);
    if (!f[10].empty())
    {
      c.median_e2e_us = parse_number<double>(f[10], line_no);
    }
    c.bytes_hashed = parse_number<std::uint64_t>(f[11], line_no);
    c.records      = parse_number<std::uint64_t>(f[12], line_no);
    c.min_total_us = c.max_total_us = c.median_total_us();
    cells.push_back(std::move(c));
  }
  return cells;
}

std::vector<TrendCheck> compare_trend(const std::vector<CellResult>& cells, const std::vector<Resolution>& expected)
{
  std::vector<TrendCheck> checks;

  std::vector<std::string> missing;
  for (const auto& r : expected)
  {
    const bool present =
        std::any_of(cells.begin(), cells.end(), [&](const CellResult& c) { return c.resolution.name == r.name; });
    if (!present)
    {
      missing.push_back(r.name);
    }
  }
  if (!missing.empty())
  {
    std::string list;
    for (const auto& m : missing)
    {
      list += (list.empty() ? "" : ", ") + m;
    }
    return {{"cells", false, "missing resolutions: " + list}};
  }

  // (a) monotone across pixel count within each (algorithm, mode, policy) series
  {
    std::map<std::tuple<std::string, std::string, std::string>, std::vector<const CellResult*>> series;
    for (const auto& c : cells)
    {
      series[{to_string(c.algorithm), c.mode.to_string(), c.policy.to_string()}].push_back(&c);
    }
    TrendCheck chk{"monotone", true, ""};
    for (auto& [key, v] : series)
    {
      std::stable_sort(v.begin(), v.end(), [](const CellResult* a, const CellResult* b) {
        return a->resolution.pixels() < b->resolution.pixels();
      });
      for (std::size_t i = 1; i < v.size(); ++i)
      {
        if (v[i]->resolution.pixels() > v[i - 1]->resolution.pixels() &&
            v[i]->median_total_us() < v[i - 1]->median_total_us())
        {
          chk.pass = false;
          chk.detail += v[i]->resolution.name + " < " + v[i - 1]->resolution.name + " for " + std::get<0>(key) + "/" +
                        std::get<1>(key) + "/" + std::get<2>(key) + "; ";
        }
      }
    }
    checks.push_back(chk);
  }

  // (b) MD5 <= SHA-256 hash time in every matching cell
  {
    std::map<CellKey, const CellResult*> by_key;
    for (const auto& c : cells)
    {
      by_key[key_of(c, c.policy)] = &c;
    }
    TrendCheck chk{"md5<=sha256", true, ""};
    std::size_t pairs = 0;
    for (const auto& c : cells)
    {
      if (c.algorithm != DigestAlgorithm::md5)
      {
        continue;
      }
      auto it = by_key.find({c.resolution.name, "sha256", c.mode.to_string(), c.policy.to_string()});
      if (it == by_key.end())
      {
        chk.pass = false;
        chk.detail += "no sha256 cell for " + c.resolution.name + "/" + c.mode.to_string() + "/" +
                      c.policy.to_string() + "; ";
        continue;
      }
      ++pairs;
      if (c.median_hash_us > it->second->median_hash_us)
      {
        chk.pass = false;
        chk.detail += c.resolution.name + "/" + c.mode.to_string() + "/" + c.policy.to_string() + " md5 " +
                      fmt_us(c.median_hash_us) + " > sha256 " + fmt_us(it->second->median_hash_us) + "; ";
      }
    }
    if (pairs == 0)
    {
      chk.pass = false;
      chk.detail += "no md5/sha256 pairs";
    }
    checks.push_back(chk);
  }

  // (c) every 30th frame costs no more than every frame
  {
    std::map<CellKey, const CellResult*> by_key;
    for (const auto& c : cells)
    {
      by_key[key_of(c, c.policy)] = &c;
    }
    TrendCheck chk{"nth:30<=all", true, ""};
    std::size_t pairs = 0;
    for (const auto& c : cells)
    {
      if (c.policy != SelectionPolicy::every_nth(30))
      {
        continue;
      }
      auto it = by_key.find({c.resolution.name, to_string(c.algorithm), c.mode.to_string(), "all"});
      if (it == by_key.end())
      {
        chk.pass = false;
        chk.detail += "no 'all' cell for " + c.resolution.name + "; ";
        continue;
      }
      ++pairs;
      if (c.median_total_us() > it->second->median_total_us())
      {
        chk.pass = false;
        chk.detail += c.resolution.name + "/" + to_string(c.algorithm) + "/" + c.mode.to_string() + "; ";
      }
    }
    if (pairs == 0)
    {
      chk.pass = false;
      chk.detail += "no nth:30/all pairs";
    }
    checks.push_back(chk);
  }
  return checks;
}

const std::vector<ReferenceRow>& reference_times()
{
  static const std::vector<ReferenceRow> rows{
      {{"v1", 256, 134}, 3.8, 2.9},     {{"v2", 426, 224}, 10.3, 7.7},    {{"v3", 640, 338}, 23.3, 17.6},
      {{"v4", 854, 450}, 42.9, 31.7},   {{"v5", 1280, 674}, 97.1, 70.8},  {{"v6", 1920, 1012}, 223.2, 159.6},
  };
  return rows;
}

void write_reference_csv(std::ostream& out)
{
  out << "resolution,width,height,conversion_ms,hashing_ms\n";
  for (const auto& r : reference_times())
  {
    out << r.resolution.name << ',' << r.resolution.width << ',' << r.resolution.height << ',' << r.conversion_ms
        << ',' << r.hashing_ms << '\n';
  }
}

} // namespace veriframe::bench
