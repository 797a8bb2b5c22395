#include "veriframe/verifier.hpp"

#include "veriframe/ledger/store.hpp"
#include "veriframe/transport.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

namespace veriframe::verify {

namespace {

constexpr std::array<std::string_view, kStatusCount> kStatusNames{
    "authentic", "tampered", "not_on_ledger", "frame_missing", "not_covered"};

bool matches(const ledger::QueryHit& hit, const StreamId& stream_id, const VerifyParams& params,
             const DigestRecord& expected)
{
  return hit.record.stream_id == stream_id && hit.record.algorithm == params.algorithm &&
         hit.record.mode == params.mode && hit.record.frame_id_start == expected.frame_id_start &&
         hit.record.frame_id_end == expected.frame_id_end;
}

MatchedRecord matched_from(const ledger::QueryHit& hit) { return {hit.height, hit.timestamp_us, hit.record.mode}; }

} // namespace

std::string_view to_string(Status s) { return kStatusNames[static_cast<std::size_t>(s)]; }

std::string_view to_string(Overall o)
{
  switch (o)
  {
  case Overall::authentic:
    return "AUTHENTIC";
  case Overall::tampered:
    return "TAMPERED";
  case Overall::incomplete:
    return "INCOMPLETE";
  }
  return "?";
}

Status parse_status(std::string_view text)
{
  for (std::size_t i = 0; i < kStatusNames.size(); ++i)
  {
    if (kStatusNames[i] == text)
    {
      return static_cast<Status>(i);
    }
  }
  throw InvalidArgument("unknown verdict status '" + std::string(text) + "'");
}

Overall parse_overall(std::string_view text)
{
  if (text == "AUTHENTIC") return Overall::authentic;
  if (text == "TAMPERED") return Overall::tampered;
  if (text == "INCOMPLETE") return Overall::incomplete;
  throw InvalidArgument("unknown overall verdict '" + std::string(text) + "'");
}

std::vector<std::uint64_t> VerificationReport::frames_with(Status s) const
{
  std::vector<std::uint64_t> out;
  for (const Verdict& v : verdicts)
  {
    if (v.status == s)
    {
      out.push_back(v.frame_id);
    }
  }
  return out;
}

bool VerificationReport::operator==(const VerificationReport& o) const
{
  return stream_id == o.stream_id && params.policy == o.params.policy && params.algorithm == o.params.algorithm &&
         params.mode == o.params.mode && frame_count == o.frame_count && verdicts == o.verdicts &&
         counts == o.counts && overall == o.overall;
}

VerificationReport verify_stream(StreamReader& archive, const std::set<std::uint64_t>& gaps,
                                 const ledger::LedgerView& ledger, const VerifyParams& params)
{
  const StreamHeader& header = archive.header();
  VerificationReport report;
  report.stream_id   = header.stream_id;
  report.params      = params;
  report.frame_count = header.frame_count;
  report.verdicts.resize(header.frame_count);
  for (std::uint64_t i = 0; i < header.frame_count; ++i)
  {
    report.verdicts[i].frame_id = i;
  }

  RecordBuilder builder(header.stream_id, params.algorithm, params.mode);
  std::vector<std::uint64_t> group;
  bool group_missing = false;

  auto settle = [&](const DigestRecord& recomputed) {
    std::vector<ledger::QueryHit> hits = ledger.query(header.stream_id, group.front());
    std::erase_if(hits, [&](const ledger::QueryHit& h) { return !matches(h, header.stream_id, params, recomputed); });

    Status status = Status::not_on_ledger;
    std::optional<MatchedRecord> matched;
    if (!hits.empty())
    {
      matched = matched_from(hits.front());
      if (group_missing)
      {
        status = Status::frame_missing;
      }
      else
      {
        status = Status::tampered;
        for (const auto& h : hits)
        {
          if (h.record.digest == recomputed.digest)
          {
            status  = Status::authentic;
            matched = matched_from(h);
            break;
          }
        }
      }
    }
    for (std::uint64_t id : group)
    {
      report.verdicts[id].status  = status;
      report.verdicts[id].matched = matched;
    }
    group.clear();
    group_missing = false;
  };

  while (auto frame = archive.next())
  {
    if (!params.policy.selects(frame->index))
    {
      continue;
    }
    group.push_back(frame->index);
    group_missing = group_missing || gaps.contains(frame->index);
    if (auto e = builder.push(frame->index, serialize_frame(*frame)))
    {
      settle(e->record);
    }
  }
  if (auto e = builder.flush())
  {
    settle(e->record);
  }

  for (const Verdict& v : report.verdicts)
  {
    ++report.counts[static_cast<std::size_t>(v.status)];
  }
  if (report.count(Status::tampered) > 0)
  {
    report.overall = Overall::tampered;
  }
  else if (report.count(Status::not_on_ledger) + report.count(Status::frame_missing) > 0)
  {
    report.overall = Overall::incomplete;
  }
  else
  {
    report.overall = Overall::authentic;
  }
  return report;
}

VerificationReport verify_stream(const std::filesystem::path& archive, const std::optional<std::filesystem::path>& gaps,
                                 const ledger::LedgerView& ledger, const VerifyParams& params)
{
  std::ifstream in(archive, std::ios::binary);
  if (!in)
  {
    throw IoError("cannot open archive " + archive.string());
  }
  std::set<std::uint64_t> gap_set;
  if (gaps)
  {
    const auto list = transport::read_gap_list(*gaps);
    gap_set.insert(list.begin(), list.end());
  }
  StreamReader reader(in);
  return verify_stream(reader, gap_set, ledger, params);
}

std::vector<std::pair<DigestAlgorithm, WriteMode>> discover_modes(const ledger::LedgerView& ledger,
                                                                  const StreamId& stream_id)
{
  std::vector<std::pair<DigestAlgorithm, WriteMode>> out;
  for (const auto& hit : ledger.query(stream_id, 0))
  {
    std::pair<DigestAlgorithm, WriteMode> combo{hit.record.algorithm, hit.record.mode};
    if (std::find(out.begin(), out.end(), combo) == out.end())
    {
      out.push_back(combo);
    }
  }
  return out;
}

int exit_code(Overall overall)
{
  switch (overall)
  {
  case Overall::authentic:
    return 0;
  case Overall::tampered:
    return 2;
  case Overall::incomplete:
    return 3;
  }
  return 1;
}

std::string render_text(const VerificationReport& r)
{
  std::ostringstream out;
  out << "stream     " << to_hex(r.stream_id) << '\n';
  out << "params     policy=" << r.params.policy.to_string() << " algorithm=" << to_string(r.params.algorithm)
      << " mode=" << r.params.mode.to_string() << '\n';
  out << "frames     " << r.frame_count << '\n';
  out << "overall    " << to_string(r.overall) << '\n';
  out << "counts    ";
  for (std::size_t i = 0; i < kStatusCount; ++i)
  {
    out << ' ' << kStatusNames[i] << '=' << r.counts[i];
  }
  out << '\n';
  for (Status s : {Status::tampered, Status::frame_missing, Status::not_on_ledger})
  {
    const auto ids = r.frames_with(s);
    if (ids.empty())
    {
      continue;
    }
    out << to_string(s) << ':';
    const std::size_t shown = std::min<std::size_t>(ids.size(), 40);
    for (std::size_t i = 0; i < shown; ++i)
    {
      out << ' ' << ids[i];
    }
    if (shown < ids.size())
    {
      out << " ... (" << ids.size() - shown << " more)";
    }
    out << '\n';
  }
  return out.str();
}

std::string render_json(const VerificationReport& r)
{
  using nlohmann::ordered_json;
  ordered_json doc;
  doc["stream_id"]   = to_hex(r.stream_id);
  doc["policy"]      = r.params.policy.to_string();
  doc["algorithm"]   = to_string(r.params.algorithm);
  doc["mode"]        = r.params.mode.to_string();
  doc["frame_count"] = r.frame_count;
  doc["overall"]     = to_string(r.overall);
  ordered_json summary = ordered_json::object();
  for (std::size_t i = 0; i < kStatusCount; ++i)
  {
    summary[std::string(kStatusNames[i])] = r.counts[i];
  }
  doc["summary"] = summary;
  ordered_json verdicts = ordered_json::array();
  for (const Verdict& v : r.verdicts)
  {
    ordered_json item;
    item["frame_id"] = v.frame_id;
    item["status"]   = to_string(v.status);
    if (v.matched)
    {
      item["height"]    = v.matched->height;
      item["timestamp"] = v.matched->timestamp_us;
      item["mode"]      = v.matched->mode.to_string();
    }
    verdicts.push_back(std::move(item));
  }
  doc["verdicts"] = std::move(verdicts);
  return doc.dump(2) + "\n";
}

VerificationReport parse_report_json(std::string_view text)
{
  nlohmann::json doc;
  try
  {
    doc = nlohmann::json::parse(text);
    VerificationReport r;
    r.stream_id        = stream_id_from_hex(doc.at("stream_id").get<std::string>());
    r.params.policy    = SelectionPolicy::parse(doc.at("policy").get<std::string>());
    r.params.algorithm = parse_algorithm(doc.at("algorithm").get<std::string>());
    r.params.mode      = WriteMode::parse(doc.at("mode").get<std::string>());
    r.frame_count      = doc.at("frame_count").get<std::uint64_t>();
    r.overall          = parse_overall(doc.at("overall").get<std::string>());
    for (std::size_t i = 0; i < kStatusCount; ++i)
    {
      r.counts[i] = doc.at("summary").at(std::string(kStatusNames[i])).get<std::uint64_t>();
    }
    for (const auto& item : doc.at("verdicts"))
    {
      Verdict v;
      v.frame_id = item.at("frame_id").get<std::uint64_t>();
      v.status   = parse_status(item.at("status").get<std::string>());
      if (item.contains("height"))
      {
        v.matched = MatchedRecord{item.at("height").get<std::uint64_t>(), item.at("timestamp").get<std::uint64_t>(),
                                  WriteMode::parse(item.at("mode").get<std::string>())};
      }
      r.verdicts.push_back(std::move(v));
    }
    return r;
  }
  catch (const nlohmann::json::exception& e)
  {
    throw InvalidArgument(std::string("malformed report: ") + e.what());
  }
}

Mutation parse_mutation(std::string_view text)
{
  if (text == "byte-flip") return Mutation::byte_flip;
  if (text == "region-overwrite") return Mutation::region_overwrite;
  throw InvalidArgument("unknown mutation '" + std::string(text) + "' (expected byte-flip|region-overwrite)");
}

Bytes tamper(ByteView archive, std::span<const std::uint64_t> frame_ids, Mutation mutation, std::uint64_t seed)
{
  const StreamHeader header = StreamHeader::decode(archive);
  const std::uint64_t fsize = header.frame_size();
  if (archive.size() < kStreamHeaderSize + header.frame_count * fsize)
  {
    throw ParseError("archive shorter than its header declares", archive.size());
  }

  std::vector<std::uint64_t> ids(frame_ids.begin(), frame_ids.end());
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  for (std::uint64_t id : ids)
  {
    if (id >= header.frame_count)
    {
      throw InvalidArgument("frame " + std::to_string(id) + " is outside the stream (" +
                            std::to_string(header.frame_count) + " frames)");
    }
  }

  Bytes out(archive.begin(), archive.end());
  std::mt19937_64 rng(seed);
  for (std::uint64_t id : ids)
  {
    std::uint8_t* frame = out.data() + kStreamHeaderSize + id * fsize;
    if (mutation == Mutation::byte_flip)
    {
      frame[rng() % fsize] ^= 0xFF;
      continue;
    }
    const std::uint64_t rw = std::max<std::uint64_t>(1, header.width / 4);
    const std::uint64_t rh = std::max<std::uint64_t>(1, header.height / 4);
    const std::uint64_t x0 = rng() % (header.width - rw + 1);
    const std::uint64_t y0 = rng() % (header.height - rh + 1);
    for (std::uint64_t y = y0; y < y0 + rh; ++y)
    {
      for (std::uint64_t x = x0; x < x0 + rw; ++x)
      {
        for (std::uint64_t c = 0; c < header.channels; ++c)
        {
          frame[(y * header.width + x) * header.channels + c] ^= 0xFF;
        }
      }
    }
  }
  return out;
}

void tamper_file(const std::filesystem::path& in, const std::filesystem::path& out,
                 std::span<const std::uint64_t> frame_ids, Mutation mutation, std::uint64_t seed)
{
  const Bytes mutated = tamper(ledger::read_file(in), frame_ids, mutation, seed);
  std::ofstream f(out, std::ios::binary | std::ios::trunc);
  f.write(reinterpret_cast<const char*>(mutated.data()), static_cast<std::streamsize>(mutated.size()));
  if (!f)
  {
    throw IoError("failed writing " + out.string());
  }
}

} // namespace veriframe::verify
