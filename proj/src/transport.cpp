#include "veriframe/transport.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <fstream>

namespace veriframe::transport {

LossModel::LossModel(double drop_probability, std::uint64_t seed)
  : engine_(seed)
  , p_(drop_probability)
{
  if (!(drop_probability >= 0.0 && drop_probability <= 1.0))
  {
    throw InvalidArgument("drop probability must be in [0, 1]");
  }
}

bool LossModel::drop()
{
  const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  return u < p_;
}

CaptureSummary run_capture_agent(const StreamHeader& header, const FrameSource& next_frame,
                                 const CaptureConfig& config, DigestChannel& digests, FrameChannel& frames)
{
  header.validate();
  if (config.policy.period() == 0)
  {
    throw InvalidArgument("selection period must be >= 1");
  }

  const auto start = std::chrono::steady_clock::now();
  CaptureSummary summary;
  LossModel loss(config.drop_probability, config.seed);
  RecordBuilder builder(header.stream_id, config.algorithm, config.mode);
  bool frame_channel_warned = false;

  auto send_record = [&](const EmittedRecord& e) {
    digests.send(wire::RecordMessage{e.record});
    ++summary.records_sent;
  };

  try
  {
    digests.send(wire::StreamAnnounce{header});

    while (auto frame = next_frame())
    {
      for (const wire::FrameDatagram& d : wire::fragment_frame(header.stream_id, frame->index, frame->pixels))
      {
        if (loss.drop())
        {
          ++summary.datagrams_dropped;
          continue;
        }
        try
        {
          frames.send(d.encode());
          ++summary.datagrams_sent;
        }
        catch (const IoError& e)
        {
          if (!frame_channel_warned)
          {
            spdlog::warn("frame channel send failed, continuing: {}", e.what());
            frame_channel_warned = true;
          }
        }
      }
      ++summary.frames_sent;

      if (config.policy.selects(frame->index))
      {
        if (auto e = builder.push(frame->index, serialize_frame(*frame)))
        {
          send_record(*e);
        }
      }
    }
    if (auto e = builder.flush())
    {
      send_record(*e);
    }
    digests.send(wire::EndOfStream{header.stream_id});
  }
  catch (const IoError& e)
  {
    summary.aborted = true;
    summary.error   = e.what();
    spdlog::error("digest channel failed, capture aborted: {}", e.what());
  }

  summary.wall_time = std::chrono::steady_clock::now() - start;
  return summary;
}

CaptureSummary run_capture_agent(StreamReader& source, const CaptureConfig& config, DigestChannel& digests,
                                 FrameChannel& frames)
{
  return run_capture_agent(source.header(), [&] { return source.next(); }, config, digests, frames);
}

FileArchive::FileArchive(std::filesystem::path archive, std::filesystem::path gaps)
  : archive_path_(std::move(archive))
  , gaps_path_(std::move(gaps))
{}

void FileArchive::begin(const StreamHeader& header)
{
  header_ = header;
  file_.open(archive_path_, std::ios::binary | std::ios::in | std::ios::out | std::ios::trunc);
  if (!file_)
  {
    throw IoError("cannot create archive " + archive_path_.string());
  }
  const Bytes head = header.encode();
  file_.write(reinterpret_cast<const char*>(head.data()), static_cast<std::streamsize>(head.size()));
  if (!file_)
  {
    throw IoError("failed writing archive header");
  }
}

void FileArchive::write_frame(std::uint64_t frame_id, ByteView pixels)
{
  const auto offset = static_cast<std::streamoff>(kStreamHeaderSize + frame_id * header_.frame_size());
  file_.seekp(offset);
  file_.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
  if (!file_)
  {
    throw IoError("failed writing frame " + std::to_string(frame_id) + " to archive");
  }
}

void FileArchive::finish(const std::vector<std::uint64_t>& gaps)
{
  const Bytes zeros(header_.frame_size(), 0);
  for (std::uint64_t id : gaps)
  {
    write_frame(id, zeros);
  }
  file_.flush();
  file_.close();
  write_gap_list(gaps_path_, gaps);
}

void MemoryArchive::begin(const StreamHeader& h) { header = h; }

void MemoryArchive::write_frame(std::uint64_t frame_id, ByteView pixels)
{
  ++write_calls;
  frames[frame_id] = Bytes(pixels.begin(), pixels.end());
}

void MemoryArchive::finish(const std::vector<std::uint64_t>& g) { gaps = g; }

Bytes MemoryArchive::sfv_bytes() const
{
  if (!header)
  {
    throw Error("archive has no stream");
  }
  Bytes out = header->encode();
  const Bytes zeros(header->frame_size(), 0);
  for (std::uint64_t i = 0; i < header->frame_count; ++i)
  {
    auto it          = frames.find(i);
    const Bytes& src = it == frames.end() ? zeros : it->second;
    out.insert(out.end(), src.begin(), src.end());
  }
  return out;
}

void write_gap_list(const std::filesystem::path& path, const std::vector<std::uint64_t>& gaps)
{
  std::ofstream out(path, std::ios::trunc);
  out << "# veriframe gaps\n";
  for (std::uint64_t id : gaps)
  {
    out << id << '\n';
  }
  if (!out)
  {
    throw IoError("failed writing gap list " + path.string());
  }
}

std::vector<std::uint64_t> read_gap_list(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in)
  {
    throw IoError("cannot open gap list " + path.string());
  }
  std::vector<std::uint64_t> gaps;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line))
  {
    ++line_no;
    if (line.empty() || line[0] == '#')
    {
      continue;
    }
    try
    {
      std::size_t used = 0;
      gaps.push_back(std::stoull(line, &used));
      if (used != line.size())
      {
        throw std::invalid_argument("trailing characters");
      }
    }
    catch (const std::exception&)
    {
      throw InvalidArgument("gap list line " + std::to_string(line_no) + " is not a frame id");
    }
  }
  std::sort(gaps.begin(), gaps.end());
  gaps.erase(std::unique(gaps.begin(), gaps.end()), gaps.end());
  return gaps;
}

IngestState::IngestState(ArchiveSink& archive, ledger::LedgerSink& ledger)
  : archive_(archive)
  , ledger_(ledger)
{}

void IngestState::on_hash_payload(ByteView payload) { on_hash_message(wire::decode_message(payload)); }

void IngestState::on_hash_message(const wire::HashChannelMessage& msg)
{
  if (closed_)
  {
    throw ProtocolError("message after reconciliation window closed");
  }
  if (const auto* a = std::get_if<wire::StreamAnnounce>(&msg))
  {
    if (header_)
    {
      throw ProtocolError("duplicate stream announce");
    }
    header_ = a->header;
    archive_.begin(*header_);
    auto early = std::move(early_);
    early_.clear();
    for (const auto& d : early)
    {
      accept_fragment(d);
    }
    return;
  }
  if (!header_)
  {
    throw ProtocolError("hash channel message before stream announce");
  }
  if (const auto* r = std::get_if<wire::RecordMessage>(&msg))
  {
    if (ended_)
    {
      throw ProtocolError("digest record after end of stream");
    }
    ++summary_.records_received;
    records_.push_back(r->record);
    return;
  }
  const auto& eos = std::get<wire::EndOfStream>(msg);
  if (eos.stream_id != header_->stream_id)
  {
    throw ProtocolError("end of stream for an unannounced stream");
  }
  ended_ = true;
}

void IngestState::on_datagram(ByteView raw)
{
  ++summary_.datagrams_received;
  wire::FrameDatagram d;
  try
  {
    d = wire::FrameDatagram::decode(raw);
  }
  catch (const ParseError& e)
  {
    ++summary_.datagrams_malformed;
    spdlog::debug("dropping malformed datagram: {}", e.what());
    return;
  }
  if (closed_)
  {
    return;
  }
  if (!header_)
  {
    early_.push_back(std::move(d));
    return;
  }
  accept_fragment(d);
}

bool IngestState::fragment_consistent(const wire::FrameDatagram& d) const
{
  const std::uint64_t size = header_->frame_size();
  if (d.stream_id != header_->stream_id || d.frame_id >= header_->frame_count)
  {
    return false;
  }
  if (d.frag_count != wire::fragment_count(size) || d.frag_index >= d.frag_count)
  {
    return false;
  }
  const std::uint64_t begin    = static_cast<std::uint64_t>(d.frag_index) * wire::kMaxFragmentPayload;
  const std::uint64_t expected = std::min<std::uint64_t>(wire::kMaxFragmentPayload, size - begin);
  return d.payload.size() == expected;
}

void IngestState::accept_fragment(const wire::FrameDatagram& d)
{
  if (!fragment_consistent(d))
  {
    ++summary_.datagrams_malformed;
    return;
  }
  if (complete_.contains(d.frame_id))
  {
    return;
  }
  Partial& p = partial_[d.frame_id];
  if (p.have.empty())
  {
    p.have.assign(d.frag_count, false);
    p.pixels.assign(header_->frame_size(), 0);
  }
  if (p.have[d.frag_index])
  {
    return;
  }
  p.have[d.frag_index] = true;
  ++p.count;
  std::copy(d.payload.begin(), d.payload.end(),
            p.pixels.begin() + static_cast<std::ptrdiff_t>(d.frag_index * wire::kMaxFragmentPayload));

  if (p.count == d.frag_count)
  {
    archive_.write_frame(d.frame_id, p.pixels);
    complete_.insert(d.frame_id);
    partial_.erase(d.frame_id);
  }
}

IngestSummary IngestState::close_window()
{
  if (closed_)
  {
    throw Error("reconciliation window already closed");
  }
  closed_ = true;
  if (!header_)
  {
    return summary_;
  }

  summary_.frames_received = complete_.size();
  for (std::uint64_t i = 0; i < header_->frame_count; ++i)
  {
    if (!complete_.contains(i))
    {
      summary_.gaps.push_back(i);
    }
  }
  partial_.clear();
  archive_.finish(summary_.gaps);

  for (const DigestRecord& rec : records_)
  {
    DiscardedRecord d{rec, {}, {}};
    if (rec.stream_id != header_->stream_id)
    {
      d.reason = "record for an unannounced stream";
    }
    else if (rec.frame_id_end >= header_->frame_count)
    {
      d.reason = "record range beyond end of stream";
    }
    else
    {
      for (std::uint64_t id = rec.frame_id_start; id <= rec.frame_id_end; ++id)
      {
        if (!complete_.contains(id))
        {
          d.missing.push_back(id);
        }
      }
      if (!d.missing.empty())
      {
        d.reason = std::to_string(d.missing.size()) + " covered frame(s) missing";
      }
    }

    if (d.reason.empty())
    {
      ledger_.submit(rec);
      ++summary_.records_committed;
    }
    else
    {
      spdlog::info("discarding record for frames {}-{}: {}", rec.frame_id_start, rec.frame_id_end, d.reason);
      ++summary_.records_discarded;
      summary_.discarded.push_back(std::move(d));
    }
  }
  return summary_;
}

void LoopbackDigestChannel::send(const wire::HashChannelMessage& msg)
{
  const Bytes framed = wire::frame_payload(wire::encode_message(msg));
  wire::FrameDecoder decoder;
  decoder.feed(framed);
  while (auto payload = decoder.next())
  {
    ingest_.on_hash_payload(*payload);
  }
}

} // namespace veriframe::transport
