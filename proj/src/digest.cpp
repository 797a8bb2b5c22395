#include "veriframe/digest.hpp"

#include <charconv>

namespace veriframe {

std::size_t digest_size(DigestAlgorithm algorithm)
{
  switch (algorithm)
  {
  case DigestAlgorithm::md5:
    return hash::Md5::kDigestSize;
  case DigestAlgorithm::sha256:
    return hash::Sha256::kDigestSize;
  }
  throw InvalidArgument("unknown digest algorithm");
}

DigestAlgorithm parse_algorithm(std::string_view text)
{
  if (text == "md5") return DigestAlgorithm::md5;
  if (text == "sha256") return DigestAlgorithm::sha256;
  throw InvalidArgument("unknown digest algorithm '" + std::string(text) + "' (expected md5|sha256)");
}

DigestAlgorithm algorithm_from_code(std::uint8_t code)
{
  if (code == 1) return DigestAlgorithm::md5;
  if (code == 2) return DigestAlgorithm::sha256;
  throw InvalidArgument("unknown digest algorithm code " + std::to_string(code));
}

std::string to_string(DigestAlgorithm algorithm)
{
  return algorithm == DigestAlgorithm::md5 ? "md5" : "sha256";
}

WriteMode WriteMode::from_wire(std::uint8_t code, std::uint64_t k)
{
  if (k == 0)
  {
    throw InvalidArgument("batch size must be >= 1");
  }
  switch (code)
  {
  case 0:
    if (k != 1)
    {
      throw InvalidArgument("per-frame mode requires k = 1");
    }
    return per_frame();
  case 1:
    return batch_bytes(k);
  case 2:
    return batch_digests(k);
  default:
    throw InvalidArgument("unknown write mode code " + std::to_string(code));
  }
}

WriteMode WriteMode::parse(std::string_view text)
{
  if (text == "perframe")
  {
    return per_frame();
  }
  const auto colon = text.find(':');
  if (colon != std::string_view::npos)
  {
    const std::string_view name = text.substr(0, colon);
    const std::string_view num  = text.substr(colon + 1);
    std::uint64_t k             = 0;
    auto [ptr, ec]              = std::from_chars(num.data(), num.data() + num.size(), k);
    if (ec == std::errc{} && ptr == num.data() + num.size() && k >= 1)
    {
      if (name == "batchbytes") return batch_bytes(k);
      if (name == "batchdigests") return batch_digests(k);
    }
  }
  throw InvalidArgument("invalid write mode '" + std::string(text) +
                        "' (expected perframe|batchbytes:<k>|batchdigests:<k>)");
}

std::string WriteMode::to_string() const
{
  switch (kind_)
  {
  case Kind::per_frame:
    return "perframe";
  case Kind::batch_bytes:
    return "batchbytes:" + std::to_string(k_);
  case Kind::batch_digests:
    return "batchdigests:" + std::to_string(k_);
  }
  return "?";
}

void DigestRecord::validate() const
{
  if (frame_id_start > frame_id_end)
  {
    throw InvalidArgument("record range start exceeds end");
  }
  if (mode.kind() == WriteMode::Kind::per_frame && frame_id_start != frame_id_end)
  {
    throw InvalidArgument("per-frame record must cover exactly one frame");
  }
  if (digest.size() != digest_size(algorithm))
  {
    throw InvalidArgument("digest length " + std::to_string(digest.size()) + " does not match " +
                          veriframe::to_string(algorithm));
  }
}

void DigestRecord::encode_to(ByteWriter& w) const
{
  w.bytes(stream_id);
  w.u8(mode.code());
  w.u64(mode.batch_size());
  w.u64(frame_id_start);
  w.u64(frame_id_end);
  w.u8(static_cast<std::uint8_t>(algorithm));
  w.u8(static_cast<std::uint8_t>(digest.size()));
  w.bytes(digest);
}

Bytes DigestRecord::encode() const
{
  ByteWriter w(43 + digest.size());
  encode_to(w);
  return std::move(w).take();
}

DigestRecord DigestRecord::decode(ByteReader& r)
{
  const std::uint64_t start_offset = r.offset();
  DigestRecord rec;
  rec.stream_id                 = r.array<16>("record stream id");
  const std::uint8_t mode_code  = r.u8("record mode");
  const std::uint64_t k         = r.u64("record batch size");
  rec.frame_id_start            = r.u64("record range start");
  rec.frame_id_end              = r.u64("record range end");
  const std::uint8_t algo_code  = r.u8("record algorithm");
  const std::uint8_t digest_len = r.u8("record digest length");
  const ByteView digest         = r.bytes(digest_len, "record digest");
  rec.digest.assign(digest.begin(), digest.end());
  try
  {
    rec.mode      = WriteMode::from_wire(mode_code, k);
    rec.algorithm = algorithm_from_code(algo_code);
    rec.validate();
  }
  catch (const InvalidArgument& e)
  {
    throw ParseError(std::string("invalid digest record: ") + e.what(), start_offset);
  }
  return rec;
}

Hasher::Hasher(DigestAlgorithm algorithm)
  : algorithm_(algorithm)
{
  if (algorithm == DigestAlgorithm::sha256)
  {
    state_ = hash::Sha256{};
  }
}

void Hasher::update(ByteView data)
{
  std::visit([&](auto& h) { h.update(data); }, state_);
}

Bytes Hasher::finish()
{
  return std::visit(
      [](auto& h) {
        const auto d = h.finish();
        return Bytes(d.begin(), d.end());
      },
      state_);
}

Bytes serialize_frame(const Frame& frame) { return frame.pixels; }

Bytes digest_bytes(DigestAlgorithm algorithm, ByteView data)
{
  Hasher h(algorithm);
  h.update(data);
  return h.finish();
}

RecordBuilder::RecordBuilder(StreamId stream_id, DigestAlgorithm algorithm, WriteMode mode)
  : stream_id_(stream_id)
  , algorithm_(algorithm)
  , mode_(mode)
  , batch_(algorithm)
{
  if (mode.batch_size() == 0)
  {
    throw InvalidArgument("batch size must be >= 1");
  }
}

std::optional<EmittedRecord> RecordBuilder::push(std::uint64_t frame_id, ByteView serialized)
{
  if (pending_ > 0 && frame_id <= last_id_)
  {
    throw InvalidArgument("frames must arrive in ascending index order");
  }
  if (pending_ == 0)
  {
    first_id_ = frame_id;
  }
  last_id_ = frame_id;
  ++pending_;

  if (mode_.kind() == WriteMode::Kind::batch_digests)
  {
    const Bytes d = digest_bytes(algorithm_, serialized);
    batch_.update(d);
    input_bytes_ += d.size();
  }
  else
  {
    batch_.update(serialized);
    input_bytes_ += serialized.size();
  }

  if (pending_ == mode_.batch_size())
  {
    return emit();
  }
  return std::nullopt;
}

std::optional<EmittedRecord> RecordBuilder::flush()
{
  if (pending_ == 0)
  {
    return std::nullopt;
  }
  return emit();
}

EmittedRecord RecordBuilder::emit()
{
  EmittedRecord out;
  out.record.stream_id      = stream_id_;
  out.record.mode           = mode_;
  out.record.frame_id_start = first_id_;
  out.record.frame_id_end   = last_id_;
  out.record.algorithm      = algorithm_;
  out.record.digest         = batch_.finish();
  out.input_bytes           = input_bytes_;

  batch_       = Hasher(algorithm_);
  pending_     = 0;
  input_bytes_ = 0;
  return out;
}

std::vector<DigestRecord> digest_selected(std::span<const Frame> frames, DigestAlgorithm algorithm,
                                          WriteMode mode, const StreamId& stream_id)
{
  RecordBuilder builder(stream_id, algorithm, mode);
  std::vector<DigestRecord> out;
  for (const Frame& f : frames)
  {
    if (auto e = builder.push(f.index, f.pixels))
    {
      out.push_back(std::move(e->record));
    }
  }
  if (auto e = builder.flush())
  {
    out.push_back(std::move(e->record));
  }
  return out;
}

TimedDigest timed_digest(const Frame& frame, DigestAlgorithm algorithm)
{
  using clock = std::chrono::steady_clock;
  TimedDigest out;
  const auto t0       = clock::now();
  const Bytes bytes   = serialize_frame(frame);
  const auto t1       = clock::now();
  out.digest          = digest_bytes(algorithm, bytes);
  const auto t2       = clock::now();
  out.serialize_duration = t1 - t0;
  out.hash_duration      = t2 - t1;
  return out;
}

} // namespace veriframe
