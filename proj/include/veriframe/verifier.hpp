#pragma once

#include "veriframe/digest.hpp"
#include "veriframe/frame_io.hpp"
#include "veriframe/ledger/api.hpp"

#include <array>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace veriframe::verify {

enum class Status : std::uint8_t
{
  authentic,
  tampered,
  not_on_ledger,
  frame_missing,
  not_covered,
};

inline constexpr std::size_t kStatusCount = 5;

enum class Overall : std::uint8_t
{
  authentic,
  tampered,
  incomplete,
};

std::string_view to_string(Status s);
std::string_view to_string(Overall o);
Status parse_status(std::string_view text);
Overall parse_overall(std::string_view text);

struct MatchedRecord
{
  std::uint64_t height       = 0;
  std::uint64_t timestamp_us = 0;
  WriteMode mode             = WriteMode::per_frame();

  bool operator==(const MatchedRecord&) const = default;
};

struct Verdict
{
  std::uint64_t frame_id = 0;
  Status status          = Status::not_covered;
  std::optional<MatchedRecord> matched;

  bool operator==(const Verdict&) const = default;
};

struct VerifyParams
{
  SelectionPolicy policy    = SelectionPolicy::all();
  DigestAlgorithm algorithm = DigestAlgorithm::md5;
  WriteMode mode            = WriteMode::per_frame();
};

struct VerificationReport
{
  StreamId stream_id{};
  VerifyParams params;
  std::uint64_t frame_count = 0;
  std::vector<Verdict> verdicts;
  std::array<std::uint64_t, kStatusCount> counts{};
  Overall overall = Overall::authentic;

  std::uint64_t count(Status s) const { return counts[static_cast<std::size_t>(s)]; }
  std::vector<std::uint64_t> frames_with(Status s) const;

  bool operator==(const VerificationReport&) const;
};

/// Recomputes each selected frame or batch exactly as capture did, looks the
/// covering record up on the ledger and compares. A batch comparison is
/// applied to every frame of the batch. Frames outside the policy are
/// NotCovered. Ledger failures propagate (verification needs the ledger).
VerificationReport verify_stream(StreamReader& archive, const std::set<std::uint64_t>& gaps,
                                 const ledger::LedgerView& ledger, const VerifyParams& params);

VerificationReport verify_stream(const std::filesystem::path& archive, const std::optional<std::filesystem::path>& gaps,
                                 const ledger::LedgerView& ledger, const VerifyParams& params);

/// (algorithm, mode) pairs committed for the stream, found via frame 0,
/// which every selection policy includes.
std::vector<std::pair<DigestAlgorithm, WriteMode>> discover_modes(const ledger::LedgerView& ledger,
                                                                  const StreamId& stream_id);

/// 0 authentic, 2 tampered, 3 incomplete.
int exit_code(Overall overall);

std::string render_text(const VerificationReport& report);
/// Stable key order; `parse_report_json(render_json(r)) == r`.
std::string render_json(const VerificationReport& report);
VerificationReport parse_report_json(std::string_view text);

enum class Mutation : std::uint8_t
{
  byte_flip,        // one byte at a seeded offset, XOR 0xFF
  region_overwrite, // a seeded quarter-size rectangle, every byte inverted
};

Mutation parse_mutation(std::string_view text);

/// Mutates exactly the named frames of an SFV1 image; all other bytes are
/// copied unchanged. Throws InvalidArgument for ids outside the stream.
Bytes tamper(ByteView archive, std::span<const std::uint64_t> frame_ids, Mutation mutation, std::uint64_t seed);

void tamper_file(const std::filesystem::path& in, const std::filesystem::path& out,
                 std::span<const std::uint64_t> frame_ids, Mutation mutation, std::uint64_t seed);

} // namespace veriframe::verify
