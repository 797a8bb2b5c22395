#pragma once

// In-process capture -> ingest -> commit, and the one-command demo built on it.

#include "veriframe/ledger/sim.hpp"
#include "veriframe/transport.hpp"
#include "veriframe/verifier.hpp"

#include <filesystem>
#include <optional>
#include <string>

namespace veriframe::pipeline {

struct PipelineResult
{
  transport::CaptureSummary capture;
  transport::IngestSummary ingest;
  std::uint64_t blocks_committed = 0;
};

/// Streams `source` through loopback channels into `archive`, forwards the
/// reconciled records to `cluster` and commits them.
PipelineResult run_pipeline(const StreamHeader& header, const transport::FrameSource& source,
                            const transport::CaptureConfig& capture, transport::ArchiveSink& archive,
                            ledger::Cluster& cluster, ledger::SimNetwork& network);

struct Scenario
{
  enum class Kind
  {
    clean,
    tampered,
    lossy,
  };
  Kind kind          = Kind::clean;
  std::uint64_t k    = 0;   // tampered frames
  double p           = 0.0; // datagram drop probability

  /// "clean", "tampered:<k>", "lossy:<p>".
  static Scenario parse(std::string_view text);
  std::string to_string() const;
};

struct DemoOptions
{
  Scenario scenario;
  std::filesystem::path out_dir;
  std::uint64_t seed      = 1;
  std::uint64_t frames    = 303;
  std::uint32_t width     = 256;
  std::uint32_t height    = 134;
  std::uint8_t channels   = 1;
  SelectionPolicy policy  = SelectionPolicy::all();
  DigestAlgorithm algorithm = DigestAlgorithm::md5;
  WriteMode mode          = WriteMode::per_frame();
};

struct DemoResult
{
  verify::VerificationReport report;
  int exit_code = 0;
  std::vector<std::uint64_t> tampered_frames;
  std::vector<std::uint64_t> lost_frames;
  PipelineResult pipeline;
  std::filesystem::path report_json;
  std::filesystem::path report_text;
  std::filesystem::path chain_file;
};

/// The `count` distinct frame ids the demo tampers with, ascending.
std::vector<std::uint64_t> demo_tamper_frames(std::uint64_t frames, std::uint64_t count, std::uint64_t seed);

/// Boots a three-member in-process cluster, captures a synthetic stream,
/// commits, optionally tampers, verifies and writes reports into `out_dir`.
/// Stage failures throw StageError.
DemoResult run_demo(const DemoOptions& options);

class StageError : public Error
{
public:
  StageError(std::string stage, const std::string& what)
    : Error(stage + ": " + what)
    , stage_(std::move(stage))
  {}
  const std::string& stage() const noexcept { return stage_; }

private:
  std::string stage_;
};

} // namespace veriframe::pipeline
