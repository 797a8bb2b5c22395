#pragma once

// Desk-scale timing of frame serialization, hashing and the full
// capture -> ingest -> commit loop, over a grid of resolutions, algorithms,
// write modes and selection policies.

#include "veriframe/digest.hpp"
#include "veriframe/frame_io.hpp"

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace veriframe::bench {

struct Resolution
{
  std::string name;
  std::uint32_t width  = 0;
  std::uint32_t height = 0;

  std::uint64_t pixels() const noexcept { return static_cast<std::uint64_t>(width) * height; }
  bool operator==(const Resolution&) const = default;
};

/// v1 256x134 ... v6 1920x1012.
const std::vector<Resolution>& resolution_presets();

struct BenchConfig
{
  std::vector<Resolution> resolutions = resolution_presets();
  std::uint8_t channels               = 1;
  std::uint64_t frames                = 303;
  std::uint64_t repetitions           = 20;
  std::uint64_t e2e_repetitions       = 3; // 0 skips the pipeline timing
  std::uint64_t seed                  = 1;
  std::vector<DigestAlgorithm> algorithms{DigestAlgorithm::md5, DigestAlgorithm::sha256};
  std::vector<WriteMode> modes{WriteMode::per_frame(), WriteMode::batch_bytes(30), WriteMode::batch_digests(30)};
  std::vector<SelectionPolicy> policies{SelectionPolicy::all(), SelectionPolicy::every_nth(30),
                                        SelectionPolicy::every_nth(15)};

  /// Throws InvalidArgument: repetitions < 3, empty axes, invalid resolution.
  void validate() const;

  /// Keys: frames, repetitions, e2e_repetitions, seed, channels, algorithms,
  /// modes, policies, presets (names) and/or [[resolution]] tables.
  static BenchConfig from_toml(std::string_view text);
  static BenchConfig load(const std::filesystem::path& path);
};

struct CellResult
{
  Resolution resolution;
  DigestAlgorithm algorithm = DigestAlgorithm::md5;
  WriteMode mode            = WriteMode::per_frame();
  SelectionPolicy policy    = SelectionPolicy::all();
  std::uint64_t frames      = 0;
  std::uint64_t reps        = 0;
  // Per-run totals over the selected frames, microseconds.
  double median_serialize_us = 0;
  double median_hash_us      = 0;
  std::optional<double> median_e2e_us;
  double min_total_us = 0;
  double max_total_us = 0;
  std::uint64_t bytes_hashed = 0; // digest input of the emitted records
  std::uint64_t records      = 0;

  double median_total_us() const noexcept { return median_serialize_us + median_hash_us; }
};

struct BenchResult
{
  std::vector<CellResult> cells;
};

using Progress = std::function<void(const CellResult&, std::size_t done, std::size_t total)>;

/// Sequential; frames are generated once per resolution from `seed`.
BenchResult run_bench(const BenchConfig& config, const Progress& progress = {});

/// Header row: resolution,width,height,algorithm,mode,policy,frames,reps,
/// median_serialize_us,median_hash_us,median_e2e_us,bytes_hashed,records
void write_csv(const std::vector<CellResult>& cells, std::ostream& out);
std::vector<CellResult> parse_csv(std::istream& in);

struct TrendCheck
{
  std::string name;
  bool pass = false;
  std::string detail;
};

/// (a) monotone median serialize+hash across pixel count, (b) MD5 hash time
/// <= SHA-256 per cell, (c) nth:30 total <= all total. Every resolution of
/// `expected` must be present; absolute times are not compared.
std::vector<TrendCheck> compare_trend(const std::vector<CellResult>& cells,
                                      const std::vector<Resolution>& expected = resolution_presets());

/// Per-frame conversion and hashing times reported for a Raspberry Pi 3 B+
/// (MD5), as trend reference.
struct ReferenceRow
{
  Resolution resolution;
  double conversion_ms = 0;
  double hashing_ms    = 0;
};
const std::vector<ReferenceRow>& reference_times();
void write_reference_csv(std::ostream& out);

} // namespace veriframe::bench
