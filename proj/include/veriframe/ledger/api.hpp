#pragma once

#include "veriframe/digest.hpp"

#include <cstdint>
#include <vector>

namespace veriframe::ledger {

/// A committed record located by frame number.
struct QueryHit
{
  DigestRecord record;
  std::uint64_t height       = 0;
  std::uint64_t timestamp_us = 0;
  std::uint32_t tx_index     = 0;

  bool operator==(const QueryHit&) const = default;
};

/// Write side used by ingest.
class LedgerSink
{
public:
  virtual ~LedgerSink() = default;
  virtual void submit(const DigestRecord& record) = 0;
};

/// Read side used by verification.
class LedgerView
{
public:
  virtual ~LedgerView() = default;
  /// Every committed record whose range contains `frame_id`. Empty means "not on ledger".
  virtual std::vector<QueryHit> query(const StreamId& stream_id, std::uint64_t frame_id) const = 0;
};

/// Test double that keeps submissions in order.
class RecordingSink : public LedgerSink
{
public:
  void submit(const DigestRecord& record) override { records.push_back(record); }
  std::vector<DigestRecord> records;
};

} // namespace veriframe::ledger
