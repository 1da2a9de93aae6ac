// Copyright 2026 The rvtlb Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>

#include "rvtlb/hierarchy.hpp"

namespace rvtlb {

/// Trace file header: 8-byte magic, u32 record count (0 while streaming),
/// u32 flags. Everything little-endian. Files starting with the gzip
/// magic are decompressed transparently.
inline constexpr char kTraceMagic[8] = {'R', 'V', 'T', 'L', 'B', 'T', '0', '1'};
inline constexpr size_t kTraceHeaderSize = 16;

/// One 32-byte little-endian trace record.
///
/// Field use by op:
///   Fetch/Load/Store — vaddr: the access; aux: paddr of the resolved (or
///     offending) PTE; payload: its raw value. level_hint bits 2:0 carry
///     the leaf/fault level; bit 7 marks a fault with the kind in bits 6:4.
///   Sfence — level_hint bit 0 = vaddr operand present (in vaddr), bit 1 =
///     asid operand present (in aux).
///   SatpWrite — aux: the new SATP raw value.
///   PteWrite — a pair of records: the first (level_hint 0) carries the
///     old word in aux and the new word in payload; the second
///     (level_hint 1) carries the physical address in payload.
struct TraceRecord {
  enum class Op : uint8_t {
    Fetch = 0,
    Load = 1,
    Store = 2,
    Sfence = 3,
    SatpWrite = 4,
    PteWrite = 5,
  };

  static constexpr size_t kSize = 32;
  static constexpr uint8_t kFaultBit = 0x80;

  uint16_t hart_id = 0;
  Op op = Op::Load;
  uint8_t level_hint = 0;
  uint64_t vaddr = 0;
  uint64_t aux = 0;
  uint64_t payload = 0;

  void encode(uint8_t out[kSize]) const;
  /// Decodes one record; false indicates an unknown op value.
  static bool decode(const uint8_t in[kSize], TraceRecord* out);

  bool is_memory_op() const { return static_cast<uint8_t>(op) <= 2; }
  AccessType access() const { return static_cast<AccessType>(op); }
  unsigned level() const { return level_hint & 0x7; }
  bool faulted() const { return level_hint & kFaultBit; }
  WalkFault fault() const { return static_cast<WalkFault>((level_hint >> 4) & 0x7); }

  static TraceRecord memory(uint16_t hart, AccessType access, uint64_t vaddr,
                            const Translation& result, uint64_t leaf_raw,
                            uint64_t pte_paddr);
  static TraceRecord fence(const FenceOp& op);
  static TraceRecord satp_write(uint16_t hart, const Satp& satp);
};

/// Decode or framing failure, carrying the byte offset it occurred at.
class TraceError : public std::runtime_error {
 public:
  TraceError(const std::string& what, uint64_t offset)
      : std::runtime_error(what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}
  uint64_t offset() const { return offset_; }

 private:
  uint64_t offset_;
};

/// Sequential trace writer. Plain files get their header record count
/// backpatched on close; ".gz" paths are written gzip-compressed and keep
/// a zero (streamed) count.
class TraceWriter {
 public:
  explicit TraceWriter(const std::string& path, uint32_t flags = 0);
  ~TraceWriter();
  TraceWriter(const TraceWriter&) = delete;
  TraceWriter& operator=(const TraceWriter&) = delete;

  void write(const TraceRecord& record);
  void close();
  uint64_t records_written() const { return count_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  uint64_t count_ = 0;
};

/// Sequential trace reader over plain or gzip-compressed files.
class TraceReader {
 public:
  explicit TraceReader(const std::string& path);
  ~TraceReader();
  TraceReader(const TraceReader&) = delete;
  TraceReader& operator=(const TraceReader&) = delete;

  /// Next record, or nullopt at a clean end of file. Throws TraceError on
  /// framing or decode problems.
  std::optional<TraceRecord> next();

  uint32_t declared_count() const { return declared_count_; }
  uint32_t flags() const { return flags_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  uint32_t declared_count_ = 0;
  uint32_t flags_ = 0;
  uint64_t offset_ = 0;
  uint64_t records_read_ = 0;
};

/// Observer that serializes the live event stream into trace records.
/// Multi-hart runs are totally ordered at collection time; emission is
/// already serialized by the system's event lock.
class TraceCollector final : public SystemObserver {
 public:
  /// Snapshots each hart's current SATP into leading records so replay
  /// starts from identical context.
  TraceCollector(TlbSystem& system, TraceWriter& writer);

  void on_translate(const TranslateEvent& event) override;
  void on_satp_write(const SatpWriteEvent& event) override;
  void on_pte_mutation(const MutationEvent& event) override;
  void on_fence(const FenceEvent& event) override;

 private:
  TraceWriter& writer_;
  std::mutex mutex_;
};

/// Drive a configured system from a trace: memory ops perform L1/L2
/// lookups with payload-backed fills (no page walking), fences, SATP
/// writes and PTE writes drive the corresponding modules. Returns the
/// final snapshot. Deterministic: same file + same config = identical
/// counters.
StatsSnapshot replay(TraceReader& reader, TlbSystem& system);
StatsSnapshot replay_file(const std::string& path, TlbSystem& system);

}  // namespace rvtlb
