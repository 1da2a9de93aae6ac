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

#include <functional>
#include <memory>
#include <mutex>
#include <vector>

#include "rvtlb/fence.hpp"
#include "rvtlb/memory.hpp"
#include "rvtlb/pagewalk.hpp"
#include "rvtlb/stats.hpp"
#include "rvtlb/tlb.hpp"
#include "rvtlb/types.hpp"

namespace rvtlb {

/// Machine Address Space Isolation CSR: write-any-read-legal. Writable
/// bits are contiguous from bit 0; the remaining bits read back as a
/// hardwired constant.
class MasiCsr {
 public:
  MasiCsr() = default;
  MasiCsr(uint64_t writable_mask, uint64_t hardwired);

  /// (Re)configure the implemented bits. Throws when writable_mask is not
  /// contiguous from bit 0.
  void configure(uint64_t writable_mask, uint64_t hardwired);

  uint64_t read() const { return value_.load(std::memory_order_relaxed); }
  void write(uint64_t v) {
    value_.store((v & writable_mask_) | hardwired_, std::memory_order_relaxed);
  }
  uint64_t writable_mask() const { return writable_mask_; }

 private:
  uint64_t writable_mask_ = 0;
  uint64_t hardwired_ = 0;
  std::atomic<uint64_t> value_{0};
};

/// L2 arrangement. Geometry is per hart for PrivateL2 and the total
/// capacity for the shared variants.
struct Topology {
  enum class Kind : uint8_t {
    L1Only = 0,
    PrivateL2 = 1,
    SharedL2 = 2,
    SharedL2GlobalAsid = 3,
  };

  Kind kind = Kind::PrivateL2;
  TlbGeometry l2{128, 8};
  /// SharedL2 only: tag every entry with its origin hart. Lookups then
  /// require an exact hart match, so harts contend for capacity but never
  /// exchange entries.
  bool hart_tagged = true;
};

const char* to_string(Topology::Kind kind);

enum class SharingDecision : uint8_t { Share, NoShare, ImplementationDefined };

const char* to_string(SharingDecision d);

struct EntryTags {
  uint64_t masi = 0;
  uint64_t vmid = 0;
  uint32_t asid = 0;
  bool global = false;
};
struct RequesterTags {
  uint64_t masi = 0;
  uint64_t vmid = 0;
  uint32_t asid = 0;
};

/// Whether a cached translation may serve a requester from a different
/// context: MASI mismatch or VMID mismatch forbid sharing; the global bit
/// always shares; equal non-zero ASIDs share, unequal non-zero ASIDs do
/// not; two zero ASIDs do not (software without ASID support); one zero
/// ASID against a non-zero one is implementation-defined.
SharingDecision sharing_decision(const EntryTags& entry,
                                 const RequesterTags& requester);

struct MasiConfig {
  uint64_t writable_mask = 0;
  uint64_t hardwired = 0;
  bool hardwire_hart_id = false;  ///< hardwired value is the hart id
};

struct SystemConfig {
  unsigned harts = 1;
  PagingMode mode = PagingMode::Sv39;
  TlbGeometry l1i{32, 32};
  TlbGeometry l1d{32, 32};
  bool ideal_l1 = false;  ///< replace both L1s with unbounded ideal TLBs
  Topology topology{};
  WalkConfig walk{};
  /// Resolution of SharingDecision::ImplementationDefined rows, applied
  /// consistently for the whole run.
  bool impl_defined_share = false;
  std::vector<MasiConfig> masi;   ///< per hart; shorter vectors repeat the default
  std::vector<uint64_t> vmid;     ///< per hart; default 0
};

enum class TranslateSource : uint8_t { Bare = 0, L1 = 1, L2 = 2, Walk = 3 };

/// Result of a guest memory access translation.
struct Translation {
  bool ok = false;
  uint64_t paddr = 0;
  unsigned level = 0;
  WalkFault fault = WalkFault::InvalidEntry;
  TranslateSource source = TranslateSource::Walk;

  static Translation success(uint64_t paddr, unsigned level, TranslateSource src) {
    return {true, paddr, level, WalkFault::InvalidEntry, src};
  }
  static Translation failed(WalkFault fault, TranslateSource src) {
    return {false, 0, 0, fault, src};
  }
};

/// Ordered event stream consumed by validators and the trace collector.
/// Sequence numbers are assigned at emission; delivery is synchronous and
/// totally ordered. Observers must not call back into the system.
struct TranslateEvent {
  uint64_t seq = 0;
  uint16_t hart_id = 0;
  AccessType access = AccessType::Load;
  uint64_t vaddr = 0;
  uint64_t vpn = 0;
  DomainTag domain{};
  Translation result{};
  bool negative_hit = false;
  uint64_t leaf_raw = 0;   ///< leaf (or offending) PTE raw; 0 if unknown
  uint64_t pte_paddr = 0;  ///< backing PTE location; 0 if unknown
};

struct SatpWriteEvent {
  uint64_t seq = 0;
  uint16_t hart_id = 0;
  Satp old_satp{};
  Satp new_satp{};
  DomainTag domain{};      ///< domain of the new binding (post-remap asid)
  uint32_t raw_asid = 0;   ///< pre-remap asid of the new binding
};

struct MutationEvent {
  uint64_t seq = 0;
  PteMutation mutation{};
};

struct FenceEvent {
  uint64_t seq = 0;
  FenceOp op{};
  DomainTag domain{};  ///< effective domain of the fence
  uint64_t vpn = 0;    ///< level-0 VPN of op.vaddr (when present)
  std::optional<FlushCategory> category;
};

class SystemObserver {
 public:
  virtual ~SystemObserver() = default;
  virtual void on_translate(const TranslateEvent&) {}
  virtual void on_satp_write(const SatpWriteEvent&) {}
  virtual void on_pte_mutation(const MutationEvent&) {}
  virtual void on_fence(const FenceEvent&) {}
};

struct FenceResult {
  std::array<size_t, kTlbLevelCount> flushed{};
  std::optional<FlushCategory> category;

  size_t total_flushed() const { return flushed[0] + flushed[1] + flushed[2]; }
};

/// Callback invoked when a simulated L1 entry disappears (eviction or
/// flush), so the driving ISA simulator can drop the matching entry from
/// its own fast-path TLB and keep it included in L1. Fires before the
/// removal is observable; must not call back into the system.
using L0InvalidateFn = std::function<void(uint16_t hart_id, uint64_t vpn, unsigned level)>;

/// Drop-in walk substitute used by trace replay: produces the recorded
/// outcome instead of consulting page tables.
using WalkProvider = std::function<WalkResult(const Satp&, uint64_t vaddr, AccessType)>;

/// The simulated machine: per-hart SATP/MASI contexts and L1 I/D TLBs, an
/// optional L2 layer, the page walker, fence plumbing, and the statistics
/// fabric. translate may be called concurrently, one driver per hart.
class TlbSystem {
 public:
  explicit TlbSystem(const SystemConfig& config);

  // --- simulation surface -------------------------------------------------

  Translation translate(uint16_t hart_id, uint64_t vaddr, AccessType access);

  /// Replay variant: identical control flow, but a miss past L2 consults
  /// the provider instead of walking simulated memory.
  Translation translate_with(uint16_t hart_id, uint64_t vaddr, AccessType access,
                             const WalkProvider& provider);

  FenceResult sfence(const FenceOp& op);

  /// Swap the hart's SATP in one step. Performs no implicit flush.
  Satp write_satp(uint16_t hart_id, const Satp& new_satp);
  Satp satp(uint16_t hart_id) const;

  /// WARL discovery procedure: write all zeroes, read back; write all
  /// ones, read back; XOR the two reads. The pre-probe value is restored
  /// afterwards (rewriting a legal value is idempotent under WARL).
  uint64_t probe_masi_writable(uint16_t hart_id);

  uint64_t read_masi(uint16_t hart_id) const;
  void write_masi(uint16_t hart_id, uint64_t value);

  /// Retirement counters, driven by the ISA-simulator side.
  void retire(uint16_t hart_id, uint64_t instructions, uint64_t memory_accesses);

  void register_l0_invalidate(L0InvalidateFn fn);

  void add_observer(SystemObserver* observer);
  void remove_observer(SystemObserver* observer);

  // --- introspection -------------------------------------------------------

  SparseMemory& memory() { return *memory_; }
  const SystemConfig& config() const { return config_; }
  StatsSnapshot snapshot() const { return fabric_.snapshot(); }
  StatsFabric& stats() { return fabric_; }
  const PteHistory& history() const { return history_; }

  TlbModel& l1i(uint16_t hart_id) { return *harts_[hart_id]->l1i; }
  TlbModel& l1d(uint16_t hart_id) { return *harts_[hart_id]->l1d; }
  /// The L2 a hart's misses go to; nullptr for L1Only.
  TlbModel* l2_for(uint16_t hart_id);

  /// ASID comparison domain for a hart using the given raw ASID:
  /// per-hart scoped unless the topology assumes a global ASID space, in
  /// which case ASID 0 is remapped to a per-hart synthetic tag.
  DomainTag domain_for(uint16_t hart_id, uint32_t raw_asid) const;

  /// Post-remap ASID used by the shared global-ASID L2.
  uint32_t effective_asid(uint16_t hart_id, uint32_t raw_asid) const;

 private:
  struct HartContext {
    uint16_t hart_id = 0;
    std::atomic<uint64_t> satp_raw{0};
    MasiCsr masi;
    uint64_t vmid = 0;
    std::unique_ptr<TlbModel> l1i;
    std::unique_ptr<TlbModel> l1d;
    std::unique_ptr<TlbModel> l2;  // PrivateL2 only
  };

  // Outcome of consulting a cached entry for a given access.
  enum class EntryUse : uint8_t { Ok, Fault, Retry };
  EntryUse classify_hit(const TlbEntry& entry, AccessType access,
                        WalkFault* fault) const;

  Translation do_translate(uint16_t hart_id, uint64_t vaddr, AccessType access,
                           const WalkProvider* provider);
  LookupKey l2_key(const HartContext& hart, const LookupKey& key) const;
  TlbEntry l2_entry(const HartContext& hart, const TlbEntry& entry) const;
  void fire_l0(uint16_t hart_id, const TlbEntry& victim);
  void check_hart(uint16_t hart_id) const;

  template <typename Fn>
  void emit(Fn&& fn);

  SystemConfig config_;
  std::unique_ptr<SparseMemory> memory_;
  StatsFabric fabric_;
  PteHistory history_;
  std::vector<std::unique_ptr<HartContext>> harts_;
  std::unique_ptr<TlbModel> shared_l2_;
  std::vector<L0InvalidateFn> l0_callbacks_;

  std::mutex event_mutex_;
  uint64_t next_seq_ = 0;
  std::vector<SystemObserver*> observers_;
  std::atomic<bool> have_observers_{false};
};

}  // namespace rvtlb
