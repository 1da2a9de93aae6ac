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

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <unordered_map>
#include <vector>

#include "rvtlb/memory.hpp"
#include "rvtlb/prng.hpp"
#include "rvtlb/types.hpp"

namespace rvtlb {

/// ASIDs are stored widened to 32 bits: values at or above kSyntheticAsidBase
/// are per-hart synthetic tags that shared TLBs with a global ASID space
/// substitute for ASID 0.
inline constexpr uint32_t kSyntheticAsidBase = 1u << 16;

constexpr uint32_t synthetic_asid(uint32_t hart_id) {
  return kSyntheticAsidBase + hart_id;
}

/// A cached translation. vpn is the full level-0 VPN with the low
/// bits-per-level * level bits zeroed (superpage base). A negative entry
/// caches an invalid translation and faults on hit instead of re-walking.
struct TlbEntry {
  uint64_t vpn = 0;
  uint8_t level = 0;
  Pte pte{};
  uint32_t asid = 0;
  bool global = false;
  std::optional<uint16_t> hart_tag;
  uint64_t masi_tag = 0;
  uint64_t vmid = 0;
  bool negative = false;
  uint64_t pte_paddr = 0;  ///< where the leaf was read from (0 when unknown)
};

/// Probe key. The requested access type rides along for permission
/// decisions made by the hierarchy, not for tag matching.
struct LookupKey {
  uint64_t vpn = 0;
  uint32_t asid = 0;
  std::optional<uint16_t> hart_tag;
  uint64_t masi_tag = 0;
  uint64_t vmid = 0;
  AccessType access = AccessType::Load;
};

struct TlbGeometry {
  size_t total_entries = 32;
  size_t ways = 32;

  enum class Policy : uint8_t { Fifo, Random };
  Policy policy = Policy::Fifo;
  uint64_t seed = 0;  ///< Random policy only

  size_t sets() const { return total_entries / ways; }
  bool valid() const {
    return total_entries > 0 && ways > 0 && total_entries % ways == 0;
  }
};

/// Which set a VPN falls into: index = (vpn >> 9*level) mod sets.
inline size_t set_index(const TlbGeometry& geometry, uint64_t vpn,
                        unsigned level) {
  return static_cast<size_t>((vpn >> (9 * level)) % geometry.sets());
}

/// Flush filter: entries matching every present field are removed.
/// Global entries survive ASID-only filters but not VPN-bearing or full
/// flushes.
struct FlushFilter {
  std::optional<uint64_t> vpn;
  std::optional<uint32_t> asid;
  std::optional<uint16_t> hart_tag;
};

/// Tag-admission predicate applied after the VPN comparison. The
/// hierarchy supplies topology-specific matchers; the default admits
/// entries whose ASID matches the key (or which are global) within the
/// same VMID.
using TagMatcher = std::function<bool(const TlbEntry&, const LookupKey&)>;

bool match_asid_local(const TlbEntry& entry, const LookupKey& key);

/// Aggregate per-instance counters. The per-hart statistics fabric is
/// maintained by the hierarchy; these exist so a container is observable
/// stand-alone.
struct TlbCounters {
  std::atomic<uint64_t> lookups{0};
  std::atomic<uint64_t> hits{0};
  std::atomic<uint64_t> misses{0};
  std::atomic<uint64_t> evictions{0};
  std::atomic<uint64_t> flushed{0};
};

/// Called with each entry removed by an eviction or flush, before the
/// removal becomes observable. Must not re-enter the TLB.
using EvictionHook = std::function<void(const TlbEntry&)>;

/// Common container contract shared by the bounded models and the ideal
/// TLB. Lookups never update recency: replacement is FIFO or random by
/// construction, never LRU.
class TlbModel {
 public:
  virtual ~TlbModel() = default;

  /// Returns the matching entry and bumps hit/miss counters.
  virtual std::optional<TlbEntry> lookup(const LookupKey& key) = 0;

  /// Counter-free lookup for inspection and tests.
  virtual std::optional<TlbEntry> peek(const LookupKey& key) const = 0;

  /// Insert an entry; returns the victim if one was displaced. An insert
  /// with identical tags replaces in place (keeping the old entry's FIFO
  /// position) and reports no eviction.
  virtual std::optional<TlbEntry> insert(const TlbEntry& entry,
                                         const EvictionHook& hook = {}) = 0;

  /// Remove entries matching the filter; returns how many.
  virtual size_t flush(const FlushFilter& filter,
                       const EvictionHook& hook = {}) = 0;

  virtual size_t size() const = 0;

  void set_matcher(TagMatcher matcher) { matcher_ = std::move(matcher); }

  const TlbCounters& counters() const { return counters_; }

 protected:
  bool admit(const TlbEntry& entry, const LookupKey& key) const {
    return matcher_ ? matcher_(entry, key) : match_asid_local(entry, key);
  }

  TagMatcher matcher_;
  mutable TlbCounters counters_;
};

/// Set-associative TLB with per-set exclusion. ways == total_entries
/// makes it fully associative, ways == 1 direct mapped. vpn_bits_per_level
/// widens the per-level VPN slice for Sv32 (10); the set index function is
/// fixed at 9 bits per level regardless.
class SetAssocTlb final : public TlbModel {
 public:
  explicit SetAssocTlb(const TlbGeometry& geometry,
                       unsigned max_levels = 4,
                       unsigned vpn_bits_per_level = 9);

  std::optional<TlbEntry> lookup(const LookupKey& key) override;
  std::optional<TlbEntry> peek(const LookupKey& key) const override;
  std::optional<TlbEntry> insert(const TlbEntry& entry,
                                 const EvictionHook& hook = {}) override;
  size_t flush(const FlushFilter& filter, const EvictionHook& hook = {}) override;
  size_t size() const override;

  const TlbGeometry& geometry() const { return geometry_; }

 private:
  struct Way {
    TlbEntry entry;
    bool valid = false;
    uint64_t fifo_seq = 0;
  };
  struct Set {
    std::vector<Way> ways;
    uint64_t next_seq = 0;
    uint64_t prng_state = 0;
    mutable SpinLock lock;
  };

  size_t probe_index(uint64_t vpn, unsigned level) const;

  TlbGeometry geometry_;
  unsigned max_levels_;
  unsigned level_bits_;
  std::vector<Set> sets_;
  std::atomic<size_t> live_{0};
};

/// Unbounded translation cache: caches everything it sees, never evicts.
/// Backs the software validators and serves as a reference model.
class IdealTlb final : public TlbModel {
 public:
  explicit IdealTlb(unsigned max_levels = 4, unsigned vpn_bits_per_level = 9);

  std::optional<TlbEntry> lookup(const LookupKey& key) override;
  std::optional<TlbEntry> peek(const LookupKey& key) const override;
  std::optional<TlbEntry> insert(const TlbEntry& entry,
                                 const EvictionHook& hook = {}) override;
  size_t flush(const FlushFilter& filter, const EvictionHook& hook = {}) override;
  size_t size() const override;

  /// Monotonic count of inserts since construction (survives flushes).
  uint64_t insertions() const;

  /// Visit every live entry; mutation of the entries is allowed.
  void for_each(const std::function<void(TlbEntry&)>& fn);

 private:
  std::optional<TlbEntry> find(const LookupKey& key) const;

  unsigned max_levels_;
  unsigned level_bits_;
  // One map per page level, keyed by the level-granular VPN.
  std::vector<std::unordered_multimap<uint64_t, TlbEntry>> by_level_;
  uint64_t insertions_ = 0;
  mutable std::mutex mutex_;
};

/// True when the filter removes this entry. Exposed for the flush logic
/// to be unit-testable against a brute-force oracle.
bool flush_matches(const FlushFilter& filter, const TlbEntry& entry,
                   unsigned vpn_bits_per_level = 9);

}  // namespace rvtlb
