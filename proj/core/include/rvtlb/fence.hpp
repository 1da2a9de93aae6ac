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
#include <unordered_map>

#include "rvtlb/pagewalk.hpp"
#include "rvtlb/types.hpp"

namespace rvtlb {

/// An executed SFENCE.VMA: both register operands are optional, giving
/// four shapes (full, vaddr, asid, vaddr+asid).
struct FenceOp {
  uint16_t hart_id = 0;
  std::optional<uint64_t> vaddr;
  std::optional<uint32_t> asid;
};

enum class FenceShape : uint8_t {
  Full = 0,
  VaddrOnly = 1,
  AsidOnly = 2,
  VaddrAsid = 3,
};
inline constexpr unsigned kFenceShapeCount = 4;

constexpr FenceShape shape(const FenceOp& op) {
  if (op.vaddr && op.asid) return FenceShape::VaddrAsid;
  if (op.vaddr) return FenceShape::VaddrOnly;
  if (op.asid) return FenceShape::AsidOnly;
  return FenceShape::Full;
}

const char* to_string(FenceShape s);

/// Why a targeted fence was issued, judged against what the TLBs could
/// have cached for the page.
enum class FlushCategory : uint8_t {
  NeverAccessed = 0,
  PreviouslyInvalid = 1,
  PreviouslyNonWritable = 2,
  Necessary = 3,
};
inline constexpr unsigned kFlushCategoryCount = 4;

const char* to_string(FlushCategory category);

/// Identifies the ASID comparison domain of a translation: per-hart for
/// topologies without a global ASID space (scope = hart id + 1), global
/// otherwise (scope = 0, with MASI partitioning the space). The asid
/// field holds the post-remap tag where applicable.
struct DomainTag {
  uint64_t scope = 0;
  uint64_t masi = 0;
  uint64_t vmid = 0;
  uint32_t asid = 0;

  friend bool operator==(const DomainTag&, const DomainTag&) = default;

  struct Hash {
    size_t operator()(const DomainTag& t) const {
      uint64_t h = t.scope * 0x9e3779b97f4a7c15ull;
      h ^= t.masi + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
      h ^= t.vmid + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
      h ^= t.asid + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
      return static_cast<size_t>(h);
    }
  };
};

/// Per-page walk history: what the last walk saw and what the backing PTE
/// holds now (kept current from the PTE mutation stream). This is the
/// measurement apparatus behind fence categorization; it never influences
/// translation.
class PteHistory {
 public:
  enum class Outcome : uint8_t { Invalid, Perms };

  struct Record {
    Outcome outcome = Outcome::Invalid;
    bool had_w = false;
    uint64_t pte_paddr = 0;
    uint64_t current_raw = 0;
  };

  /// Record the outcome of a walk for (domain, vpn). Non-canonical
  /// results are not recorded (no table entry was ever consulted).
  void on_walk(const DomainTag& domain, uint64_t vpn, const WalkResult& result);

  /// Track a PTE word change so current_raw stays fresh.
  void on_mutation(const PteMutation& event);

  /// Classify a targeted fence covering (domain, vpn).
  FlushCategory categorize(const DomainTag& domain, uint64_t vpn) const;

  std::optional<Record> record_for(const DomainTag& domain, uint64_t vpn) const;

  size_t size() const;

 private:
  struct Key {
    DomainTag domain;
    uint64_t vpn = 0;
    friend bool operator==(const Key&, const Key&) = default;
    struct Hash {
      size_t operator()(const Key& k) const {
        return DomainTag::Hash{}(k.domain) ^ (k.vpn * 0xff51afd7ed558ccdull);
      }
    };
  };

  mutable std::mutex mutex_;
  std::unordered_map<Key, Record, Key::Hash> records_;
  // paddr -> keys whose record points at it; entries go stale when a
  // record is overwritten by a new walk and are skipped on use.
  std::unordered_multimap<uint64_t, Key> by_paddr_;
};

/// Pure classification rule, shared by PteHistory::categorize and tests:
/// no record = never accessed; invalid-then-valid = previously invalid;
/// readonly-then-writable = previously non-writable; anything else is a
/// necessary flush.
FlushCategory classify(const std::optional<PteHistory::Record>& record);

}  // namespace rvtlb
