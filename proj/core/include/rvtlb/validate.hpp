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

#include <iosfwd>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "rvtlb/hierarchy.hpp"

namespace rvtlb {

enum class ViolationKind : uint8_t {
  AsidReuseWithoutFlush = 0,
  StalePteUpdate = 1,
  DuplicateAsidForPageTable = 2,
};

const char* to_string(ViolationKind kind);

/// A detected operating-system mistake, reproducible from the sequence
/// number in the recorded event stream.
struct Violation {
  ViolationKind kind;
  uint64_t seq = 0;
  uint16_t hart_id = 0;
  uint32_t asid = 0;
  uint64_t root_ppn = 0;
  uint64_t vpn = 0;
  uint64_t old_raw = 0;
  uint64_t new_raw = 0;

  std::string describe() const;
};

/// Ideal-TLB-backed detectors for OS software mistakes:
///   - an ASID rebound to a different page table with no intervening
///     matching fence (ASID 0 exempt: software without ASID support
///     legitimately reuses it);
///   - a PTE backing a cached leaf rewritten to a different PPN or with
///     reduced R/W/X, then served from a translation cache before a
///     covering fence;
///   - several live ASIDs naming one page table.
///
/// The validator is a pure observer: it never alters translation results.
class Validator final : public SystemObserver {
 public:
  Validator() = default;

  void on_translate(const TranslateEvent& event) override;
  void on_satp_write(const SatpWriteEvent& event) override;
  void on_pte_mutation(const MutationEvent& event) override;
  void on_fence(const FenceEvent& event) override;

  std::vector<Violation> violations() const;
  size_t violation_count() const;

  /// Optional human-readable log of violations as they are detected.
  void set_log(std::ostream* log) { log_ = log; }

 private:
  struct ScopeKey {
    uint64_t scope = 0;
    uint64_t masi = 0;
    uint64_t vmid = 0;
    friend bool operator==(const ScopeKey&, const ScopeKey&) = default;
    struct Hash {
      size_t operator()(const ScopeKey& k) const {
        return DomainTag::Hash{}(DomainTag{k.scope, k.masi, k.vmid, 0});
      }
    };
  };
  struct Binding {
    uint64_t root_ppn = 0;
    bool fenced_since = false;
  };
  struct PageKey {
    DomainTag domain{};
    uint64_t vpn = 0;
    friend bool operator==(const PageKey&, const PageKey&) = default;
    struct Hash {
      size_t operator()(const PageKey& k) const {
        return DomainTag::Hash{}(k.domain) ^ (k.vpn * 0xff51afd7ed558ccdull);
      }
    };
  };
  struct IdealEntry {
    uint64_t pte_paddr = 0;
    uint64_t leaf_raw = 0;
    uint8_t level = 0;
    bool tainted = false;
    bool reported = false;
    uint64_t taint_old = 0;
    uint64_t taint_new = 0;
  };

  void report(const Violation& v);

  mutable std::mutex mutex_;
  std::vector<Violation> violations_;
  // (scope, asid) -> current binding
  std::unordered_map<DomainTag, Binding, DomainTag::Hash> bindings_;
  // (scope, root) -> live asids pointing at that root
  std::unordered_map<ScopeKey, std::unordered_map<uint64_t, std::vector<uint32_t>>,
                     ScopeKey::Hash>
      roots_;
  // ideal TLB of every successfully walked leaf
  std::unordered_map<PageKey, IdealEntry, PageKey::Hash> ideal_;
  std::ostream* log_ = nullptr;
};

}  // namespace rvtlb
