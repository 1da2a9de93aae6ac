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

#include "rvtlb/memory.hpp"
#include "rvtlb/types.hpp"

namespace rvtlb {

/// Walker behavior knobs for validation experiments.
struct WalkConfig {
  bool update_ad = true;        ///< hardware A/D bit updates
  bool cache_invalid = false;   ///< hand invalid outcomes to the TLBs as negative entries
  bool cache_nonwritable = true;///< cache entries lacking W; stores hitting them fault
};

enum class WalkFault : uint8_t {
  InvalidEntry = 0,
  PermissionDenied = 1,
  MisalignedSuperpage = 2,
  AdRequired = 3,
  NonCanonical = 4,
};
inline constexpr unsigned kWalkFaultCount = 5;

const char* to_string(WalkFault fault);

/// Outcome of a multi-level table walk. On success the leaf PTE carries
/// any A/D bits the walk set, and paddr combines the leaf PPN (with
/// superpage low bits taken from the vaddr) with the page offset.
struct WalkResult {
  bool ok = false;
  Pte leaf{};              ///< leaf PTE (success), or the offending PTE (table faults)
  unsigned level = 0;      ///< leaf level on success; faulting level otherwise
  uint64_t paddr = 0;      ///< translated physical address (success only)
  uint64_t pte_paddr = 0;  ///< physical address of the PTE the walk ended at
  WalkFault fault = WalkFault::InvalidEntry;

  static WalkResult success(Pte leaf, unsigned level, uint64_t paddr,
                            uint64_t pte_paddr) {
    return {true, leaf, level, paddr, pte_paddr, WalkFault::InvalidEntry};
  }
  static WalkResult failed(WalkFault fault, Pte pte = {}, unsigned level = 0,
                           uint64_t pte_paddr = 0) {
    return {false, pte, level, 0, pte_paddr, fault};
  }
};

/// Translate vaddr through the page tables rooted at satp.root_ppn,
/// checking permissions for the requested access and applying A/D updates
/// per cfg. satp.mode must not be Bare (the caller short-circuits Bare).
WalkResult walk(SparseMemory& mem, const Satp& satp, uint64_t vaddr,
                AccessType access, const WalkConfig& cfg);

}  // namespace rvtlb
