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

#include <string>
#include <vector>

#include "rvtlb/hierarchy.hpp"
#include "rvtlb/validate.hpp"

namespace rvtlb {

/// Builds multi-level page tables in simulated memory. Table pages come
/// from a bump allocator; data PPNs are chosen by the caller.
class AddressSpaceBuilder {
 public:
  /// first_table_ppn == 0 picks a mode-appropriate arena (below 2^22 for
  /// Sv32, whose 32-bit PTEs hold 22-bit PPNs).
  AddressSpaceBuilder(SparseMemory& mem, PagingMode mode,
                      uint64_t first_table_ppn = 0);

  /// Allocate a fresh root table and return the SATP naming it.
  Satp new_root(uint32_t asid);

  /// Map vaddr -> ppn with the given PTE flag bits at the given leaf
  /// level (0 = base pages). Intermediate tables are created as needed.
  /// Superpage PPNs must be aligned to the level. Initial mappings are
  /// written silently (no mutation events).
  void map(const Satp& satp, uint64_t vaddr, uint64_t ppn, uint8_t flags,
           unsigned level = 0);

  /// Physical address of the leaf PTE slot for vaddr, creating
  /// intermediate tables down to the given level so the slot exists.
  uint64_t pte_slot(const Satp& satp, uint64_t vaddr, unsigned level = 0);

  uint64_t tables_allocated() const { return next_table_ppn_ - first_table_ppn_; }

 private:
  uint64_t alloc_table();

  SparseMemory& mem_;
  PagingMode mode_;
  uint64_t first_table_ppn_;
  uint64_t next_table_ppn_;
};

/// Scripted page-lifecycle actions with known fence-category ground
/// truth. Fork-style churn decomposes onto these: copy-on-write faults
/// are CowUpgrade events, address-space turnover is AsidRoll.
enum class ScriptAction : uint8_t {
  MapNewPage = 0,        ///< create a mapping, fence; page never accessed
  DemandPage = 1,        ///< touch an invalid page, map it, fence
  CowUpgrade = 2,        ///< read a read-only page, make it writable, fence
  ProtectDowngrade = 3,  ///< write a page, drop its W permission, fence
  RemapPage = 4,         ///< read a page, move it to a new frame, fence
  AsidRoll = 5,          ///< fence an ASID, rebind it to a fresh table
};

struct ScriptEvent {
  uint64_t at_index = 0;  ///< injected before this access index
  uint16_t hart = 0;
  ScriptAction action = ScriptAction::MapNewPage;
};

enum class AsidPolicy : uint8_t { AllZero = 0, PerProcess = 1, PerHart = 2 };

struct AccessPattern {
  enum class Kind : uint8_t { UniformRandom = 0, Loop = 1, Zipf = 2 };
  Kind kind = Kind::UniformRandom;
  uint64_t stride = 1;   ///< Loop only
  double zipf_s = 0.99;  ///< Zipf only
};

/// Synthetic multi-hart workload shape. A fraction of each working set is
/// a region mapped identically (same VPN -> same PPN, G clear) in every
/// address space; the rest is private. With a single process the private
/// region is partitioned into per-hart slices of one shared space.
struct WorkloadSpec {
  unsigned harts = 1;
  unsigned processes = 1;
  uint64_t pages_per_hart = 64;
  double shared_fraction = 0.0;
  AsidPolicy asid_policy = AsidPolicy::PerProcess;
  AccessPattern pattern{};
  uint64_t length = 10000;      ///< total access count across harts
  uint64_t burst = 1;           ///< consecutive accesses per hart turn
  double store_fraction = 0.25;
  double migrate_prob = 0.0;    ///< chance a process hops harts at a burst boundary
  uint64_t seed = 1;
  std::vector<ScriptEvent> script;
};

/// One element of the generated stream; the vocabulary mirrors the trace
/// record ops.
struct WorkloadEvent {
  enum class Kind : uint8_t { Access = 0, Fence = 1, SatpWrite = 2, PteWrite = 3 };

  Kind kind = Kind::Access;
  uint16_t hart = 0;
  AccessType access = AccessType::Load;
  uint64_t vaddr = 0;
  FenceOp fence{};
  std::optional<FlushCategory> expected_category;
  std::optional<ViolationKind> violation_if_dropped;
  Satp satp{};
  uint64_t pte_paddr = 0;
  uint64_t pte_raw = 0;
};

struct GeneratedWorkload {
  std::vector<WorkloadEvent> events;
  std::array<uint64_t, kFlushCategoryCount> expected_categories{};
  /// Indices of fence events whose removal is a detectable OS mistake.
  std::vector<size_t> required_fences;
};

/// Build all address spaces into mem and produce the deterministic event
/// stream for the spec (same seed, same stream, byte for byte). The
/// stream begins with one SatpWrite per hart.
GeneratedWorkload generate(const WorkloadSpec& spec, SparseMemory& mem);

/// Drive a system through the events in stream order on the calling
/// thread. skip_event (SIZE_MAX for none) suppresses one event, which the
/// fault-injection tests use to drop individual fences.
void execute(TlbSystem& system, const GeneratedWorkload& workload,
             size_t skip_event = static_cast<size_t>(-1));

/// Drive a system with one thread per hart. Per-hart event order is
/// preserved; cross-hart order is not, so counters are conserved but not
/// bit-reproducible across runs.
void execute_threaded(TlbSystem& system, const GeneratedWorkload& workload);

}  // namespace rvtlb
