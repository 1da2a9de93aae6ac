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
#include <shared_mutex>
#include <unordered_map>
#include <vector>

#include "rvtlb/types.hpp"

namespace rvtlb {

/// Tiny test-and-set lock. The simulator holds these for a handful of
/// loads/stores at a time, so spinning beats parking.
class SpinLock {
 public:
  void lock() {
    while (flag_.test_and_set(std::memory_order_acquire)) {
#if defined(__cpp_lib_atomic_flag_test)
      while (flag_.test(std::memory_order_relaxed)) {}
#endif
    }
  }
  void unlock() { flag_.clear(std::memory_order_release); }

 private:
  std::atomic_flag flag_ = ATOMIC_FLAG_INIT;
};

/// A page-table word changed: old and new raw values at paddr.
struct PteMutation {
  uint64_t paddr = 0;
  uint64_t old_raw = 0;
  uint64_t new_raw = 0;
};

/// Sparse simulated RAM holding page tables. Pages materialize on first
/// write; reads of unallocated pages return zeros. Word accesses within a
/// page are tear-free, and read-modify-write sequences (A/D updates,
/// write_pte) serialize on a per-page lock only — harts walking disjoint
/// tables never contend.
class SparseMemory {
 public:
  using MutationObserver = std::function<void(const PteMutation&)>;

  SparseMemory() = default;
  SparseMemory(const SparseMemory&) = delete;
  SparseMemory& operator=(const SparseMemory&) = delete;

  uint64_t read_u64(uint64_t paddr) const;
  void write_u64(uint64_t paddr, uint64_t value);

  uint32_t read_u32(uint64_t paddr) const;
  void write_u32(uint64_t paddr, uint32_t value);

  /// Replace a PTE word and notify observers of the (paddr, old, new)
  /// transition. Returns the previous raw value. paddr must be 8-byte
  /// aligned.
  uint64_t write_pte(uint64_t paddr, uint64_t raw);

  /// Atomically OR bits into a PTE word (A/D updates). Returns the new
  /// value.
  uint64_t or_pte_bits(uint64_t paddr, uint64_t bits);

  void add_mutation_observer(MutationObserver fn);

  /// Number of pages materialized so far.
  size_t allocated_pages() const;

 private:
  struct Page {
    std::array<std::atomic<uint64_t>, kPageSize / 8> words{};
    SpinLock rmw;
  };

  Page* find_page(uint64_t ppn) const;
  Page& ensure_page(uint64_t ppn);

  mutable std::shared_mutex map_mutex_;
  std::unordered_map<uint64_t, std::unique_ptr<Page>> pages_;
  std::vector<MutationObserver> observers_;
  mutable SpinLock observer_mutex_;
};

}  // namespace rvtlb
