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

#include "rvtlb/memory.hpp"

#include <stdexcept>

namespace rvtlb {

namespace {

void check_aligned(uint64_t paddr, uint64_t align) {
  if (paddr % align != 0)
    throw std::invalid_argument("misaligned physical access at paddr " +
                                std::to_string(paddr));
}

}  // namespace

SparseMemory::Page* SparseMemory::find_page(uint64_t ppn) const {
  std::shared_lock lock(map_mutex_);
  auto it = pages_.find(ppn);
  return it == pages_.end() ? nullptr : it->second.get();
}

SparseMemory::Page& SparseMemory::ensure_page(uint64_t ppn) {
  {
    std::shared_lock lock(map_mutex_);
    auto it = pages_.find(ppn);
    if (it != pages_.end()) return *it->second;
  }
  std::unique_lock lock(map_mutex_);
  auto& slot = pages_[ppn];
  if (!slot) slot = std::make_unique<Page>();
  return *slot;
}

uint64_t SparseMemory::read_u64(uint64_t paddr) const {
  check_aligned(paddr, 8);
  Page* page = find_page(paddr >> kPageShift);
  if (!page) return 0;
  return page->words[(paddr & kPageMask) / 8].load(std::memory_order_relaxed);
}

void SparseMemory::write_u64(uint64_t paddr, uint64_t value) {
  check_aligned(paddr, 8);
  Page& page = ensure_page(paddr >> kPageShift);
  page.words[(paddr & kPageMask) / 8].store(value, std::memory_order_relaxed);
}

uint32_t SparseMemory::read_u32(uint64_t paddr) const {
  check_aligned(paddr, 4);
  Page* page = find_page(paddr >> kPageShift);
  if (!page) return 0;
  uint64_t word =
      page->words[(paddr & kPageMask) / 8].load(std::memory_order_relaxed);
  return static_cast<uint32_t>(paddr & 4 ? word >> 32 : word);
}

void SparseMemory::write_u32(uint64_t paddr, uint32_t value) {
  check_aligned(paddr, 4);
  Page& page = ensure_page(paddr >> kPageShift);
  auto& word = page.words[(paddr & kPageMask) / 8];
  std::lock_guard lock(page.rmw);
  uint64_t old = word.load(std::memory_order_relaxed);
  uint64_t merged = paddr & 4
                        ? (old & 0x00000000ffffffffull) | (static_cast<uint64_t>(value) << 32)
                        : (old & 0xffffffff00000000ull) | value;
  word.store(merged, std::memory_order_relaxed);
}

uint64_t SparseMemory::write_pte(uint64_t paddr, uint64_t raw) {
  check_aligned(paddr, 8);
  Page& page = ensure_page(paddr >> kPageShift);
  auto& word = page.words[(paddr & kPageMask) / 8];
  uint64_t old;
  {
    std::lock_guard lock(page.rmw);
    old = word.load(std::memory_order_relaxed);
    word.store(raw, std::memory_order_relaxed);
  }
  PteMutation event{paddr, old, raw};
  {
    std::lock_guard lock(observer_mutex_);
    for (auto& fn : observers_) fn(event);
  }
  return old;
}

uint64_t SparseMemory::or_pte_bits(uint64_t paddr, uint64_t bits) {
  check_aligned(paddr, 8);
  Page& page = ensure_page(paddr >> kPageShift);
  auto& word = page.words[(paddr & kPageMask) / 8];
  std::lock_guard lock(page.rmw);
  uint64_t merged = word.load(std::memory_order_relaxed) | bits;
  word.store(merged, std::memory_order_relaxed);
  return merged;
}

void SparseMemory::add_mutation_observer(MutationObserver fn) {
  std::lock_guard lock(observer_mutex_);
  observers_.push_back(std::move(fn));
}

size_t SparseMemory::allocated_pages() const {
  std::shared_lock lock(map_mutex_);
  return pages_.size();
}

}  // namespace rvtlb
