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

#include "rvtlb/tlb.hpp"

#include <cassert>
#include <limits>

namespace rvtlb {

namespace {

constexpr uint64_t level_mask(unsigned level, unsigned bits) {
  return (1ull << (bits * level)) - 1;
}

bool vpn_covers(const TlbEntry& entry, uint64_t vpn, unsigned bits) {
  return (vpn & ~level_mask(entry.level, bits)) == entry.vpn;
}

bool same_tags(const TlbEntry& a, const TlbEntry& b) {
  return a.vpn == b.vpn && a.level == b.level && a.asid == b.asid &&
         a.hart_tag == b.hart_tag && a.masi_tag == b.masi_tag &&
         a.vmid == b.vmid;
}

}  // namespace

bool match_asid_local(const TlbEntry& entry, const LookupKey& key) {
  if (entry.vmid != key.vmid) return false;
  if (entry.hart_tag && entry.hart_tag != key.hart_tag) return false;
  return entry.global || entry.asid == key.asid;
}

bool flush_matches(const FlushFilter& filter, const TlbEntry& entry,
                   unsigned vpn_bits_per_level) {
  if (filter.vpn && !vpn_covers(entry, *filter.vpn, vpn_bits_per_level))
    return false;
  if (filter.hart_tag && entry.hart_tag != filter.hart_tag) return false;
  if (filter.asid) {
    // Global entries survive ASID-only fences; a VPN-bearing filter
    // removes them regardless of the ASID operand.
    if (entry.global) return filter.vpn.has_value();
    if (entry.asid != *filter.asid) return false;
  }
  return true;
}

SetAssocTlb::SetAssocTlb(const TlbGeometry& geometry, unsigned max_levels,
                         unsigned vpn_bits_per_level)
    : geometry_(geometry),
      max_levels_(max_levels),
      level_bits_(vpn_bits_per_level),
      sets_(geometry.sets()) {
  assert(geometry.valid());
  for (size_t i = 0; i < sets_.size(); ++i) {
    sets_[i].ways.resize(geometry_.ways);
    sets_[i].prng_state = geometry_.seed ^ (0x9e3779b97f4a7c15ull * (i + 1));
  }
}

size_t SetAssocTlb::probe_index(uint64_t vpn, unsigned level) const {
  // Index on the level-masked VPN so that a wide-slice (Sv32) superpage
  // probes the same set its base was inserted into.
  return set_index(geometry_, vpn & ~level_mask(level, level_bits_), level);
}

std::optional<TlbEntry> SetAssocTlb::peek(const LookupKey& key) const {
  for (unsigned level = 0; level < max_levels_; ++level) {
    const Set& set = sets_[probe_index(key.vpn, level)];
    std::lock_guard lock(set.lock);
    for (const auto& way : set.ways) {
      if (!way.valid || way.entry.level != level) continue;
      if (!vpn_covers(way.entry, key.vpn, level_bits_)) continue;
      if (!admit(way.entry, key)) continue;
      return way.entry;
    }
  }
  return std::nullopt;
}

std::optional<TlbEntry> SetAssocTlb::lookup(const LookupKey& key) {
  counters_.lookups.fetch_add(1, std::memory_order_relaxed);
  auto hit = peek(key);
  if (hit)
    counters_.hits.fetch_add(1, std::memory_order_relaxed);
  else
    counters_.misses.fetch_add(1, std::memory_order_relaxed);
  return hit;
}

std::optional<TlbEntry> SetAssocTlb::insert(const TlbEntry& entry,
                                            const EvictionHook& hook) {
  Set& set = sets_[probe_index(entry.vpn, entry.level)];
  std::lock_guard lock(set.lock);

  // Tag-identical entry: replace in place, keep FIFO position.
  for (auto& way : set.ways) {
    if (way.valid && same_tags(way.entry, entry)) {
      way.entry = entry;
      return std::nullopt;
    }
  }

  // Lowest-index empty way.
  for (auto& way : set.ways) {
    if (!way.valid) {
      way.entry = entry;
      way.valid = true;
      way.fifo_seq = set.next_seq++;
      live_.fetch_add(1, std::memory_order_relaxed);
      return std::nullopt;
    }
  }

  size_t victim_idx = 0;
  if (geometry_.policy == TlbGeometry::Policy::Random) {
    victim_idx = splitmix64_next(set.prng_state) % geometry_.ways;
  } else {
    uint64_t oldest = std::numeric_limits<uint64_t>::max();
    for (size_t i = 0; i < set.ways.size(); ++i) {
      if (set.ways[i].fifo_seq < oldest) {
        oldest = set.ways[i].fifo_seq;
        victim_idx = i;
      }
    }
  }

  TlbEntry victim = set.ways[victim_idx].entry;
  if (hook) hook(victim);
  set.ways[victim_idx].entry = entry;
  set.ways[victim_idx].fifo_seq = set.next_seq++;
  counters_.evictions.fetch_add(1, std::memory_order_relaxed);
  return victim;
}

size_t SetAssocTlb::flush(const FlushFilter& filter, const EvictionHook& hook) {
  size_t removed = 0;
  for (auto& set : sets_) {
    std::lock_guard lock(set.lock);
    for (auto& way : set.ways) {
      if (!way.valid || !flush_matches(filter, way.entry, level_bits_))
        continue;
      if (hook) hook(way.entry);
      way.valid = false;
      ++removed;
    }
  }
  live_.fetch_sub(removed, std::memory_order_relaxed);
  counters_.flushed.fetch_add(removed, std::memory_order_relaxed);
  return removed;
}

size_t SetAssocTlb::size() const {
  return live_.load(std::memory_order_relaxed);
}

IdealTlb::IdealTlb(unsigned max_levels, unsigned vpn_bits_per_level)
    : max_levels_(max_levels),
      level_bits_(vpn_bits_per_level),
      by_level_(max_levels) {}

std::optional<TlbEntry> IdealTlb::find(const LookupKey& key) const {
  for (unsigned level = 0; level < max_levels_; ++level) {
    uint64_t base = key.vpn & ~level_mask(level, level_bits_);
    auto [begin, end] = by_level_[level].equal_range(base);
    for (auto it = begin; it != end; ++it) {
      if (admit(it->second, key)) return it->second;
    }
  }
  return std::nullopt;
}

std::optional<TlbEntry> IdealTlb::peek(const LookupKey& key) const {
  std::lock_guard lock(mutex_);
  return find(key);
}

std::optional<TlbEntry> IdealTlb::lookup(const LookupKey& key) {
  std::lock_guard lock(mutex_);
  counters_.lookups.fetch_add(1, std::memory_order_relaxed);
  auto hit = find(key);
  if (hit)
    counters_.hits.fetch_add(1, std::memory_order_relaxed);
  else
    counters_.misses.fetch_add(1, std::memory_order_relaxed);
  return hit;
}

std::optional<TlbEntry> IdealTlb::insert(const TlbEntry& entry,
                                         const EvictionHook&) {
  std::lock_guard lock(mutex_);
  ++insertions_;
  auto [begin, end] = by_level_[entry.level].equal_range(entry.vpn);
  for (auto it = begin; it != end; ++it) {
    if (same_tags(it->second, entry)) {
      it->second = entry;
      return std::nullopt;
    }
  }
  by_level_[entry.level].emplace(entry.vpn, entry);
  return std::nullopt;
}

size_t IdealTlb::flush(const FlushFilter& filter, const EvictionHook& hook) {
  std::lock_guard lock(mutex_);
  size_t removed = 0;
  for (auto& level : by_level_) {
    for (auto it = level.begin(); it != level.end();) {
      if (flush_matches(filter, it->second, level_bits_)) {
        if (hook) hook(it->second);
        it = level.erase(it);
        ++removed;
      } else {
        ++it;
      }
    }
  }
  counters_.flushed.fetch_add(removed, std::memory_order_relaxed);
  return removed;
}

size_t IdealTlb::size() const {
  std::lock_guard lock(mutex_);
  size_t n = 0;
  for (const auto& level : by_level_) n += level.size();
  return n;
}

uint64_t IdealTlb::insertions() const {
  std::lock_guard lock(mutex_);
  return insertions_;
}

void IdealTlb::for_each(const std::function<void(TlbEntry&)>& fn) {
  std::lock_guard lock(mutex_);
  for (auto& level : by_level_)
    for (auto& [vpn, entry] : level) fn(entry);
}

}  // namespace rvtlb
