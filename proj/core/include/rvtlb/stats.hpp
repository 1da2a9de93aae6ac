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

#include <array>
#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "rvtlb/fence.hpp"
#include "rvtlb/pagewalk.hpp"

namespace rvtlb {

enum class TlbLevel : uint8_t { L1I = 0, L1D = 1, L2 = 2 };
inline constexpr unsigned kTlbLevelCount = 3;

const char* to_string(TlbLevel level);

/// Point-in-time counter values for one TLB level.
struct LevelCounts {
  uint64_t lookups = 0;
  uint64_t hits = 0;
  uint64_t misses = 0;
  uint64_t evictions = 0;
  uint64_t flushed_entries = 0;

  LevelCounts& operator+=(const LevelCounts& o) {
    lookups += o.lookups;
    hits += o.hits;
    misses += o.misses;
    evictions += o.evictions;
    flushed_entries += o.flushed_entries;
    return *this;
  }
};

/// Everything the simulator counts, per hart plus the cross-hart sum.
/// Each individual value was true at some instant during the snapshot
/// call; counters are not mutually synchronized, so cross-counter skew
/// of in-flight operations is possible and accepted.
struct StatsSnapshot {
  struct PerHart {
    std::array<LevelCounts, kTlbLevelCount> levels{};
    uint64_t walks = 0;
    std::array<uint64_t, kWalkFaultCount> faults{};
    std::array<uint64_t, kFenceShapeCount> fences{};
    std::array<uint64_t, kFlushCategoryCount> fence_categories{};
    uint64_t retired_instructions = 0;
    uint64_t retired_memory_accesses = 0;

    PerHart& operator+=(const PerHart& o);
  };

  std::vector<PerHart> harts;
  PerHart total{};

  const LevelCounts& level(TlbLevel lvl) const {
    return total.levels[static_cast<size_t>(lvl)];
  }
};

/// Sharded atomic counters: one cache-line-aligned block per hart, summed
/// only at snapshot time. Increments are relaxed atomics (indivisible,
/// never lost); snapshot readers never block writers.
class StatsFabric {
 public:
  struct LevelCounters {
    std::atomic<uint64_t> lookups{0};
    std::atomic<uint64_t> hits{0};
    std::atomic<uint64_t> misses{0};
    std::atomic<uint64_t> evictions{0};
    std::atomic<uint64_t> flushed_entries{0};
  };

  struct alignas(64) HartCounters {
    std::array<LevelCounters, kTlbLevelCount> levels{};
    std::atomic<uint64_t> walks{0};
    std::array<std::atomic<uint64_t>, kWalkFaultCount> faults{};
    std::array<std::atomic<uint64_t>, kFenceShapeCount> fences{};
    std::array<std::atomic<uint64_t>, kFlushCategoryCount> fence_categories{};
    std::atomic<uint64_t> retired_instructions{0};
    std::atomic<uint64_t> retired_memory_accesses{0};

    LevelCounters& level(TlbLevel lvl) {
      return levels[static_cast<size_t>(lvl)];
    }
    void count_fault(WalkFault fault) {
      faults[static_cast<size_t>(fault)].fetch_add(1, std::memory_order_relaxed);
    }
  };

  explicit StatsFabric(unsigned harts);

  HartCounters& hart(unsigned hart_id) { return *shards_[hart_id]; }
  unsigned harts() const { return static_cast<unsigned>(shards_.size()); }

  StatsSnapshot snapshot() const;

 private:
  std::vector<std::unique_ptr<HartCounters>> shards_;
};

/// Metrics derived from a snapshot. Data-side (L1-D) misses are measured
/// against the retirement counters: with an inclusive L0, every L0 hit
/// implies L1 residency, so L1 hits can be reconstructed even when most
/// lookups never reach the simulator. Zero denominators yield nullopt.
struct DerivedMetrics {
  std::optional<double> l1_miss_rate;
  std::optional<double> l2_local_miss_rate;
  std::optional<int64_t> effective_l1_hits;
  std::optional<double> mpki;
};

DerivedMetrics derive_metrics(const StatsSnapshot& snapshot);

}  // namespace rvtlb
