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

#include "rvtlb/stats.hpp"

namespace rvtlb {

const char* to_string(TlbLevel level) {
  switch (level) {
    case TlbLevel::L1I: return "l1i";
    case TlbLevel::L1D: return "l1d";
    case TlbLevel::L2: return "l2";
  }
  return "?";
}

StatsSnapshot::PerHart& StatsSnapshot::PerHart::operator+=(const PerHart& o) {
  for (size_t i = 0; i < levels.size(); ++i) levels[i] += o.levels[i];
  walks += o.walks;
  for (size_t i = 0; i < faults.size(); ++i) faults[i] += o.faults[i];
  for (size_t i = 0; i < fences.size(); ++i) fences[i] += o.fences[i];
  for (size_t i = 0; i < fence_categories.size(); ++i)
    fence_categories[i] += o.fence_categories[i];
  retired_instructions += o.retired_instructions;
  retired_memory_accesses += o.retired_memory_accesses;
  return *this;
}

StatsFabric::StatsFabric(unsigned harts) {
  shards_.reserve(harts);
  for (unsigned i = 0; i < harts; ++i)
    shards_.push_back(std::make_unique<HartCounters>());
}

namespace {

uint64_t rd(const std::atomic<uint64_t>& a) {
  return a.load(std::memory_order_relaxed);
}

}  // namespace

StatsSnapshot StatsFabric::snapshot() const {
  StatsSnapshot snap;
  snap.harts.resize(shards_.size());
  for (size_t h = 0; h < shards_.size(); ++h) {
    const HartCounters& src = *shards_[h];
    StatsSnapshot::PerHart& dst = snap.harts[h];
    for (size_t l = 0; l < kTlbLevelCount; ++l) {
      dst.levels[l].lookups = rd(src.levels[l].lookups);
      dst.levels[l].hits = rd(src.levels[l].hits);
      dst.levels[l].misses = rd(src.levels[l].misses);
      dst.levels[l].evictions = rd(src.levels[l].evictions);
      dst.levels[l].flushed_entries = rd(src.levels[l].flushed_entries);
    }
    dst.walks = rd(src.walks);
    for (size_t i = 0; i < dst.faults.size(); ++i) dst.faults[i] = rd(src.faults[i]);
    for (size_t i = 0; i < dst.fences.size(); ++i) dst.fences[i] = rd(src.fences[i]);
    for (size_t i = 0; i < dst.fence_categories.size(); ++i)
      dst.fence_categories[i] = rd(src.fence_categories[i]);
    dst.retired_instructions = rd(src.retired_instructions);
    dst.retired_memory_accesses = rd(src.retired_memory_accesses);
    snap.total += dst;
  }
  return snap;
}

DerivedMetrics derive_metrics(const StatsSnapshot& snapshot) {
  DerivedMetrics out;
  const uint64_t l1d_misses = snapshot.level(TlbLevel::L1D).misses;
  const uint64_t mem = snapshot.total.retired_memory_accesses;
  const uint64_t instr = snapshot.total.retired_instructions;
  const LevelCounts& l2 = snapshot.level(TlbLevel::L2);

  if (mem > 0) {
    out.l1_miss_rate = static_cast<double>(l1d_misses) / static_cast<double>(mem);
    out.effective_l1_hits =
        static_cast<int64_t>(mem) - static_cast<int64_t>(l1d_misses);
  }
  if (l2.lookups > 0)
    out.l2_local_miss_rate =
        static_cast<double>(l2.misses) / static_cast<double>(l2.lookups);
  if (instr > 0)
    out.mpki = 1000.0 * static_cast<double>(l1d_misses) / static_cast<double>(instr);
  return out;
}

}  // namespace rvtlb
