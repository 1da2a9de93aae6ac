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
//
// Throughput smoke benchmarks for the translate pipeline. These measure
// this simulator on this host; they intentionally reproduce no published
// figure.

#include <benchmark/benchmark.h>

#include "rvtlb/hierarchy.hpp"
#include "rvtlb/prng.hpp"
#include "rvtlb/workload.hpp"

namespace {

using namespace rvtlb;

constexpr uint8_t kRwad = Pte::kV | Pte::kR | Pte::kW | Pte::kA | Pte::kD;

SystemConfig bench_config(unsigned harts, Topology::Kind kind) {
  SystemConfig cfg;
  cfg.harts = harts;
  cfg.topology.kind = kind;
  cfg.topology.l2 = {kind == Topology::Kind::PrivateL2 ? 128u : 128u * harts, 8};
  return cfg;
}

std::unique_ptr<TlbSystem> make_system(unsigned harts, Topology::Kind kind,
                                       uint64_t pages_per_hart) {
  auto system = std::make_unique<TlbSystem>(bench_config(harts, kind));
  AddressSpaceBuilder builder(system->memory(), PagingMode::Sv39);
  for (unsigned h = 0; h < harts; ++h) {
    Satp satp = builder.new_root(h + 1);
    for (uint64_t i = 0; i < pages_per_hart; ++i)
      builder.map(satp, (0x40000ull + h * pages_per_hart + i) << kPageShift,
                  0x10000 + h * pages_per_hart + i, kRwad);
    system->write_satp(static_cast<uint16_t>(h), satp);
  }
  return system;
}

void BM_TranslateL1Hit(benchmark::State& state) {
  auto system = make_system(1, Topology::Kind::PrivateL2, 16);
  uint64_t page = 0;
  for (auto _ : state) {
    const uint64_t vaddr = (0x40000ull + (page++ & 15)) << kPageShift;
    benchmark::DoNotOptimize(system->translate(0, vaddr, AccessType::Load));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_TranslateL1Hit);

void BM_TranslateL2Hit(benchmark::State& state) {
  auto system = make_system(1, Topology::Kind::PrivateL2, 64);
  // Warm the L2 with the full footprint; a 64-page loop then always
  // misses the 32-entry L1 FIFO but hits L2.
  for (uint64_t i = 0; i < 64; ++i)
    system->translate(0, (0x40000ull + i) << kPageShift, AccessType::Load);
  uint64_t page = 0;
  for (auto _ : state) {
    const uint64_t vaddr = (0x40000ull + (page++ & 63)) << kPageShift;
    benchmark::DoNotOptimize(system->translate(0, vaddr, AccessType::Load));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_TranslateL2Hit);

void BM_PageWalk(benchmark::State& state) {
  SparseMemory mem;
  AddressSpaceBuilder builder(mem, PagingMode::Sv39);
  Satp satp = builder.new_root(1);
  for (uint64_t i = 0; i < 256; ++i)
    builder.map(satp, (0x40000ull + i) << kPageShift, 0x10000 + i, kRwad);
  WalkConfig cfg;
  SplitMix64 rng(1);
  for (auto _ : state) {
    const uint64_t vaddr = (0x40000ull + rng.below(256)) << kPageShift;
    benchmark::DoNotOptimize(walk(mem, satp, vaddr, AccessType::Load, cfg));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_PageWalk);

void BM_SharedL2MultiHart(benchmark::State& state) {
  static std::unique_ptr<TlbSystem> system;
  if (state.thread_index() == 0)
    system = make_system(static_cast<unsigned>(state.threads()),
                         Topology::Kind::SharedL2GlobalAsid, 16);
  const auto hart = static_cast<uint16_t>(state.thread_index());
  uint64_t page = 0;
  for (auto _ : state) {
    const uint64_t vaddr =
        (0x40000ull + hart * 16 + (page++ & 15)) << kPageShift;
    benchmark::DoNotOptimize(system->translate(hart, vaddr, AccessType::Load));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_SharedL2MultiHart)->Threads(2)->Threads(4)->Threads(8)
    ->UseRealTime();

void BM_WorkloadReplaySerialized(benchmark::State& state) {
  WorkloadSpec spec;
  spec.harts = 4;
  spec.processes = 4;
  spec.pages_per_hart = 128;
  spec.shared_fraction = 0.5;
  spec.length = 100000;
  spec.seed = 3;
  for (auto _ : state) {
    state.PauseTiming();
    TlbSystem system(bench_config(4, Topology::Kind::SharedL2));
    GeneratedWorkload wl = generate(spec, system.memory());
    state.ResumeTiming();
    execute(system, wl);
  }
  state.SetItemsProcessed(state.iterations() * spec.length);
}
BENCHMARK(BM_WorkloadReplaySerialized)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
