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

#include "rvtlb/workload.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "rvtlb/prng.hpp"

namespace rvtlb {

namespace {

// Fixed address layout of generated workloads. Regions are spread far
// apart so they never share page tables below the root.
constexpr uint64_t kSharedVpnBase = 0x40000;    // vaddr 0x4000'0000
constexpr uint64_t kScriptVpnBase = 0x60000;    // vaddr 0x6000'0000
constexpr uint64_t kPrivateVpnBase = 0x100000;  // vaddr 0x1'0000'0000

constexpr uint64_t kSharedPpnBase = 1ull << 30;
constexpr uint64_t kPrivatePpnBase = 1ull << 31;
constexpr uint64_t kScriptPpnBase = 3ull << 30;
constexpr uint64_t kRemapPpnBase = 1ull << 33;

constexpr uint8_t kLeafRwad =
    Pte::kV | Pte::kR | Pte::kW | Pte::kA | Pte::kD;
constexpr uint8_t kLeafRoA = Pte::kV | Pte::kR | Pte::kA;

// log2/exp2 built from IEEE basic operations only, so generated streams
// do not depend on the platform's libm.
double det_log2(double x) {
  int e = 0;
  double m = std::frexp(x, &e);  // m in [0.5, 1)
  if (m < 0.70710678118654752440) {
    m *= 2.0;
    --e;
  }
  const double z = (m - 1.0) / (m + 1.0);
  const double z2 = z * z;
  double term = z;
  double sum = 0.0;
  for (int k = 0; k < 14; ++k) {
    sum += term / static_cast<double>(2 * k + 1);
    term *= z2;
  }
  return static_cast<double>(e) + 2.0 * sum * 1.4426950408889634074;
}

double det_exp2(double y) {
  const double n = std::floor(y);
  const double t = (y - n) * 0.69314718055994530942;
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 20; ++k) {
    term *= t / static_cast<double>(k);
    sum += term;
  }
  return std::ldexp(sum, static_cast<int>(n));
}

double det_pow(double base, double exponent) {
  return det_exp2(exponent * det_log2(base));
}

class ZipfSampler {
 public:
  ZipfSampler(uint64_t n, double s) {
    cum_.reserve(n);
    uint64_t total = 0;
    for (uint64_t i = 0; i < n; ++i) {
      const double w = det_pow(static_cast<double>(i + 1), -s);
      total += static_cast<uint64_t>(w * 4294967296.0) + 1;
      cum_.push_back(total);
    }
  }

  uint64_t sample(SplitMix64& rng) const {
    const uint64_t u = rng.below(cum_.back());
    return static_cast<uint64_t>(
        std::upper_bound(cum_.begin(), cum_.end(), u) - cum_.begin());
  }

 private:
  std::vector<uint64_t> cum_;
};

}  // namespace

AddressSpaceBuilder::AddressSpaceBuilder(SparseMemory& mem, PagingMode mode,
                                         uint64_t first_table_ppn)
    : mem_(mem), mode_(mode) {
  if (mode == PagingMode::Bare)
    throw std::invalid_argument("cannot build page tables for Bare mode");
  if (first_table_ppn == 0)
    first_table_ppn = mode == PagingMode::Sv32 ? 1ull << 20 : 1ull << 22;
  first_table_ppn_ = first_table_ppn;
  next_table_ppn_ = first_table_ppn;
}

uint64_t AddressSpaceBuilder::alloc_table() { return next_table_ppn_++; }

Satp AddressSpaceBuilder::new_root(uint32_t asid) {
  return Satp(mode_, asid, alloc_table());
}

uint64_t AddressSpaceBuilder::pte_slot(const Satp& satp, uint64_t vaddr,
                                       unsigned level) {
  auto parts = split_vaddr(vaddr, mode_);
  if (!parts) throw std::invalid_argument("non-canonical vaddr in builder");
  const unsigned nlev = levels(mode_);
  const unsigned entry = pte_bytes(mode_);

  uint64_t table_base = satp.root_ppn << kPageShift;
  for (unsigned i = nlev; i-- > 0;) {
    const uint64_t slot =
        table_base + static_cast<uint64_t>(parts->parts[nlev - 1 - i]) * entry;
    if (i == level) return slot;
    uint64_t raw = entry == 4 ? mem_.read_u32(slot) : mem_.read_u64(slot);
    Pte pte = decode_pte(raw);
    if (!pte.v()) {
      const uint64_t next = alloc_table();
      raw = encode_pte(Pte::kV, next);
      if (entry == 4)
        mem_.write_u32(slot, static_cast<uint32_t>(raw));
      else
        mem_.write_u64(slot, raw);
      table_base = next << kPageShift;
    } else if (pte.leaf()) {
      throw std::invalid_argument("mapping collides with an existing superpage");
    } else {
      table_base = pte.ppn() << kPageShift;
    }
  }
  throw std::logic_error("level exceeds paging mode depth");
}

void AddressSpaceBuilder::map(const Satp& satp, uint64_t vaddr, uint64_t ppn,
                              uint8_t flags, unsigned level) {
  const unsigned bits = vpn_bits(mode_);
  if (level >= levels(mode_))
    throw std::invalid_argument("leaf level exceeds paging mode depth");
  if (level > 0 && (ppn & ((1ull << (bits * level)) - 1)) != 0)
    throw std::invalid_argument("superpage ppn not aligned to its level");
  const uint64_t slot = pte_slot(satp, vaddr, level);
  const uint64_t raw = encode_pte(flags, ppn);
  if (pte_bytes(mode_) == 4)
    mem_.write_u32(slot, static_cast<uint32_t>(raw));
  else
    mem_.write_u64(slot, raw);
}

namespace {

struct ScriptPrep {
  ScriptEvent event;
  uint64_t vaddr = 0;
  uint64_t slot = 0;      // leaf PTE location
  uint64_t new_raw = 0;   // word the script writes
  Satp roll_satp{};       // AsidRoll replacement root
};

struct Generator {
  const WorkloadSpec& spec;
  SparseMemory& mem;
  AddressSpaceBuilder builder;
  uint64_t shared_pages = 0;
  uint64_t private_pages = 0;
  std::vector<Satp> process_satp;
  std::vector<unsigned> assignment;  // hart -> process
  GeneratedWorkload out;
  SplitMix64 rng;

  Generator(const WorkloadSpec& s, SparseMemory& m)
      : spec(s), mem(m), builder(m, PagingMode::Sv39), rng(s.seed) {}

  uint32_t asid_for_bind(uint16_t hart) const {
    switch (spec.asid_policy) {
      case AsidPolicy::AllZero: return 0;
      case AsidPolicy::PerProcess: return assignment[hart] + 1;
      case AsidPolicy::PerHart: return hart + 1;
    }
    return 0;
  }

  uint64_t private_base_vpn(unsigned process, uint16_t hart) const {
    const uint64_t slice =
        spec.processes == 1 ? static_cast<uint64_t>(hart) : 0;
    return kPrivateVpnBase +
           (static_cast<uint64_t>(process) * spec.harts + slice) * private_pages;
  }

  void map_space(const Satp& satp, unsigned process) {
    for (uint64_t i = 0; i < shared_pages; ++i)
      builder.map(satp, (kSharedVpnBase + i) << kPageShift, kSharedPpnBase + i,
                  kLeafRwad);
    const unsigned slices = spec.processes == 1 ? spec.harts : 1;
    for (unsigned s = 0; s < slices; ++s) {
      const uint64_t base =
          private_base_vpn(process, static_cast<uint16_t>(s));
      const uint64_t ppn_base =
          kPrivatePpnBase +
          (static_cast<uint64_t>(process) * spec.harts + s) * (1ull << 21);
      for (uint64_t i = 0; i < private_pages; ++i)
        builder.map(satp, (base + i) << kPageShift, ppn_base + i, kLeafRwad);
    }
  }

  // An AsidRoll clone: a fresh root page aliasing the same lower-level
  // tables, so leaf slots computed against the original root stay valid.
  Satp clone_root(const Satp& original) {
    Satp clone = builder.new_root(original.asid);
    for (uint64_t off = 0; off < kPageSize; off += 8)
      mem.write_u64((clone.root_ppn << kPageShift) + off,
                    mem.read_u64((original.root_ppn << kPageShift) + off));
    return clone;
  }

  std::vector<ScriptPrep> prep_script() {
    std::vector<ScriptPrep> preps;
    preps.reserve(spec.script.size());
    for (size_t j = 0; j < spec.script.size(); ++j) {
      const ScriptEvent& ev = spec.script[j];
      if (ev.hart >= spec.harts)
        throw std::invalid_argument("script event names an unknown hart");
      ScriptPrep prep;
      prep.event = ev;
      prep.vaddr = (kScriptVpnBase + j) << kPageShift;
      const unsigned process = assignment[ev.hart];
      const Satp& satp = process_satp[process];
      const uint64_t ppn = kScriptPpnBase + j;
      switch (ev.action) {
        case ScriptAction::MapNewPage:
        case ScriptAction::DemandPage:
          prep.slot = builder.pte_slot(satp, prep.vaddr);
          prep.new_raw = encode_pte(kLeafRwad, ppn);
          break;
        case ScriptAction::CowUpgrade:
          builder.map(satp, prep.vaddr, ppn, kLeafRoA);
          prep.slot = builder.pte_slot(satp, prep.vaddr);
          prep.new_raw = encode_pte(kLeafRwad, ppn);
          break;
        case ScriptAction::ProtectDowngrade:
          builder.map(satp, prep.vaddr, ppn, kLeafRwad);
          prep.slot = builder.pte_slot(satp, prep.vaddr);
          prep.new_raw = encode_pte(kLeafRoA, ppn);
          break;
        case ScriptAction::RemapPage:
          builder.map(satp, prep.vaddr, ppn, kLeafRwad);
          prep.slot = builder.pte_slot(satp, prep.vaddr);
          prep.new_raw = encode_pte(kLeafRwad, kRemapPpnBase + j);
          break;
        case ScriptAction::AsidRoll:
          prep.roll_satp = clone_root(satp);
          break;
      }
      preps.push_back(prep);
    }
    return preps;
  }

  void push_access(uint16_t hart, AccessType access, uint64_t vaddr) {
    WorkloadEvent ev;
    ev.kind = WorkloadEvent::Kind::Access;
    ev.hart = hart;
    ev.access = access;
    ev.vaddr = vaddr;
    out.events.push_back(ev);
  }

  void push_pte_write(uint16_t hart, uint64_t slot, uint64_t raw) {
    WorkloadEvent ev;
    ev.kind = WorkloadEvent::Kind::PteWrite;
    ev.hart = hart;
    ev.pte_paddr = slot;
    ev.pte_raw = raw;
    out.events.push_back(ev);
  }

  void push_fence(uint16_t hart, std::optional<uint64_t> vaddr,
                  std::optional<uint32_t> asid,
                  std::optional<FlushCategory> expected,
                  std::optional<ViolationKind> if_dropped) {
    WorkloadEvent ev;
    ev.kind = WorkloadEvent::Kind::Fence;
    ev.hart = hart;
    ev.fence = FenceOp{hart, vaddr, asid};
    ev.expected_category = expected;
    ev.violation_if_dropped = if_dropped;
    if (expected)
      ++out.expected_categories[static_cast<size_t>(*expected)];
    if (if_dropped) out.required_fences.push_back(out.events.size());
    out.events.push_back(ev);
  }

  void push_satp_write(uint16_t hart, const Satp& satp) {
    WorkloadEvent ev;
    ev.kind = WorkloadEvent::Kind::SatpWrite;
    ev.hart = hart;
    ev.satp = satp;
    out.events.push_back(ev);
  }

  void emit_script(const ScriptPrep& prep, Satp& live_satp) {
    const uint16_t hart = prep.event.hart;
    const uint32_t asid = asid_for_bind(hart);
    switch (prep.event.action) {
      case ScriptAction::MapNewPage:
        push_pte_write(hart, prep.slot, prep.new_raw);
        push_fence(hart, prep.vaddr, asid, FlushCategory::NeverAccessed,
                   std::nullopt);
        break;
      case ScriptAction::DemandPage:
        push_access(hart, AccessType::Load, prep.vaddr);
        push_pte_write(hart, prep.slot, prep.new_raw);
        push_fence(hart, prep.vaddr, asid, FlushCategory::PreviouslyInvalid,
                   std::nullopt);
        push_access(hart, AccessType::Load, prep.vaddr);
        break;
      case ScriptAction::CowUpgrade:
        push_access(hart, AccessType::Load, prep.vaddr);
        push_pte_write(hart, prep.slot, prep.new_raw);
        push_fence(hart, prep.vaddr, asid, FlushCategory::PreviouslyNonWritable,
                   std::nullopt);
        push_access(hart, AccessType::Store, prep.vaddr);
        break;
      case ScriptAction::ProtectDowngrade:
        push_access(hart, AccessType::Store, prep.vaddr);
        push_pte_write(hart, prep.slot, prep.new_raw);
        push_fence(hart, prep.vaddr, asid, FlushCategory::Necessary,
                   ViolationKind::StalePteUpdate);
        push_access(hart, AccessType::Load, prep.vaddr);
        break;
      case ScriptAction::RemapPage:
        push_access(hart, AccessType::Load, prep.vaddr);
        push_pte_write(hart, prep.slot, prep.new_raw);
        push_fence(hart, prep.vaddr, asid, FlushCategory::Necessary,
                   ViolationKind::StalePteUpdate);
        push_access(hart, AccessType::Load, prep.vaddr);
        break;
      case ScriptAction::AsidRoll: {
        // Retire the ASID before rebinding it to the replacement table.
        const bool detectable = asid != 0;
        push_fence(hart, std::nullopt, asid, std::nullopt,
                   detectable
                       ? std::optional<ViolationKind>(
                             ViolationKind::AsidReuseWithoutFlush)
                       : std::nullopt);
        push_satp_write(hart, Satp(PagingMode::Sv39, asid, prep.roll_satp.root_ppn));
        live_satp = prep.roll_satp;
        break;
      }
    }
  }

  GeneratedWorkload run() {
    shared_pages = static_cast<uint64_t>(
        std::llround(spec.shared_fraction * static_cast<double>(spec.pages_per_hart)));
    shared_pages = std::min(shared_pages, spec.pages_per_hart);
    private_pages = spec.pages_per_hart - shared_pages;
    if (private_pages >= (1ull << 21))
      throw std::invalid_argument("private working set too large");

    assignment.resize(spec.harts);
    for (unsigned h = 0; h < spec.harts; ++h) assignment[h] = h % spec.processes;

    for (unsigned p = 0; p < spec.processes; ++p) {
      const uint32_t asid =
          spec.asid_policy == AsidPolicy::PerProcess ? p + 1
          : spec.asid_policy == AsidPolicy::AllZero  ? 0
                                                     : p + 1;
      Satp satp = builder.new_root(asid);
      map_space(satp, p);
      process_satp.push_back(satp);
    }

    if (!spec.script.empty() && spec.migrate_prob > 0.0)
      throw std::invalid_argument("scripted events and migration cannot be combined");
    if (!spec.script.empty() && spec.processes != 1 &&
        spec.processes != spec.harts)
      throw std::invalid_argument("scripts require one process or one per hart");

    std::vector<ScriptPrep> preps = prep_script();
    std::stable_sort(preps.begin(), preps.end(),
                     [](const ScriptPrep& a, const ScriptPrep& b) {
                       return a.event.at_index < b.event.at_index;
                     });

    // An empty stream needs no context records at all.
    if (spec.length > 0 || !spec.script.empty()) {
      for (unsigned h = 0; h < spec.harts; ++h) {
        const Satp& base = process_satp[assignment[h]];
        push_satp_write(static_cast<uint16_t>(h),
                        Satp(PagingMode::Sv39, asid_for_bind(h), base.root_ppn));
      }
    }

    // Per-hart loop cursors for the two regions.
    std::vector<std::array<uint64_t, 2>> cursors(spec.harts, {0, 0});
    std::unique_ptr<ZipfSampler> zipf_shared, zipf_private;
    if (spec.pattern.kind == AccessPattern::Kind::Zipf) {
      if (shared_pages)
        zipf_shared = std::make_unique<ZipfSampler>(shared_pages, spec.pattern.zipf_s);
      if (private_pages)
        zipf_private = std::make_unique<ZipfSampler>(private_pages, spec.pattern.zipf_s);
    }

    auto pick = [&](uint16_t hart, bool shared) -> uint64_t {
      const uint64_t n = shared ? shared_pages : private_pages;
      switch (spec.pattern.kind) {
        case AccessPattern::Kind::UniformRandom:
          return rng.below(n);
        case AccessPattern::Kind::Loop: {
          uint64_t& pos = cursors[hart][shared ? 0 : 1];
          const uint64_t page = pos % n;
          pos += spec.pattern.stride;
          return page;
        }
        case AccessPattern::Kind::Zipf:
          return (shared ? zipf_shared : zipf_private)->sample(rng);
      }
      return 0;
    };

    size_t next_script = 0;
    const uint64_t burst = std::max<uint64_t>(1, spec.burst);
    for (uint64_t i = 0; i < spec.length; ++i) {
      const auto hart = static_cast<uint16_t>((i / burst) % spec.harts);

      if (spec.migrate_prob > 0.0 && i % burst == 0) {
        const double roll =
            static_cast<double>(rng.next() >> 11) * 0x1.0p-53;
        if (roll < spec.migrate_prob && spec.harts > 1) {
          const uint16_t other = static_cast<uint16_t>((hart + 1) % spec.harts);
          std::swap(assignment[hart], assignment[other]);
          for (uint16_t h : {hart, other}) {
            if (spec.asid_policy != AsidPolicy::PerProcess)
              push_fence(h, std::nullopt, asid_for_bind(h), std::nullopt,
                         std::nullopt);
            push_satp_write(h, Satp(PagingMode::Sv39, asid_for_bind(h),
                                    process_satp[assignment[h]].root_ppn));
          }
        }
      }

      while (next_script < preps.size() &&
             preps[next_script].event.at_index <= i) {
        ScriptPrep& prep = preps[next_script];
        emit_script(prep, process_satp[assignment[prep.event.hart]]);
        ++next_script;
      }

      const bool to_shared =
          shared_pages > 0 &&
          (private_pages == 0 ||
           static_cast<double>(rng.next() >> 11) * 0x1.0p-53 < spec.shared_fraction);
      uint64_t vpn;
      if (to_shared) {
        vpn = kSharedVpnBase + pick(hart, true);
      } else {
        vpn = private_base_vpn(assignment[hart], hart) + pick(hart, false);
      }
      const bool store =
          static_cast<double>(rng.next() >> 11) * 0x1.0p-53 < spec.store_fraction;
      push_access(hart, store ? AccessType::Store : AccessType::Load,
                  vpn << kPageShift);
    }

    while (next_script < preps.size()) {
      ScriptPrep& prep = preps[next_script];
      emit_script(prep, process_satp[assignment[prep.event.hart]]);
      ++next_script;
    }
    return std::move(out);
  }
};

}  // namespace

GeneratedWorkload generate(const WorkloadSpec& spec, SparseMemory& mem) {
  if (spec.harts == 0) throw std::invalid_argument("workload needs harts");
  if (spec.processes == 0) throw std::invalid_argument("workload needs processes");
  if (spec.pages_per_hart == 0)
    throw std::invalid_argument("workload needs a non-empty working set");
  if (spec.shared_fraction < 0.0 || spec.shared_fraction > 1.0)
    throw std::invalid_argument("shared_fraction must be within [0, 1]");
  Generator gen(spec, mem);
  return gen.run();
}

namespace {

void dispatch(TlbSystem& system, const WorkloadEvent& ev) {
  switch (ev.kind) {
    case WorkloadEvent::Kind::Access:
      system.translate(ev.hart, ev.vaddr, ev.access);
      system.retire(ev.hart, 1, ev.access == AccessType::Fetch ? 0 : 1);
      break;
    case WorkloadEvent::Kind::Fence:
      system.sfence(ev.fence);
      break;
    case WorkloadEvent::Kind::SatpWrite:
      system.write_satp(ev.hart, ev.satp);
      break;
    case WorkloadEvent::Kind::PteWrite:
      system.memory().write_pte(ev.pte_paddr, ev.pte_raw);
      break;
  }
}

}  // namespace

void execute(TlbSystem& system, const GeneratedWorkload& workload,
             size_t skip_event) {
  for (size_t i = 0; i < workload.events.size(); ++i) {
    if (i == skip_event) continue;
    dispatch(system, workload.events[i]);
  }
}

void execute_threaded(TlbSystem& system, const GeneratedWorkload& workload) {
  const unsigned harts = system.config().harts;
  std::vector<std::vector<const WorkloadEvent*>> lanes(harts);
  for (const WorkloadEvent& ev : workload.events)
    lanes[ev.hart % harts].push_back(&ev);

  std::vector<std::thread> threads;
  threads.reserve(harts);
  for (unsigned h = 0; h < harts; ++h) {
    threads.emplace_back([&system, &lanes, h] {
      for (const WorkloadEvent* ev : lanes[h]) dispatch(system, *ev);
    });
  }
  for (auto& t : threads) t.join();
}

}  // namespace rvtlb
