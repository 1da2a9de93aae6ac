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
// End-to-end acceptance suite. Each check prints one PASS/FAIL line; the
// binary exits non-zero if any check fails.

#include <chrono>
#include <cinttypes>
#include <iterator>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <sstream>
#include <thread>
#include <unordered_map>
#include <vector>

#include "oracles.hpp"
#include "rvtlb/hierarchy.hpp"
#include "rvtlb/prng.hpp"
#include "rvtlb/trace.hpp"
#include "rvtlb/validate.hpp"
#include "rvtlb/workload.hpp"

using namespace rvtlb;

namespace {

constexpr uint8_t kRwad = Pte::kV | Pte::kR | Pte::kW | Pte::kA | Pte::kD;

struct Outcome {
  bool pass = true;
  std::string detail;

  void fail(const std::string& why) {
    pass = false;
    if (!detail.empty()) detail += "; ";
    detail += why;
  }
};

#define EXPECT(cond, why)           \
  do {                              \
    if (!(cond)) out.fail(why);     \
  } while (0)

// --- 1. sharing truth table -----------------------------------------------

Outcome check_sharing_table() {
  Outcome out;
  const uint64_t masis[] = {0, 1, 42};
  const uint64_t vmids[] = {0, 9};
  const uint32_t asids[] = {0, 1, 3, 7};
  size_t cases = 0;

  for (uint64_t em : masis)
    for (uint64_t rm : masis)
      for (uint64_t ev : vmids)
        for (uint64_t rv : vmids)
          for (uint32_t ea : asids)
            for (uint32_t ra : asids)
              for (bool g : {false, true}) {
                const SharingDecision got =
                    sharing_decision({em, ev, ea, g}, {rm, rv, ra});
                SharingDecision want;
                if (em != rm) {
                  want = SharingDecision::NoShare;  // MASI mismatch
                } else if (ev != rv) {
                  want = SharingDecision::NoShare;  // VMID mismatch
                } else if (g) {
                  want = SharingDecision::Share;  // global bit set
                } else if (ea != 0 && ra != 0 && ea == ra) {
                  want = SharingDecision::Share;  // both non-zero, identical
                } else if (ea != 0 && ra != 0) {
                  want = SharingDecision::NoShare;  // both non-zero, different
                } else if (ea == 0 && ra == 0) {
                  want = SharingDecision::NoShare;  // software without ASIDs
                } else {
                  want = SharingDecision::ImplementationDefined;  // one zero
                }
                ++cases;
                if (got != want) {
                  std::ostringstream os;
                  os << "masi " << em << "/" << rm << " vmid " << ev << "/" << rv
                     << " asid " << ea << "/" << ra << " g=" << g << ": got "
                     << to_string(got) << " want " << to_string(want);
                  out.fail(os.str());
                  return out;
                }
              }
  out.detail = std::to_string(cases) + " tag tuples";
  return out;
}

// --- 2. inclusion fuzz ------------------------------------------------------

struct ShadowL0 {
  struct Entry {
    LookupKey key;
    bool fetch_side;
  };
  std::unordered_map<uint64_t, Entry> entries;

  static uint64_t pack(uint16_t hart, bool fetch, uint64_t vpn, uint32_t asid) {
    return (vpn << 24) | (uint64_t(asid) << 4) | (uint64_t(fetch) << 3) | hart;
  }

  void fill(uint16_t hart, const LookupKey& key, bool fetch) {
    entries[pack(hart, fetch, key.vpn, key.asid)] = Entry{key, fetch};
  }

  void invalidate(uint16_t hart, uint64_t vpn, unsigned level) {
    const uint64_t mask = (1ull << (9 * level)) - 1;
    for (auto it = entries.begin(); it != entries.end();) {
      const uint16_t entry_hart = static_cast<uint16_t>(it->first & 0x7);
      if (entry_hart == hart && (it->second.key.vpn & ~mask) == vpn)
        it = entries.erase(it);
      else
        ++it;
    }
  }

  size_t violations(TlbSystem& system) const {
    size_t bad = 0;
    for (const auto& [packed, entry] : entries) {
      const auto hart = static_cast<uint16_t>(packed & 0x7);
      TlbModel& l1 = entry.fetch_side ? system.l1i(hart) : system.l1d(hart);
      if (!l1.peek(entry.key)) ++bad;
    }
    return bad;
  }
};

Outcome check_inclusion_fuzz() {
  Outcome out;
  constexpr unsigned kHarts = 4;
  constexpr uint64_t kEvents = 1000000;

  SystemConfig cfg;
  cfg.harts = kHarts;
  cfg.topology.kind = Topology::Kind::SharedL2;
  cfg.topology.l2 = {1024, 8};
  TlbSystem system(cfg);
  AddressSpaceBuilder builder(system.memory(), PagingMode::Sv39);

  // Two address spaces per hart; pages at 4 KiB plus a few 2 MiB leaves,
  // some global, some read-only, some left unmapped.
  std::vector<std::vector<Satp>> spaces(kHarts);
  SplitMix64 build_rng(0xacce97ed);
  for (unsigned h = 0; h < kHarts; ++h) {
    for (unsigned s = 0; s < 2; ++s) {
      Satp satp = builder.new_root(h * 2 + s + 1);
      for (uint64_t i = 0; i < 64; ++i) {
        uint8_t flags = kRwad;
        if (build_rng.below(8) == 0) flags |= Pte::kG;
        if (build_rng.below(8) == 0) flags &= ~(Pte::kW | Pte::kD);
        builder.map(satp, (0x40000ull + i) << kPageShift, 0x1000 + i, flags);
      }
      builder.map(satp, 0x80000000ull + h * 0x400000, (h + 1) * 0x400ull, kRwad, 1);
      spaces[h].push_back(satp);
    }
    system.write_satp(h, spaces[h][0]);
  }

  ShadowL0 shadow;
  system.register_l0_invalidate(
      [&shadow](uint16_t hart, uint64_t vpn, unsigned level) {
        shadow.invalidate(hart, vpn, level);
      });

  SplitMix64 rng(123456789);
  size_t total_violations = 0;
  for (uint64_t i = 0; i < kEvents; ++i) {
    const auto hart = static_cast<uint16_t>(rng.below(kHarts));
    const uint64_t roll = rng.below(100);
    if (roll < 80) {
      // Access: usually a mapped page, sometimes inside the superpage,
      // sometimes unmapped.
      uint64_t vaddr;
      const uint64_t which = rng.below(10);
      if (which < 7)
        vaddr = (0x40000ull + rng.below(64)) << kPageShift;
      else if (which < 9)
        vaddr = 0x80000000ull + hart * 0x400000 + rng.below(1 << 21);
      else
        vaddr = (0x70000ull + rng.below(64)) << kPageShift;
      const AccessType access = static_cast<AccessType>(rng.below(3));
      const Satp satp = system.satp(hart);
      const Translation res = system.translate(hart, vaddr, access);
      if (res.ok && satp.mode != PagingMode::Bare) {
        LookupKey key;
        key.vpn = (vaddr >> kPageShift) & ((1ull << 27) - 1);
        key.asid = satp.asid;
        key.hart_tag = hart;
        key.access = access;
        shadow.fill(hart, key, access == AccessType::Fetch);
      }
    } else if (roll < 90) {
      FenceOp op;
      op.hart_id = hart;
      if (rng.below(2)) op.vaddr = (0x40000ull + rng.below(64)) << kPageShift;
      if (rng.below(2)) op.asid = static_cast<uint32_t>(rng.below(9));
      system.sfence(op);
    } else {
      system.write_satp(hart, spaces[hart][rng.below(2)]);
    }

    if ((i & 0xfff) == 0) total_violations += shadow.violations(system);
  }
  total_violations += shadow.violations(system);

  EXPECT(total_violations == 0,
         std::to_string(total_violations) + " L0 entries missing from L1");
  out.detail = std::to_string(kEvents) + " events, final shadow size " +
               std::to_string(shadow.entries.size());
  return out;
}

// --- 3. set-associative vs reference fully-associative ---------------------

Outcome check_fully_assoc_oracle() {
  Outcome out;
  SetAssocTlb tlb({16, 16});
  oracle::RefFifoTlb ref(16);
  SplitMix64 rng(31337);
  size_t mismatches = 0;

  for (int i = 0; i < 100000; ++i) {
    const uint64_t vpn = rng.below(64);
    const auto asid = static_cast<uint32_t>(1 + rng.below(3));
    const bool global = rng.below(16) == 0;

    TlbEntry fill;
    fill.vpn = vpn;
    fill.pte = decode_pte(encode_pte(kRwad, 0x1000 + vpn));
    fill.asid = asid;
    fill.global = global;

    LookupKey key;
    key.vpn = vpn;
    key.asid = asid;

    const auto got = tlb.lookup(key);
    std::optional<TlbEntry> victim;
    if (!got) victim = tlb.insert(fill);

    const auto want = ref.access(fill, key);
    if (got.has_value() != want.hit ||
        victim.has_value() != want.evicted_vpn.has_value() ||
        (victim && want.evicted_vpn && victim->vpn != *want.evicted_vpn))
      ++mismatches;
  }
  EXPECT(mismatches == 0, std::to_string(mismatches) + " sequence mismatches");
  out.detail = "100000 accesses";
  return out;
}

// --- 4. page-walk oracle ---------------------------------------------------

Outcome check_pagewalk_oracle() {
  Outcome out;
  size_t mismatches = 0;
  size_t checked = 0;
  SparseMemory mem;
  uint64_t seed = 0xbeef;

  for (int t = 0; t < 100; ++t) {
    const uint64_t root = 0x10000 + uint64_t(t) * 0x4000;
    oracle::RandomSv39Table table(mem, oracle::splitmix(seed), root, root + 0x200);
    std::vector<uint64_t> vaddrs;
    uint64_t vstate = seed ^ (t * 0x1234567);
    for (int i = 0; i < 100; ++i) {
      const uint64_t vaddr = oracle::splitmix(vstate) & ((1ull << 38) - 1);
      vaddrs.push_back(vaddr);
      table.populate(vaddr);
    }
    const Satp satp(PagingMode::Sv39, 1, root);
    WalkConfig cfg;
    cfg.update_ad = (t % 3 != 0);
    for (uint64_t vaddr : vaddrs) {
      const char accesses[] = {'f', 'l', 's'};
      const char a = accesses[oracle::splitmix(vstate) % 3];
      const auto access = a == 'f'   ? AccessType::Fetch
                          : a == 'l' ? AccessType::Load
                                     : AccessType::Store;
      const WalkResult got = walk(mem, satp, vaddr, access, cfg);
      const auto want = oracle::resolve_sv39(mem, root, vaddr, a, cfg.update_ad);
      ++checked;
      if (oracle::kind_of(got) != want.kind ||
          (got.ok && (got.paddr != want.paddr || got.level != want.level)))
        ++mismatches;
    }
  }
  EXPECT(mismatches == 0, std::to_string(mismatches) + " walk mismatches");
  out.detail = std::to_string(checked) + " walks over 100 tables";
  return out;
}

// --- 5 & 6: topology experiments --------------------------------------------

WorkloadSpec sharing_heavy_spec() {
  WorkloadSpec spec;
  spec.harts = 8;
  spec.processes = 1;           // one address space, every hart inside it
  spec.pages_per_hart = 256;
  spec.shared_fraction = 0.8;   // 205 common pages + 51 per-hart pages
  spec.asid_policy = AsidPolicy::PerProcess;  // identical non-zero asid
  spec.pattern.kind = AccessPattern::Kind::UniformRandom;
  spec.length = 300000;
  spec.burst = 2048;
  spec.store_fraction = 0.0;
  spec.seed = 20260808;
  return spec;
}

SystemConfig topo_config(Topology::Kind kind, uint64_t per_core, unsigned harts) {
  SystemConfig cfg;
  cfg.harts = harts;
  cfg.topology.kind = kind;
  const uint64_t total = kind == Topology::Kind::PrivateL2 ? per_core : per_core * harts;
  cfg.topology.l2 = {total, 8};
  return cfg;
}

double l2_miss_rate(const StatsSnapshot& snap) {
  const LevelCounts& l2 = snap.level(TlbLevel::L2);
  return l2.lookups == 0 ? 0.0
                         : double(l2.misses) / double(l2.lookups);
}

Outcome check_topology_ordering() {
  Outcome out;
  const WorkloadSpec spec = sharing_heavy_spec();

  auto run = [&](Topology::Kind kind) {
    TlbSystem system(topo_config(kind, 128, spec.harts));
    GeneratedWorkload wl = generate(spec, system.memory());
    execute(system, wl);
    return l2_miss_rate(system.snapshot());
  };

  const double private_rate = run(Topology::Kind::PrivateL2);
  const double tagged_rate = run(Topology::Kind::SharedL2);
  const double global_rate = run(Topology::Kind::SharedL2GlobalAsid);

  std::ostringstream os;
  os << "l2 miss rates: private=" << private_rate << " hart-tagged=" << tagged_rate
     << " global=" << global_rate;
  out.detail = os.str();

  EXPECT(global_rate < tagged_rate, "global-asid not below hart-tagged");
  EXPECT(tagged_rate <= private_rate, "hart-tagged above private");
  EXPECT(global_rate <= 0.8 * private_rate,
         "global-asid rate not at least 20% below private");
  return out;
}

Outcome check_size_sweep() {
  Outcome out;
  WorkloadSpec spec = sharing_heavy_spec();
  spec.length = 250000;

  // One fixed trace, collected once, replayed into every configuration.
  const std::string path =
      (std::filesystem::temp_directory_path() / "rvtlb_accept_sweep.rvt").string();
  {
    SystemConfig cfg;
    cfg.harts = spec.harts;
    cfg.topology.kind = Topology::Kind::L1Only;
    TlbSystem system(cfg);
    GeneratedWorkload wl = generate(spec, system.memory());
    TraceWriter writer(path);
    TraceCollector collector(system, writer);
    system.add_observer(&collector);
    execute(system, wl);
    writer.close();
  }

  const uint64_t sizes[] = {64, 128, 256, 512};
  const Topology::Kind kinds[] = {Topology::Kind::PrivateL2,
                                  Topology::Kind::SharedL2,
                                  Topology::Kind::SharedL2GlobalAsid};
  std::unordered_map<int, std::vector<double>> rates;

  for (int k = 0; k < 3; ++k) {
    for (uint64_t size : sizes) {
      TlbSystem system(topo_config(kinds[k], size, spec.harts));
      replay_file(path, system);
      rates[k].push_back(l2_miss_rate(system.snapshot()));
    }
    for (size_t i = 1; i < rates[k].size(); ++i) {
      if (rates[k][i] > rates[k][i - 1]) {
        std::ostringstream os;
        os << to_string(kinds[k]) << " miss rate increased from " << sizes[i - 1]
           << " (" << rates[k][i - 1] << ") to " << sizes[i] << " (" << rates[k][i]
           << ")";
        out.fail(os.str());
      }
    }
  }

  // Global at S beats hart-tagged at 2S.
  for (size_t i = 0; i + 1 < 4; ++i) {
    const double global_small = rates[2][i];
    const double tagged_double = rates[1][i + 1];
    if (!(global_small < tagged_double)) {
      std::ostringstream os;
      os << "global@" << sizes[i] << " (" << global_small
         << ") not below hart-tagged@" << sizes[i + 1] << " (" << tagged_double
         << ")";
      out.fail(os.str());
    }
  }

  std::ostringstream os;
  os << "rates per size {64,128,256,512}:";
  for (int k = 0; k < 3; ++k) {
    os << ' ' << to_string(kinds[k]) << "=[";
    for (size_t i = 0; i < 4; ++i) os << (i ? "," : "") << rates[k][i];
    os << ']';
  }
  if (out.detail.empty())
    out.detail = os.str();
  else
    out.detail += "; " + os.str();
  std::filesystem::remove(path);
  return out;
}

// --- 7. fence categorizer ----------------------------------------------------

Outcome check_fence_categories() {
  Outcome out;
  WorkloadSpec spec;
  spec.harts = 2;
  spec.processes = 2;
  spec.pages_per_hart = 32;
  spec.length = 4200;
  spec.seed = 7;
  for (int i = 0; i < 10; ++i) {
    const auto hart = static_cast<uint16_t>(i % 2);
    spec.script.push_back({uint64_t(100 * (4 * i + 1)), hart, ScriptAction::MapNewPage});
    spec.script.push_back({uint64_t(100 * (4 * i + 2)), hart, ScriptAction::DemandPage});
    spec.script.push_back({uint64_t(100 * (4 * i + 3)), hart, ScriptAction::CowUpgrade});
    spec.script.push_back(
        {uint64_t(100 * (4 * i + 4)), hart, ScriptAction::ProtectDowngrade});
  }

  SystemConfig cfg;
  cfg.harts = 2;
  cfg.topology.kind = Topology::Kind::PrivateL2;
  TlbSystem system(cfg);
  GeneratedWorkload wl = generate(spec, system.memory());
  execute(system, wl);

  const StatsSnapshot snap = system.snapshot();
  const auto count = [&](FlushCategory c) {
    return snap.total.fence_categories[static_cast<size_t>(c)];
  };
  std::ostringstream os;
  os << "never_accessed=" << count(FlushCategory::NeverAccessed)
     << " previously_invalid=" << count(FlushCategory::PreviouslyInvalid)
     << " previously_nonwritable=" << count(FlushCategory::PreviouslyNonWritable)
     << " necessary=" << count(FlushCategory::Necessary);
  out.detail = os.str();

  EXPECT(count(FlushCategory::NeverAccessed) == 10, "map-new-page count wrong");
  EXPECT(count(FlushCategory::PreviouslyInvalid) == 10, "invalid->valid count wrong");
  EXPECT(count(FlushCategory::PreviouslyNonWritable) == 10, "cow-upgrade count wrong");
  EXPECT(count(FlushCategory::Necessary) == 10, "downgrade count wrong");
  return out;
}

// --- 8. validators -----------------------------------------------------------

Outcome check_validators() {
  Outcome out;
  WorkloadSpec spec;
  spec.harts = 4;
  spec.processes = 4;
  spec.pages_per_hart = 24;
  spec.length = 4000;
  spec.seed = 40;
  for (int i = 0; i < 4; ++i)
    spec.script.push_back(
        {uint64_t(200 + 400 * i), static_cast<uint16_t>(i % 4),
         ScriptAction::ProtectDowngrade});
  for (int i = 0; i < 3; ++i)
    spec.script.push_back({uint64_t(1800 + 300 * i),
                           static_cast<uint16_t>((i + 1) % 4),
                           ScriptAction::RemapPage});
  for (int i = 0; i < 3; ++i)
    spec.script.push_back({uint64_t(2800 + 300 * i),
                           static_cast<uint16_t>(i % 4), ScriptAction::AsidRoll});
  // Benign churn that must not be flagged.
  spec.script.push_back({3500, 0, ScriptAction::MapNewPage});
  spec.script.push_back({3600, 1, ScriptAction::DemandPage});
  spec.script.push_back({3700, 2, ScriptAction::CowUpgrade});

  SystemConfig cfg;
  cfg.harts = 4;
  cfg.topology.kind = Topology::Kind::PrivateL2;

  GeneratedWorkload reference;
  {
    TlbSystem system(cfg);
    reference = generate(spec, system.memory());
    Validator validator;
    system.add_observer(&validator);
    execute(system, reference);
    EXPECT(validator.violation_count() == 0,
           "compliant run produced " + std::to_string(validator.violation_count()) +
               " violations");
  }
  EXPECT(reference.required_fences.size() == 10, "expected 10 droppable fences");

  size_t checked = 0;
  for (size_t idx : reference.required_fences) {
    TlbSystem system(cfg);
    GeneratedWorkload wl = generate(spec, system.memory());
    Validator validator;
    system.add_observer(&validator);
    execute(system, wl, idx);
    const auto viols = validator.violations();
    const auto expected = *wl.events[idx].violation_if_dropped;
    if (viols.size() != 1 || viols[0].kind != expected) {
      std::ostringstream os;
      os << "dropping fence " << idx << " yielded " << viols.size()
         << " violations (expected exactly one " << to_string(expected) << ")";
      out.fail(os.str());
    }
    ++checked;
  }
  out.detail = std::to_string(checked) + " fences dropped independently";
  return out;
}

// --- 9. record-replay ---------------------------------------------------------

Outcome check_record_replay() {
  Outcome out;
  WorkloadSpec spec;
  spec.harts = 4;
  spec.processes = 4;
  spec.pages_per_hart = 96;
  spec.shared_fraction = 0.4;
  spec.pattern.kind = AccessPattern::Kind::Zipf;
  spec.length = 60000;
  spec.seed = 909;
  spec.script = {{1000, 0, ScriptAction::ProtectDowngrade},
                 {2000, 1, ScriptAction::DemandPage},
                 {3000, 2, ScriptAction::CowUpgrade},
                 {4000, 3, ScriptAction::RemapPage},
                 {5000, 0, ScriptAction::AsidRoll}};

  SystemConfig cfg;
  cfg.harts = 4;
  cfg.topology.kind = Topology::Kind::SharedL2;
  cfg.topology.l2 = {512, 8};

  const std::string path =
      (std::filesystem::temp_directory_path() / "rvtlb_accept_rr.rvt").string();
  StatsSnapshot live;
  {
    TlbSystem system(cfg);
    GeneratedWorkload wl = generate(spec, system.memory());
    TraceWriter writer(path);
    TraceCollector collector(system, writer);
    system.add_observer(&collector);
    execute(system, wl);
    writer.close();
    live = system.snapshot();
  }

  TlbSystem replay_system(cfg);
  const StatsSnapshot replayed = replay_file(path, replay_system);

  size_t diffs = 0;
  for (unsigned l = 0; l < kTlbLevelCount; ++l) {
    const LevelCounts& x = live.total.levels[l];
    const LevelCounts& y = replayed.total.levels[l];
    if (x.lookups != y.lookups || x.hits != y.hits || x.misses != y.misses ||
        x.evictions != y.evictions || x.flushed_entries != y.flushed_entries)
      ++diffs;
  }
  if (live.total.walks != replayed.total.walks) ++diffs;
  for (unsigned f = 0; f < kWalkFaultCount; ++f)
    if (live.total.faults[f] != replayed.total.faults[f]) ++diffs;

  EXPECT(diffs == 0, std::to_string(diffs) + " counter groups differ");
  std::ostringstream os;
  os << "l1d lookups " << live.level(TlbLevel::L1D).lookups << ", l2 misses "
     << live.level(TlbLevel::L2).misses << ", walks " << live.total.walks;
  out.detail = os.str();
  std::filesystem::remove(path);
  return out;
}

// --- 10. MASI WARL probe -------------------------------------------------------

Outcome check_masi_probe() {
  Outcome out;
  const uint64_t masks[] = {0x0, 0x1, 0xff};
  size_t cases = 0;
  for (uint64_t mask : masks) {
    for (bool hart_id_wired : {false, true}) {
      SystemConfig cfg;
      cfg.harts = 4;
      cfg.masi.assign(4, MasiConfig{mask, 0, hart_id_wired});
      TlbSystem system(cfg);
      for (uint16_t h = 0; h < 4; ++h) {
        const uint64_t hardwired = (hart_id_wired ? h : 0) & ~mask;
        for (uint64_t written : {0ull, 0x5ull, 0xffffull, ~0ull}) {
          system.write_masi(h, written);
          const uint64_t want = (written & mask) | hardwired;
          if (system.read_masi(h) != want) {
            std::ostringstream os;
            os << "hart " << h << " mask 0x" << std::hex << mask << " wrote 0x"
               << written << " read 0x" << system.read_masi(h) << " want 0x"
               << want;
            out.fail(os.str());
          }
          ++cases;
        }
        if (system.probe_masi_writable(h) != mask)
          out.fail("probe did not return the writable mask");
      }
    }
  }
  out.detail = std::to_string(cases) + " write/read pairs";
  return out;
}

// --- 11. concurrency conservation ---------------------------------------------

Outcome check_concurrency_conservation() {
  Outcome out;
  constexpr unsigned kHarts = 8;
  constexpr uint64_t kAccesses = 1000000;
  constexpr int kReps = 10;

  for (int rep = 0; rep < kReps; ++rep) {
    SystemConfig cfg;
    cfg.harts = kHarts;
    cfg.topology.kind = Topology::Kind::SharedL2;
    cfg.topology.l2 = {1024, 8};
    TlbSystem system(cfg);
    AddressSpaceBuilder builder(system.memory(), PagingMode::Sv39);
    for (unsigned h = 0; h < kHarts; ++h) {
      Satp satp = builder.new_root(h + 1);
      for (uint64_t i = 0; i < 16; ++i)
        builder.map(satp, (0x40000ull + h * 64 + i) << kPageShift,
                    0x2000 + h * 64 + i, kRwad);
      system.write_satp(h, satp);
    }

    std::vector<std::thread> drivers;
    for (unsigned h = 0; h < kHarts; ++h) {
      drivers.emplace_back([&system, h, rep] {
        SplitMix64 rng(h * 977 + rep);
        for (uint64_t i = 0; i < kAccesses; ++i) {
          const uint64_t vaddr = (0x40000ull + h * 64 + rng.below(16)) << kPageShift;
          system.translate(static_cast<uint16_t>(h), vaddr, AccessType::Load);
        }
      });
    }
    for (auto& t : drivers) t.join();

    const StatsSnapshot snap = system.snapshot();
    const LevelCounts& l1d = snap.level(TlbLevel::L1D);
    if (l1d.lookups != kHarts * kAccesses) {
      out.fail("rep " + std::to_string(rep) + ": lookups " +
               std::to_string(l1d.lookups) + " != " +
               std::to_string(kHarts * kAccesses));
      return out;
    }
    if (l1d.hits + l1d.misses != l1d.lookups) {
      out.fail("rep " + std::to_string(rep) + ": hits+misses != lookups");
      return out;
    }
  }
  out.detail = "10 reps x 8 drivers x 1000000 accesses, all conserved";
  return out;
}

}  // namespace

int main() {
  struct Check {
    int id;
    const char* name;
    std::function<Outcome()> fn;
  };
  const Check checks[] = {
      {1, "sharing truth table", check_sharing_table},
      {2, "L0-in-L1 inclusion fuzz (1M events, 4 harts)", check_inclusion_fuzz},
      {3, "set-associative vs fully-associative oracle", check_fully_assoc_oracle},
      {4, "page-walk brute-force oracle", check_pagewalk_oracle},
      {5, "topology miss-rate ordering", check_topology_ordering},
      {6, "L2 size sweep monotonicity and doubling", check_size_sweep},
      {7, "fence categorizer counts", check_fence_categories},
      {8, "validators: compliant and fault-injected runs", check_validators},
      {9, "record-replay counter equivalence", check_record_replay},
      {10, "MASI WARL probe", check_masi_probe},
      {11, "concurrency counter conservation", check_concurrency_conservation},
  };

  int failures = 0;
  for (const Check& check : checks) {
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = check.fn();
    } catch (const std::exception& e) {
      outcome.pass = false;
      outcome.detail = std::string("exception: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    std::printf("[%s] %2d. %s (%.2fs)%s%s\n", outcome.pass ? "PASS" : "FAIL",
                check.id, check.name, secs, outcome.detail.empty() ? "" : " — ",
                outcome.detail.c_str());
    if (!outcome.pass) ++failures;
  }
  if (failures) std::printf("%d acceptance criteria FAILED\n", failures);
  else std::printf("all %zu acceptance criteria passed\n", std::size(checks));
  return failures == 0 ? 0 : 1;
}
