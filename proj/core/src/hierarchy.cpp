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

#include "rvtlb/hierarchy.hpp"

#include <algorithm>
#include <cassert>
#include <stdexcept>

namespace rvtlb {

const char* to_string(Topology::Kind kind) {
  switch (kind) {
    case Topology::Kind::L1Only: return "l1only";
    case Topology::Kind::PrivateL2: return "private";
    case Topology::Kind::SharedL2: return "shared";
    case Topology::Kind::SharedL2GlobalAsid: return "global";
  }
  return "?";
}

const char* to_string(SharingDecision d) {
  switch (d) {
    case SharingDecision::Share: return "share";
    case SharingDecision::NoShare: return "noshare";
    case SharingDecision::ImplementationDefined: return "implementation_defined";
  }
  return "?";
}

MasiCsr::MasiCsr(uint64_t writable_mask, uint64_t hardwired) {
  configure(writable_mask, hardwired);
}

void MasiCsr::configure(uint64_t writable_mask, uint64_t hardwired) {
  // Writable bits grow from bit 0: mask must be 2^k - 1.
  if ((writable_mask & (writable_mask + 1)) != 0)
    throw std::invalid_argument("MASI writable mask must be contiguous from bit 0");
  writable_mask_ = writable_mask;
  hardwired_ = hardwired & ~writable_mask;
  value_.store(hardwired_, std::memory_order_relaxed);
}

SharingDecision sharing_decision(const EntryTags& entry,
                                 const RequesterTags& requester) {
  if (entry.masi != requester.masi) return SharingDecision::NoShare;
  if (entry.vmid != requester.vmid) return SharingDecision::NoShare;
  if (entry.global) return SharingDecision::Share;
  if (entry.asid != 0 && requester.asid != 0)
    return entry.asid == requester.asid ? SharingDecision::Share
                                        : SharingDecision::NoShare;
  if (entry.asid == 0 && requester.asid == 0) return SharingDecision::NoShare;
  return SharingDecision::ImplementationDefined;
}

namespace {

// Matcher for the shared L2 under a global ASID space. Entries carry
// post-remap ASIDs (ASID 0 becomes a per-hart synthetic tag), so equality
// already encodes "same context". The remaining rows reduce to the
// sharing table with synthetic tags read back as ASID 0.
bool match_global_asid(const TlbEntry& entry, const LookupKey& key,
                       bool impl_share) {
  if (entry.vmid != key.vmid) return false;
  if (entry.masi_tag != key.masi_tag) return false;
  if (entry.asid == key.asid) return true;
  if (entry.global) return true;
  const bool entry_synth = entry.asid >= kSyntheticAsidBase;
  const bool key_synth = key.asid >= kSyntheticAsidBase;
  if (entry_synth != key_synth) return impl_share;
  return false;
}

uint64_t level_mask(unsigned level, unsigned bits) {
  return (1ull << (bits * level)) - 1;
}

uint64_t entry_paddr(const TlbEntry& entry, uint64_t vpn, uint64_t offset,
                     unsigned bits) {
  const uint64_t mask = level_mask(entry.level, bits);
  return ((entry.pte.ppn() | (vpn & mask)) << kPageShift) | offset;
}

}  // namespace

TlbSystem::TlbSystem(const SystemConfig& config)
    : config_(config),
      memory_(std::make_unique<SparseMemory>()),
      fabric_(config.harts) {
  if (config_.harts == 0) throw std::invalid_argument("at least one hart required");
  if (!config_.l1i.valid() || !config_.l1d.valid() ||
      (config_.topology.kind != Topology::Kind::L1Only && !config_.topology.l2.valid()))
    throw std::invalid_argument("TLB geometry: total entries must be a non-zero multiple of ways");

  const unsigned nlev = std::max(1u, levels(config_.mode));
  const unsigned bits = vpn_bits(config_.mode);

  auto make_l1 = [&](const TlbGeometry& geometry) -> std::unique_ptr<TlbModel> {
    if (config_.ideal_l1) return std::make_unique<IdealTlb>(nlev, bits);
    return std::make_unique<SetAssocTlb>(geometry, nlev, bits);
  };

  for (unsigned i = 0; i < config_.harts; ++i) {
    auto hart = std::make_unique<HartContext>();
    hart->hart_id = static_cast<uint16_t>(i);
    if (i < config_.masi.size()) {
      const MasiConfig& mc = config_.masi[i];
      hart->masi.configure(mc.writable_mask,
                           mc.hardwire_hart_id ? uint64_t(i) : mc.hardwired);
    }
    if (i < config_.vmid.size()) hart->vmid = config_.vmid[i];
    hart->l1i = make_l1(config_.l1i);
    hart->l1d = make_l1(config_.l1d);
    if (config_.topology.kind == Topology::Kind::PrivateL2)
      hart->l2 = std::make_unique<SetAssocTlb>(config_.topology.l2, nlev, bits);
    harts_.push_back(std::move(hart));
  }

  switch (config_.topology.kind) {
    case Topology::Kind::SharedL2:
      shared_l2_ = std::make_unique<SetAssocTlb>(config_.topology.l2, nlev, bits);
      break;
    case Topology::Kind::SharedL2GlobalAsid:
      shared_l2_ = std::make_unique<SetAssocTlb>(config_.topology.l2, nlev, bits);
      shared_l2_->set_matcher(
          [impl = config_.impl_defined_share](const TlbEntry& entry,
                                              const LookupKey& key) {
            return match_global_asid(entry, key, impl);
          });
      break;
    default:
      break;
  }

  memory_->add_mutation_observer([this](const PteMutation& m) {
    history_.on_mutation(m);
    emit([&](uint64_t seq, const std::vector<SystemObserver*>& obs) {
      MutationEvent event{seq, m};
      for (auto* o : obs) o->on_pte_mutation(event);
    });
  });
}

void TlbSystem::check_hart(uint16_t hart_id) const {
  if (hart_id >= harts_.size())
    throw std::out_of_range("hart " + std::to_string(hart_id) + " not registered");
}

TlbModel* TlbSystem::l2_for(uint16_t hart_id) {
  switch (config_.topology.kind) {
    case Topology::Kind::L1Only: return nullptr;
    case Topology::Kind::PrivateL2: return harts_[hart_id]->l2.get();
    default: return shared_l2_.get();
  }
}

uint32_t TlbSystem::effective_asid(uint16_t hart_id, uint32_t raw_asid) const {
  if (config_.topology.kind == Topology::Kind::SharedL2GlobalAsid && raw_asid == 0)
    return synthetic_asid(hart_id);
  return raw_asid;
}

DomainTag TlbSystem::domain_for(uint16_t hart_id, uint32_t raw_asid) const {
  const HartContext& hart = *harts_[hart_id];
  if (config_.topology.kind == Topology::Kind::SharedL2GlobalAsid) {
    return DomainTag{0, hart.masi.read(), hart.vmid,
                     effective_asid(hart_id, raw_asid)};
  }
  return DomainTag{uint64_t(hart_id) + 1, 0, hart.vmid, raw_asid};
}

TlbSystem::EntryUse TlbSystem::classify_hit(const TlbEntry& entry,
                                            AccessType access,
                                            WalkFault* fault) const {
  if (entry.negative) {
    *fault = WalkFault::InvalidEntry;
    return EntryUse::Fault;
  }
  if (!permits(entry.pte, access)) {
    *fault = WalkFault::PermissionDenied;
    return EntryUse::Fault;
  }
  // A store needs D set; refetch through the walker so the bit lands in
  // memory (or faults when hardware updates are off).
  if (access == AccessType::Store && !entry.pte.d()) return EntryUse::Retry;
  return EntryUse::Ok;
}

LookupKey TlbSystem::l2_key(const HartContext& hart, const LookupKey& key) const {
  LookupKey out = key;
  switch (config_.topology.kind) {
    case Topology::Kind::SharedL2:
      out.hart_tag = config_.topology.hart_tagged
                         ? std::optional<uint16_t>(hart.hart_id)
                         : std::nullopt;
      break;
    case Topology::Kind::SharedL2GlobalAsid:
      out.asid = effective_asid(hart.hart_id, key.asid);
      out.hart_tag = std::nullopt;
      break;
    default:
      out.hart_tag = std::nullopt;
      break;
  }
  return out;
}

TlbEntry TlbSystem::l2_entry(const HartContext& hart, const TlbEntry& entry) const {
  TlbEntry out = entry;
  switch (config_.topology.kind) {
    case Topology::Kind::SharedL2:
      if (config_.topology.hart_tagged) out.hart_tag = hart.hart_id;
      break;
    case Topology::Kind::SharedL2GlobalAsid:
      out.asid = effective_asid(hart.hart_id, entry.asid);
      break;
    default:
      break;
  }
  return out;
}

void TlbSystem::fire_l0(uint16_t hart_id, const TlbEntry& victim) {
  for (auto& fn : l0_callbacks_) fn(hart_id, victim.vpn, victim.level);
}

template <typename Fn>
void TlbSystem::emit(Fn&& fn) {
  if (!have_observers_.load(std::memory_order_relaxed)) return;
  std::lock_guard lock(event_mutex_);
  fn(next_seq_++, observers_);
}

Translation TlbSystem::translate(uint16_t hart_id, uint64_t vaddr,
                                 AccessType access) {
  return do_translate(hart_id, vaddr, access, nullptr);
}

Translation TlbSystem::translate_with(uint16_t hart_id, uint64_t vaddr,
                                      AccessType access,
                                      const WalkProvider& provider) {
  return do_translate(hart_id, vaddr, access, &provider);
}

Translation TlbSystem::do_translate(uint16_t hart_id, uint64_t vaddr,
                                    AccessType access,
                                    const WalkProvider* provider) {
  check_hart(hart_id);
  HartContext& hart = *harts_[hart_id];
  const Satp satp = Satp::from_raw(hart.satp_raw.load(std::memory_order_relaxed));

  if (satp.mode == PagingMode::Bare)
    return Translation::success(vaddr, 0, TranslateSource::Bare);

  StatsFabric::HartCounters& hc = fabric_.hart(hart_id);
  const unsigned bits = vpn_bits(satp.mode);

  auto parts = split_vaddr(vaddr, satp.mode);
  if (!parts) {
    hc.count_fault(WalkFault::NonCanonical);
    Translation result = Translation::failed(WalkFault::NonCanonical,
                                             TranslateSource::Walk);
    emit([&](uint64_t seq, const std::vector<SystemObserver*>& obs) {
      TranslateEvent event{seq, hart_id, access, vaddr, 0,
                           domain_for(hart_id, satp.asid), result, false, 0, 0};
      for (auto* o : obs) o->on_translate(event);
    });
    return result;
  }
  const uint64_t vpn = parts->full_vpn;
  const uint64_t offset = parts->offset;

  LookupKey key;
  key.vpn = vpn;
  key.asid = satp.asid;
  key.hart_tag = hart_id;
  key.masi_tag = hart.masi.read();
  key.vmid = hart.vmid;
  key.access = access;

  const DomainTag domain = domain_for(hart_id, satp.asid);
  const TlbLevel l1_level =
      access == AccessType::Fetch ? TlbLevel::L1I : TlbLevel::L1D;
  TlbModel& l1 = access == AccessType::Fetch ? *hart.l1i : *hart.l1d;

  auto finish = [&](Translation result, bool negative_hit, uint64_t leaf_raw,
                    uint64_t pte_paddr) {
    emit([&](uint64_t seq, const std::vector<SystemObserver*>& obs) {
      TranslateEvent event{seq,    hart_id,      access,   vaddr,
                           vpn,    domain,       result,   negative_hit,
                           leaf_raw, pte_paddr};
      for (auto* o : obs) o->on_translate(event);
    });
    return result;
  };

  // L1 probe. A store that hits an entry with D clear falls through as a
  // miss: the walk below lands the D update (or the AdRequired fault).
  hc.level(l1_level).lookups.fetch_add(1, std::memory_order_relaxed);
  if (auto hit = l1.peek(key)) {
    WalkFault fault{};
    switch (classify_hit(*hit, access, &fault)) {
      case EntryUse::Ok:
        hc.level(l1_level).hits.fetch_add(1, std::memory_order_relaxed);
        return finish(Translation::success(entry_paddr(*hit, vpn, offset, bits),
                                           hit->level, TranslateSource::L1),
                      false, hit->pte.raw, hit->pte_paddr);
      case EntryUse::Fault:
        hc.level(l1_level).hits.fetch_add(1, std::memory_order_relaxed);
        hc.count_fault(fault);
        return finish(Translation::failed(fault, TranslateSource::L1),
                      hit->negative, hit->pte.raw, hit->pte_paddr);
      case EntryUse::Retry:
        break;
    }
  }
  hc.level(l1_level).misses.fetch_add(1, std::memory_order_relaxed);

  // L2 probe.
  TlbModel* l2 = l2_for(hart_id);
  if (l2) {
    const LookupKey key2 = l2_key(hart, key);
    hc.level(TlbLevel::L2).lookups.fetch_add(1, std::memory_order_relaxed);
    if (auto hit = l2->peek(key2)) {
      WalkFault fault{};
      switch (classify_hit(*hit, access, &fault)) {
        case EntryUse::Ok: {
          hc.level(TlbLevel::L2).hits.fetch_add(1, std::memory_order_relaxed);
          // Fill L1 with the entry retagged for the requesting context.
          TlbEntry fill = *hit;
          fill.asid = key.asid;
          fill.hart_tag = std::nullopt;
          fill.masi_tag = key.masi_tag;
          fill.vmid = key.vmid;
          l1.insert(fill, [&](const TlbEntry& victim) {
            fire_l0(hart_id, victim);
            hc.level(l1_level).evictions.fetch_add(1, std::memory_order_relaxed);
          });
          return finish(Translation::success(entry_paddr(*hit, vpn, offset, bits),
                                             hit->level, TranslateSource::L2),
                        false, hit->pte.raw, hit->pte_paddr);
        }
        case EntryUse::Fault:
          hc.level(TlbLevel::L2).hits.fetch_add(1, std::memory_order_relaxed);
          hc.count_fault(fault);
          return finish(Translation::failed(fault, TranslateSource::L2),
                        hit->negative, hit->pte.raw, hit->pte_paddr);
        case EntryUse::Retry:
          break;
      }
    }
    hc.level(TlbLevel::L2).misses.fetch_add(1, std::memory_order_relaxed);
  }

  // Page walk (or the replay provider standing in for it).
  hc.walks.fetch_add(1, std::memory_order_relaxed);
  const WalkResult res = provider ? (*provider)(satp, vaddr, access)
                                  : walk(*memory_, satp, vaddr, access, config_.walk);
  history_.on_walk(domain, vpn, res);

  if (!res.ok) {
    hc.count_fault(res.fault);
    if (res.fault == WalkFault::InvalidEntry && config_.walk.cache_invalid) {
      TlbEntry neg;
      neg.vpn = vpn & ~level_mask(res.level, bits);
      neg.level = static_cast<uint8_t>(res.level);
      neg.pte = res.leaf;
      neg.asid = key.asid;
      neg.global = false;
      neg.masi_tag = key.masi_tag;
      neg.vmid = key.vmid;
      neg.negative = true;
      neg.pte_paddr = res.pte_paddr;
      if (l2) {
        l2->insert(l2_entry(hart, neg), [&](const TlbEntry&) {
          hc.level(TlbLevel::L2).evictions.fetch_add(1, std::memory_order_relaxed);
        });
      }
      l1.insert(neg, [&](const TlbEntry& victim) {
        fire_l0(hart_id, victim);
        hc.level(l1_level).evictions.fetch_add(1, std::memory_order_relaxed);
      });
    }
    return finish(Translation::failed(res.fault, TranslateSource::Walk), false,
                  res.leaf.raw, res.pte_paddr);
  }

  const Translation result = Translation::success(res.paddr, res.level,
                                                  TranslateSource::Walk);
  // Entries lacking W are only cached when the configuration says so;
  // otherwise the result is served uncached and every access re-walks.
  if (res.leaf.w() || config_.walk.cache_nonwritable) {
    TlbEntry entry;
    entry.vpn = vpn & ~level_mask(res.level, bits);
    entry.level = static_cast<uint8_t>(res.level);
    entry.pte = res.leaf;
    entry.asid = key.asid;
    entry.global = res.leaf.g();
    entry.masi_tag = key.masi_tag;
    entry.vmid = key.vmid;
    entry.pte_paddr = res.pte_paddr;
    if (l2) {
      l2->insert(l2_entry(hart, entry), [&](const TlbEntry&) {
        hc.level(TlbLevel::L2).evictions.fetch_add(1, std::memory_order_relaxed);
      });
    }
    l1.insert(entry, [&](const TlbEntry& victim) {
      fire_l0(hart_id, victim);
      hc.level(l1_level).evictions.fetch_add(1, std::memory_order_relaxed);
    });
  }
  return finish(result, false, res.leaf.raw, res.pte_paddr);
}

FenceResult TlbSystem::sfence(const FenceOp& op) {
  check_hart(op.hart_id);
  HartContext& hart = *harts_[op.hart_id];
  const Satp satp = Satp::from_raw(hart.satp_raw.load(std::memory_order_relaxed));
  StatsFabric::HartCounters& hc = fabric_.hart(op.hart_id);

  hc.fences[static_cast<size_t>(shape(op))].fetch_add(1, std::memory_order_relaxed);

  const PagingMode mode =
      satp.mode == PagingMode::Bare ? PagingMode::Sv39 : satp.mode;
  const auto vpn_of = [&](uint64_t vaddr) {
    const unsigned width = va_bits(mode) - kPageShift;
    return (vaddr >> kPageShift) & ((1ull << width) - 1);
  };

  FlushFilter l1_filter;
  if (op.vaddr) l1_filter.vpn = vpn_of(*op.vaddr);
  if (op.asid) l1_filter.asid = *op.asid;

  FenceResult out;
  auto l1_hook = [&](TlbLevel lvl) {
    return [this, &hc, lvl, hart_id = op.hart_id](const TlbEntry& victim) {
      fire_l0(hart_id, victim);
      hc.level(lvl).flushed_entries.fetch_add(1, std::memory_order_relaxed);
    };
  };
  size_t l1i_removed = hart.l1i->flush(l1_filter, l1_hook(TlbLevel::L1I));
  size_t l1d_removed = hart.l1d->flush(l1_filter, l1_hook(TlbLevel::L1D));
  out.flushed[static_cast<size_t>(TlbLevel::L1I)] = l1i_removed;
  out.flushed[static_cast<size_t>(TlbLevel::L1D)] = l1d_removed;

  if (TlbModel* l2 = l2_for(op.hart_id)) {
    FlushFilter l2_filter = l1_filter;
    switch (config_.topology.kind) {
      case Topology::Kind::SharedL2:
        if (config_.topology.hart_tagged) l2_filter.hart_tag = op.hart_id;
        break;
      case Topology::Kind::SharedL2GlobalAsid:
        if (l2_filter.asid)
          l2_filter.asid = effective_asid(op.hart_id, *l2_filter.asid);
        break;
      default:
        break;
    }
    size_t removed = l2->flush(l2_filter, [&](const TlbEntry&) {
      hc.level(TlbLevel::L2).flushed_entries.fetch_add(1, std::memory_order_relaxed);
    });
    out.flushed[static_cast<size_t>(TlbLevel::L2)] = removed;
  }

  DomainTag domain =
      domain_for(op.hart_id, op.asid ? *op.asid : satp.asid);
  uint64_t fence_vpn = 0;
  if (op.vaddr) {
    fence_vpn = vpn_of(*op.vaddr);
    out.category = history_.categorize(domain, fence_vpn);
    hc.fence_categories[static_cast<size_t>(*out.category)].fetch_add(
        1, std::memory_order_relaxed);
  }

  emit([&](uint64_t seq, const std::vector<SystemObserver*>& obs) {
    FenceEvent event{seq, op, domain, fence_vpn, out.category};
    for (auto* o : obs) o->on_fence(event);
  });
  return out;
}

Satp TlbSystem::write_satp(uint16_t hart_id, const Satp& new_satp) {
  check_hart(hart_id);
  HartContext& hart = *harts_[hart_id];
  const uint64_t old_raw = hart.satp_raw.exchange(new_satp.to_raw());
  const Satp old = Satp::from_raw(old_raw);
  emit([&](uint64_t seq, const std::vector<SystemObserver*>& obs) {
    SatpWriteEvent event{seq, hart_id, old, new_satp,
                         domain_for(hart_id, new_satp.asid), new_satp.asid};
    for (auto* o : obs) o->on_satp_write(event);
  });
  return old;
}

Satp TlbSystem::satp(uint16_t hart_id) const {
  if (hart_id >= harts_.size()) throw std::out_of_range("hart not registered");
  return Satp::from_raw(harts_[hart_id]->satp_raw.load(std::memory_order_relaxed));
}

uint64_t TlbSystem::probe_masi_writable(uint16_t hart_id) {
  check_hart(hart_id);
  MasiCsr& masi = harts_[hart_id]->masi;
  const uint64_t saved = masi.read();
  masi.write(0);
  const uint64_t zeros = masi.read();
  masi.write(~0ull);
  const uint64_t ones = masi.read();
  masi.write(saved);
  return zeros ^ ones;
}

uint64_t TlbSystem::read_masi(uint16_t hart_id) const {
  if (hart_id >= harts_.size()) throw std::out_of_range("hart not registered");
  return harts_[hart_id]->masi.read();
}

void TlbSystem::write_masi(uint16_t hart_id, uint64_t value) {
  check_hart(hart_id);
  harts_[hart_id]->masi.write(value);
}

void TlbSystem::retire(uint16_t hart_id, uint64_t instructions,
                       uint64_t memory_accesses) {
  check_hart(hart_id);
  StatsFabric::HartCounters& hc = fabric_.hart(hart_id);
  hc.retired_instructions.fetch_add(instructions, std::memory_order_relaxed);
  hc.retired_memory_accesses.fetch_add(memory_accesses, std::memory_order_relaxed);
}

void TlbSystem::register_l0_invalidate(L0InvalidateFn fn) {
  l0_callbacks_.push_back(std::move(fn));
}

void TlbSystem::add_observer(SystemObserver* observer) {
  std::lock_guard lock(event_mutex_);
  observers_.push_back(observer);
  have_observers_.store(true, std::memory_order_relaxed);
}

void TlbSystem::remove_observer(SystemObserver* observer) {
  std::lock_guard lock(event_mutex_);
  observers_.erase(std::remove(observers_.begin(), observers_.end(), observer),
                   observers_.end());
  have_observers_.store(!observers_.empty(), std::memory_order_relaxed);
}

}  // namespace rvtlb
