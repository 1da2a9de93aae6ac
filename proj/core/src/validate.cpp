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

#include "rvtlb/validate.hpp"

#include <algorithm>
#include <ostream>
#include <sstream>

namespace rvtlb {

const char* to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::AsidReuseWithoutFlush: return "asid_reuse_without_flush";
    case ViolationKind::StalePteUpdate: return "stale_pte_update";
    case ViolationKind::DuplicateAsidForPageTable:
      return "duplicate_asid_for_page_table";
  }
  return "?";
}

std::string Violation::describe() const {
  std::ostringstream os;
  os << to_string(kind) << ": hart " << hart_id << " asid " << asid;
  switch (kind) {
    case ViolationKind::AsidReuseWithoutFlush:
      os << " rebound to root 0x" << std::hex << root_ppn << " (was 0x"
         << old_raw << ")";
      break;
    case ViolationKind::DuplicateAsidForPageTable:
      os << " binds root 0x" << std::hex << root_ppn << " already bound by asid "
         << std::dec << old_raw;
      break;
    case ViolationKind::StalePteUpdate:
      os << " served stale vpn 0x" << std::hex << vpn << " (pte 0x" << old_raw
         << " -> 0x" << new_raw << ")";
      break;
  }
  os << std::dec << " [seq " << seq << "]";
  return os.str();
}

void Validator::report(const Violation& v) {
  violations_.push_back(v);
  if (log_) *log_ << v.describe() << '\n';
}

void Validator::on_satp_write(const SatpWriteEvent& event) {
  if (event.new_satp.mode == PagingMode::Bare) return;
  // ASID 0 is exempt: software without ASID support legitimately reuses it.
  if (event.raw_asid == 0) return;

  std::lock_guard lock(mutex_);
  const DomainTag key = event.domain;
  const ScopeKey scope{key.scope, key.masi, key.vmid};
  const uint64_t root = event.new_satp.root_ppn;

  auto [it, fresh] = bindings_.try_emplace(key);
  Binding& binding = it->second;
  if (!fresh && binding.root_ppn != root) {
    if (!binding.fenced_since) {
      report(Violation{ViolationKind::AsidReuseWithoutFlush, event.seq,
                       event.hart_id, event.raw_asid, root, 0,
                       binding.root_ppn, 0});
    }
    // The asid leaves its previous table.
    auto& old_asids = roots_[scope][binding.root_ppn];
    old_asids.erase(std::remove(old_asids.begin(), old_asids.end(), key.asid),
                    old_asids.end());
  }

  auto& live = roots_[scope][root];
  if (std::find(live.begin(), live.end(), key.asid) == live.end()) {
    for (uint32_t other : live) {
      report(Violation{ViolationKind::DuplicateAsidForPageTable, event.seq,
                       event.hart_id, event.raw_asid, root, 0, other, 0});
    }
    live.push_back(key.asid);
  }
  binding.root_ppn = root;
  binding.fenced_since = false;
}

void Validator::on_fence(const FenceEvent& event) {
  std::lock_guard lock(mutex_);
  const DomainTag& d = event.domain;
  // Only an asid-wide (or full) fence licenses rebinding that asid; a
  // single-page fence leaves the rest of the address space cached.
  if (!event.op.vaddr) {
    for (auto& [key, binding] : bindings_) {
      if (key.scope != d.scope || key.masi != d.masi || key.vmid != d.vmid)
        continue;
      if (event.op.asid && key.asid != d.asid) continue;
      binding.fenced_since = true;
    }
  }
  for (auto it = ideal_.begin(); it != ideal_.end();) {
    const DomainTag& kd = it->first.domain;
    bool covered = kd.scope == d.scope && kd.masi == d.masi && kd.vmid == d.vmid;
    if (covered && event.op.asid && kd.asid != d.asid) covered = false;
    if (covered && event.op.vaddr && it->first.vpn != event.vpn) covered = false;
    if (covered)
      it = ideal_.erase(it);
    else
      ++it;
  }
}

void Validator::on_pte_mutation(const MutationEvent& event) {
  const Pte old_pte = decode_pte(event.mutation.old_raw);
  const Pte new_pte = decode_pte(event.mutation.new_raw);

  const bool unmapped = old_pte.v() && !new_pte.v();
  const bool moved = old_pte.ppn() != new_pte.ppn();
  const uint64_t perms = Pte::kR | Pte::kW | Pte::kX;
  const bool reduced = (old_pte.raw & perms & ~new_pte.raw) != 0;
  if (!unmapped && !moved && !reduced) return;

  std::lock_guard lock(mutex_);
  for (auto& [key, entry] : ideal_) {
    if (entry.pte_paddr != event.mutation.paddr) continue;
    entry.tainted = true;
    entry.taint_old = event.mutation.old_raw;
    entry.taint_new = event.mutation.new_raw;
  }
}

void Validator::on_translate(const TranslateEvent& event) {
  std::lock_guard lock(mutex_);
  const PageKey key{event.domain, event.vpn};

  if (event.result.source == TranslateSource::Walk) {
    if (event.result.ok) {
      ideal_[key] = IdealEntry{event.pte_paddr, event.leaf_raw,
                               static_cast<uint8_t>(event.result.level),
                               false, false, 0, 0};
    }
    return;
  }
  if (event.result.source == TranslateSource::Bare || event.negative_hit) return;

  // Served from a translation cache: flag stale use of a mutated PTE.
  auto it = ideal_.find(key);
  if (it == ideal_.end()) return;
  IdealEntry& entry = it->second;
  if (entry.tainted && !entry.reported) {
    entry.reported = true;
    report(Violation{ViolationKind::StalePteUpdate, event.seq, event.hart_id,
                     event.domain.asid, 0, event.vpn, entry.taint_old,
                     entry.taint_new});
  }
}

std::vector<Violation> Validator::violations() const {
  std::lock_guard lock(mutex_);
  return violations_;
}

size_t Validator::violation_count() const {
  std::lock_guard lock(mutex_);
  return violations_.size();
}

}  // namespace rvtlb
