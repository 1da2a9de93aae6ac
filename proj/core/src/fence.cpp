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

#include "rvtlb/fence.hpp"

namespace rvtlb {

const char* to_string(FenceShape s) {
  switch (s) {
    case FenceShape::Full: return "full";
    case FenceShape::VaddrOnly: return "vaddr";
    case FenceShape::AsidOnly: return "asid";
    case FenceShape::VaddrAsid: return "vaddr_asid";
  }
  return "?";
}

const char* to_string(FlushCategory category) {
  switch (category) {
    case FlushCategory::NeverAccessed: return "never_accessed";
    case FlushCategory::PreviouslyInvalid: return "previously_invalid";
    case FlushCategory::PreviouslyNonWritable: return "previously_nonwritable";
    case FlushCategory::Necessary: return "necessary";
  }
  return "?";
}

void PteHistory::on_walk(const DomainTag& domain, uint64_t vpn,
                         const WalkResult& result) {
  if (!result.ok && result.fault == WalkFault::NonCanonical) return;

  Record rec;
  rec.pte_paddr = result.pte_paddr;
  rec.current_raw = result.leaf.raw;
  if (!result.ok && result.fault == WalkFault::InvalidEntry) {
    rec.outcome = Outcome::Invalid;
  } else {
    // Success or a fault past a readable leaf: the walk saw real
    // permissions.
    rec.outcome = Outcome::Perms;
    rec.had_w = result.leaf.w();
  }

  Key key{domain, vpn};
  std::lock_guard lock(mutex_);
  records_[key] = rec;
  by_paddr_.emplace(rec.pte_paddr, key);
}

void PteHistory::on_mutation(const PteMutation& event) {
  std::lock_guard lock(mutex_);
  auto [begin, end] = by_paddr_.equal_range(event.paddr);
  for (auto it = begin; it != end; ++it) {
    auto rec = records_.find(it->second);
    if (rec != records_.end() && rec->second.pte_paddr == event.paddr)
      rec->second.current_raw = event.new_raw;
  }
}

FlushCategory classify(const std::optional<PteHistory::Record>& record) {
  if (!record) return FlushCategory::NeverAccessed;
  Pte current = decode_pte(record->current_raw);
  if (record->outcome == PteHistory::Outcome::Invalid) {
    if (current.v()) return FlushCategory::PreviouslyInvalid;
    return FlushCategory::Necessary;
  }
  if (!record->had_w && current.v() && current.leaf() && current.w())
    return FlushCategory::PreviouslyNonWritable;
  return FlushCategory::Necessary;
}

FlushCategory PteHistory::categorize(const DomainTag& domain,
                                     uint64_t vpn) const {
  return classify(record_for(domain, vpn));
}

std::optional<PteHistory::Record> PteHistory::record_for(
    const DomainTag& domain, uint64_t vpn) const {
  std::lock_guard lock(mutex_);
  auto it = records_.find(Key{domain, vpn});
  if (it == records_.end()) return std::nullopt;
  return it->second;
}

size_t PteHistory::size() const {
  std::lock_guard lock(mutex_);
  return records_.size();
}

}  // namespace rvtlb
