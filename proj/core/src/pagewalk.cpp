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

#include "rvtlb/pagewalk.hpp"

#include <cassert>

namespace rvtlb {

const char* to_string(WalkFault fault) {
  switch (fault) {
    case WalkFault::InvalidEntry: return "invalid_entry";
    case WalkFault::PermissionDenied: return "permission_denied";
    case WalkFault::MisalignedSuperpage: return "misaligned_superpage";
    case WalkFault::AdRequired: return "ad_required";
    case WalkFault::NonCanonical: return "non_canonical";
  }
  return "?";
}

namespace {

uint64_t read_pte_raw(SparseMemory& mem, uint64_t paddr, PagingMode mode) {
  if (pte_bytes(mode) == 4) return mem.read_u32(paddr);
  return mem.read_u64(paddr);
}

// OR flag bits into the PTE word, 4-byte entries included.
uint64_t set_pte_bits(SparseMemory& mem, uint64_t paddr, PagingMode mode,
                      uint64_t bits) {
  if (pte_bytes(mode) == 4) {
    unsigned shift = (paddr & 4) ? 32 : 0;
    uint64_t merged = mem.or_pte_bits(paddr & ~7ull, bits << shift);
    return (merged >> shift) & 0xffffffffull;
  }
  return mem.or_pte_bits(paddr, bits);
}

}  // namespace

WalkResult walk(SparseMemory& mem, const Satp& satp, uint64_t vaddr,
                AccessType access, const WalkConfig& cfg) {
  assert(satp.mode != PagingMode::Bare);

  auto parts = split_vaddr(vaddr, satp.mode);
  if (!parts) return WalkResult::failed(WalkFault::NonCanonical);

  const unsigned nlev = levels(satp.mode);
  const unsigned bits = vpn_bits(satp.mode);
  const unsigned entry_size = pte_bytes(satp.mode);

  uint64_t table_base = satp.root_ppn << kPageShift;
  for (unsigned i = nlev; i-- > 0;) {
    const uint64_t pte_paddr =
        table_base + static_cast<uint64_t>(parts->parts[nlev - 1 - i]) * entry_size;
    Pte pte = decode_pte(read_pte_raw(mem, pte_paddr, satp.mode));

    if (!pte.v() || pte.reserved())
      return WalkResult::failed(WalkFault::InvalidEntry, pte, i, pte_paddr);

    if (!pte.leaf()) {
      if (i == 0)
        return WalkResult::failed(WalkFault::InvalidEntry, pte, 0, pte_paddr);
      table_base = pte.ppn() << kPageShift;
      continue;
    }

    const uint64_t low_mask = (1ull << (bits * i)) - 1;
    if (i > 0 && (pte.ppn() & low_mask) != 0)
      return WalkResult::failed(WalkFault::MisalignedSuperpage, pte, i, pte_paddr);

    if (!permits(pte, access))
      return WalkResult::failed(WalkFault::PermissionDenied, pte, i, pte_paddr);

    uint64_t need = 0;
    if (!pte.a()) need |= Pte::kA;
    if (access == AccessType::Store && !pte.d()) need |= Pte::kD;
    if (need != 0) {
      if (!cfg.update_ad)
        return WalkResult::failed(WalkFault::AdRequired, pte, i, pte_paddr);
      pte.raw = set_pte_bits(mem, pte_paddr, satp.mode, need);
    }

    const uint64_t paddr =
        ((pte.ppn() | (parts->full_vpn & low_mask)) << kPageShift) | parts->offset;
    return WalkResult::success(pte, i, paddr, pte_paddr);
  }

  // Unreachable: the level-0 entry is always classified above.
  return WalkResult::failed(WalkFault::InvalidEntry);
}

}  // namespace rvtlb
