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

#include "rvtlb/types.hpp"

namespace rvtlb {

const char* to_string(PagingMode mode) {
  switch (mode) {
    case PagingMode::Bare: return "bare";
    case PagingMode::Sv32: return "sv32";
    case PagingMode::Sv39: return "sv39";
    case PagingMode::Sv48: return "sv48";
  }
  return "?";
}

const char* to_string(AccessType access) {
  switch (access) {
    case AccessType::Fetch: return "fetch";
    case AccessType::Load: return "load";
    case AccessType::Store: return "store";
  }
  return "?";
}

namespace {

constexpr uint64_t mode_nibble(PagingMode mode) {
  switch (mode) {
    case PagingMode::Bare: return 0;
    case PagingMode::Sv32: return 1;
    case PagingMode::Sv39: return 8;
    case PagingMode::Sv48: return 9;
  }
  return 0;
}

}  // namespace

uint64_t Satp::to_raw() const {
  return (mode_nibble(mode) << 60) | (static_cast<uint64_t>(asid) << 44) |
         (root_ppn & ((1ull << 44) - 1));
}

Satp Satp::from_raw(uint64_t raw) {
  PagingMode mode = PagingMode::Bare;
  switch (raw >> 60) {
    case 1: mode = PagingMode::Sv32; break;
    case 8: mode = PagingMode::Sv39; break;
    case 9: mode = PagingMode::Sv48; break;
    default: mode = PagingMode::Bare; break;
  }
  uint32_t asid = static_cast<uint32_t>((raw >> 44) & 0xffff);
  uint64_t ppn = raw & ((1ull << 44) - 1);
  if (mode == PagingMode::Sv32) ppn &= (1ull << 22) - 1;
  return Satp(mode, asid, ppn);
}

uint64_t VpnParts::to_vaddr() const {
  return vpn_to_vaddr(full_vpn, mode) | offset;
}

bool is_canonical(uint64_t vaddr, PagingMode mode) {
  switch (mode) {
    case PagingMode::Bare:
      return true;
    case PagingMode::Sv32:
      return vaddr <= 0xffffffffull;
    default: {
      const unsigned bits = va_bits(mode);
      const uint64_t upper = vaddr >> (bits - 1);
      // Bits 63..bits-1 must all equal bit bits-1.
      return upper == 0 || upper == (~0ull >> (bits - 1));
    }
  }
}

std::optional<VpnParts> split_vaddr(uint64_t vaddr, PagingMode mode) {
  if (mode == PagingMode::Bare || !is_canonical(vaddr, mode))
    return std::nullopt;

  VpnParts out;
  out.mode = mode;
  out.offset = static_cast<uint16_t>(vaddr & kPageMask);
  const unsigned nlev = levels(mode);
  const unsigned bits = vpn_bits(mode);
  out.full_vpn = (vaddr >> kPageShift) & ((1ull << (nlev * bits)) - 1);
  for (unsigned i = 0; i < nlev; ++i) {
    // parts[0] is the root-level index (most significant slice).
    const unsigned shift = (nlev - 1 - i) * bits;
    out.parts[i] = static_cast<uint16_t>((out.full_vpn >> shift) & ((1u << bits) - 1));
  }
  return out;
}

uint64_t vpn_to_vaddr(uint64_t vpn, PagingMode mode) {
  const unsigned bits = va_bits(mode);
  uint64_t vaddr = (vpn << kPageShift) & ((bits >= 64) ? ~0ull : ((1ull << bits) - 1));
  if (mode != PagingMode::Sv32 && mode != PagingMode::Bare) {
    if (vaddr & (1ull << (bits - 1))) vaddr |= ~((1ull << bits) - 1);
  }
  return vaddr;
}

}  // namespace rvtlb
