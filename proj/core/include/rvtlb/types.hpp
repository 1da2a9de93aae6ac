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
#include <cstdint>
#include <optional>

namespace rvtlb {

inline constexpr unsigned kPageShift = 12;
inline constexpr uint64_t kPageSize = 1ull << kPageShift;
inline constexpr uint64_t kPageMask = kPageSize - 1;

/// RISC-V paging modes. Bare performs identity translation and never
/// reaches the page walker or the TLBs.
enum class PagingMode : uint8_t { Bare = 0, Sv32, Sv39, Sv48 };

/// Number of page-table levels for a mode (0 for Bare).
constexpr unsigned levels(PagingMode mode) {
  switch (mode) {
    case PagingMode::Sv32: return 2;
    case PagingMode::Sv39: return 3;
    case PagingMode::Sv48: return 4;
    default: return 0;
  }
}

/// Bits of virtual address consumed per page-table level.
constexpr unsigned vpn_bits(PagingMode mode) {
  return mode == PagingMode::Sv32 ? 10 : 9;
}

/// ASID width: 9 bits for Sv32, 16 bits for the 64-bit modes.
constexpr unsigned asid_bits(PagingMode mode) {
  return mode == PagingMode::Sv32 ? 9 : 16;
}

/// Total virtual-address width of a mode.
constexpr unsigned va_bits(PagingMode mode) {
  return kPageShift + levels(mode) * vpn_bits(mode);
}

/// In-memory PTE size in bytes.
constexpr unsigned pte_bytes(PagingMode mode) {
  return mode == PagingMode::Sv32 ? 4 : 8;
}

const char* to_string(PagingMode mode);

/// Decoded page table entry. The raw word is kept verbatim; RSW bits and
/// PPN bits above 44 are preserved but ignored. Reserved encodings
/// (W set without R) are representable: classification is left to the
/// walker.
struct Pte {
  uint64_t raw = 0;

  static constexpr uint64_t kV = 1u << 0;
  static constexpr uint64_t kR = 1u << 1;
  static constexpr uint64_t kW = 1u << 2;
  static constexpr uint64_t kX = 1u << 3;
  static constexpr uint64_t kU = 1u << 4;
  static constexpr uint64_t kG = 1u << 5;
  static constexpr uint64_t kA = 1u << 6;
  static constexpr uint64_t kD = 1u << 7;

  constexpr bool v() const { return raw & kV; }
  constexpr bool r() const { return raw & kR; }
  constexpr bool w() const { return raw & kW; }
  constexpr bool x() const { return raw & kX; }
  constexpr bool u() const { return raw & kU; }
  constexpr bool g() const { return raw & kG; }
  constexpr bool a() const { return raw & kA; }
  constexpr bool d() const { return raw & kD; }

  /// PPN occupies raw bits 10..53.
  constexpr uint64_t ppn() const { return (raw >> 10) & ((1ull << 44) - 1); }

  /// Leaf iff at least one of R/W/X is set.
  constexpr bool leaf() const { return raw & (kR | kW | kX); }

  /// W without R is a reserved encoding for a valid entry.
  constexpr bool reserved() const { return w() && !r(); }

  constexpr uint8_t flags() const { return static_cast<uint8_t>(raw & 0xff); }

  friend constexpr bool operator==(const Pte&, const Pte&) = default;
};

/// Extract flags and PPN from a raw PTE word.
constexpr Pte decode_pte(uint64_t raw) { return Pte{raw}; }

/// Assemble a raw PTE word from flag bits (V..D in bit order 0..7) and a
/// PPN below 2^44.
constexpr uint64_t encode_pte(uint8_t flags, uint64_t ppn) {
  return static_cast<uint64_t>(flags) | ((ppn & ((1ull << 44) - 1)) << 10);
}

/// Kind of memory access being translated. Fetch requires X, Load
/// requires R, Store requires W.
enum class AccessType : uint8_t { Fetch = 0, Load = 1, Store = 2 };

const char* to_string(AccessType access);

constexpr bool permits(const Pte& pte, AccessType access) {
  switch (access) {
    case AccessType::Fetch: return pte.x();
    case AccessType::Load: return pte.r();
    case AccessType::Store: return pte.w();
  }
  return false;
}

/// SATP CSR contents: paging mode, ASID and root page-table PPN. The ASID
/// is masked to the mode's width on construction, so truncation of an
/// over-wide value is deterministic and observable.
struct Satp {
  PagingMode mode = PagingMode::Bare;
  uint32_t asid = 0;
  uint64_t root_ppn = 0;

  Satp() = default;
  Satp(PagingMode m, uint32_t a, uint64_t ppn)
      : mode(m),
        asid(m == PagingMode::Bare ? 0 : a & ((1u << asid_bits(m)) - 1)),
        root_ppn(ppn & ((1ull << 44) - 1)) {}

  /// Pack into the 64-bit SATP layout: MODE[63:60], ASID[59:44], PPN[43:0].
  /// Mode nibble: 0 = Bare, 1 = Sv32, 8 = Sv39, 9 = Sv48. Sv32 borrows the
  /// 64-bit field layout with its 9-bit ASID and 22-bit PPN zero-extended.
  uint64_t to_raw() const;
  static Satp from_raw(uint64_t raw);

  friend bool operator==(const Satp&, const Satp&) = default;
};

/// Virtual address split into per-level table indices (root first), the
/// page offset and the full VPN.
struct VpnParts {
  PagingMode mode = PagingMode::Bare;
  std::array<uint16_t, 4> parts{};  // parts[0] indexes the root level
  uint16_t offset = 0;
  uint64_t full_vpn = 0;

  /// Reassemble the canonical virtual address (sign-extended above the
  /// mode's VA width).
  uint64_t to_vaddr() const;
};

/// True when vaddr is representable under the mode: bits above va_bits-1
/// must replicate the top VA bit (Sv39/Sv48); Sv32 requires the address
/// to fit in 32 bits.
bool is_canonical(uint64_t vaddr, PagingMode mode);

/// Split a canonical vaddr into per-level indices. Returns nullopt for a
/// non-canonical address. mode must not be Bare.
std::optional<VpnParts> split_vaddr(uint64_t vaddr, PagingMode mode);

/// Sign-extend a full VPN back to a canonical vaddr (page-aligned).
uint64_t vpn_to_vaddr(uint64_t vpn, PagingMode mode);

}  // namespace rvtlb
