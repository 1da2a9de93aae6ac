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

#include "rvtlb/trace.hpp"

#include <zlib.h>

#include <cstdio>
#include <cstring>

namespace rvtlb {

namespace {

void put16(uint8_t* p, uint16_t v) {
  p[0] = static_cast<uint8_t>(v);
  p[1] = static_cast<uint8_t>(v >> 8);
}
void put32(uint8_t* p, uint32_t v) {
  for (int i = 0; i < 4; ++i) p[i] = static_cast<uint8_t>(v >> (8 * i));
}
void put64(uint8_t* p, uint64_t v) {
  for (int i = 0; i < 8; ++i) p[i] = static_cast<uint8_t>(v >> (8 * i));
}
uint16_t get16(const uint8_t* p) {
  return static_cast<uint16_t>(p[0] | (p[1] << 8));
}
uint32_t get32(const uint8_t* p) {
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(p[i]) << (8 * i);
  return v;
}
uint64_t get64(const uint8_t* p) {
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(p[i]) << (8 * i);
  return v;
}

bool gz_path(const std::string& path) {
  return path.size() > 3 && path.compare(path.size() - 3, 3, ".gz") == 0;
}

}  // namespace

void TraceRecord::encode(uint8_t out[kSize]) const {
  put16(out, hart_id);
  out[2] = static_cast<uint8_t>(op);
  out[3] = level_hint;
  put32(out + 4, 0);  // reserved
  put64(out + 8, vaddr);
  put64(out + 16, aux);
  put64(out + 24, payload);
}

bool TraceRecord::decode(const uint8_t in[kSize], TraceRecord* out) {
  const uint8_t op = in[2];
  if (op > static_cast<uint8_t>(Op::PteWrite)) return false;
  out->hart_id = get16(in);
  out->op = static_cast<Op>(op);
  out->level_hint = in[3];
  out->vaddr = get64(in + 8);
  out->aux = get64(in + 16);
  out->payload = get64(in + 24);
  return true;
}

TraceRecord TraceRecord::memory(uint16_t hart, AccessType access, uint64_t vaddr,
                                const Translation& result, uint64_t leaf_raw,
                                uint64_t pte_paddr) {
  TraceRecord rec;
  rec.hart_id = hart;
  rec.op = static_cast<Op>(static_cast<uint8_t>(access));
  if (result.ok) {
    rec.level_hint = static_cast<uint8_t>(result.level & 0x7);
  } else {
    rec.level_hint = static_cast<uint8_t>(
        kFaultBit | ((static_cast<uint8_t>(result.fault) & 0x7) << 4) |
        (result.level & 0x7));
  }
  rec.vaddr = vaddr;
  rec.aux = pte_paddr;
  rec.payload = leaf_raw;
  return rec;
}

TraceRecord TraceRecord::fence(const FenceOp& op) {
  TraceRecord rec;
  rec.hart_id = op.hart_id;
  rec.op = Op::Sfence;
  rec.level_hint = static_cast<uint8_t>((op.vaddr ? 1 : 0) | (op.asid ? 2 : 0));
  rec.vaddr = op.vaddr.value_or(0);
  rec.aux = op.asid.value_or(0);
  return rec;
}

TraceRecord TraceRecord::satp_write(uint16_t hart, const Satp& satp) {
  TraceRecord rec;
  rec.hart_id = hart;
  rec.op = Op::SatpWrite;
  rec.aux = satp.to_raw();
  return rec;
}

// --- writer ------------------------------------------------------------

struct TraceWriter::Impl {
  std::FILE* file = nullptr;
  gzFile gz = nullptr;

  ~Impl() {
    if (gz) gzclose(gz);
    if (file) std::fclose(file);
  }
};

TraceWriter::TraceWriter(const std::string& path, uint32_t flags)
    : impl_(std::make_unique<Impl>()) {
  uint8_t header[kTraceHeaderSize];
  std::memcpy(header, kTraceMagic, 8);
  put32(header + 8, 0);
  put32(header + 12, flags);

  if (gz_path(path)) {
    impl_->gz = gzopen(path.c_str(), "wb");
    if (!impl_->gz) throw std::runtime_error("cannot open trace file: " + path);
    if (gzwrite(impl_->gz, header, kTraceHeaderSize) != int(kTraceHeaderSize))
      throw std::runtime_error("cannot write trace header: " + path);
  } else {
    impl_->file = std::fopen(path.c_str(), "wb");
    if (!impl_->file) throw std::runtime_error("cannot open trace file: " + path);
    if (std::fwrite(header, 1, kTraceHeaderSize, impl_->file) != kTraceHeaderSize)
      throw std::runtime_error("cannot write trace header: " + path);
  }
}

TraceWriter::~TraceWriter() {
  try {
    close();
  } catch (...) {
  }
}

void TraceWriter::write(const TraceRecord& record) {
  uint8_t buf[TraceRecord::kSize];
  record.encode(buf);
  if (impl_->gz) {
    if (gzwrite(impl_->gz, buf, TraceRecord::kSize) != int(TraceRecord::kSize))
      throw std::runtime_error("trace write failed");
  } else if (impl_->file) {
    if (std::fwrite(buf, 1, TraceRecord::kSize, impl_->file) != TraceRecord::kSize)
      throw std::runtime_error("trace write failed");
  } else {
    throw std::runtime_error("trace writer is closed");
  }
  ++count_;
}

void TraceWriter::close() {
  if (impl_->gz) {
    gzclose(impl_->gz);
    impl_->gz = nullptr;
  }
  if (impl_->file) {
    // Backpatch the record count now that it is known.
    uint8_t buf[4];
    put32(buf, static_cast<uint32_t>(count_));
    std::fseek(impl_->file, 8, SEEK_SET);
    std::fwrite(buf, 1, 4, impl_->file);
    std::fclose(impl_->file);
    impl_->file = nullptr;
  }
}

// --- reader ------------------------------------------------------------

struct TraceReader::Impl {
  gzFile gz = nullptr;

  ~Impl() {
    if (gz) gzclose(gz);
  }
};

TraceReader::TraceReader(const std::string& path)
    : impl_(std::make_unique<Impl>()) {
  // gzopen reads both gzip-compressed and plain files.
  impl_->gz = gzopen(path.c_str(), "rb");
  if (!impl_->gz) throw std::runtime_error("cannot open trace file: " + path);

  uint8_t header[kTraceHeaderSize];
  int n = gzread(impl_->gz, header, kTraceHeaderSize);
  if (n != int(kTraceHeaderSize) || std::memcmp(header, kTraceMagic, 8) != 0)
    throw TraceError("bad trace header: magic mismatch", 0);
  declared_count_ = get32(header + 8);
  flags_ = get32(header + 12);
  offset_ = kTraceHeaderSize;
}

TraceReader::~TraceReader() = default;

std::optional<TraceRecord> TraceReader::next() {
  if (declared_count_ != 0 && records_read_ >= declared_count_)
    return std::nullopt;

  uint8_t buf[TraceRecord::kSize];
  int n = gzread(impl_->gz, buf, TraceRecord::kSize);
  if (n == 0) {
    if (declared_count_ != 0)
      throw TraceError("trace ends before declared record count", offset_);
    return std::nullopt;
  }
  if (n != int(TraceRecord::kSize))
    throw TraceError("truncated trace record", offset_);

  TraceRecord rec;
  if (!TraceRecord::decode(buf, &rec))
    throw TraceError("unknown trace op " + std::to_string(buf[2]), offset_);
  offset_ += TraceRecord::kSize;
  ++records_read_;
  return rec;
}

// --- collector -----------------------------------------------------------

TraceCollector::TraceCollector(TlbSystem& system, TraceWriter& writer)
    : writer_(writer) {
  // Snapshot pre-attach context. Bare is the replay default, so only
  // harts already running translation need a leading record.
  for (unsigned h = 0; h < system.config().harts; ++h) {
    const Satp satp = system.satp(static_cast<uint16_t>(h));
    if (satp.mode != PagingMode::Bare)
      writer_.write(TraceRecord::satp_write(static_cast<uint16_t>(h), satp));
  }
}

void TraceCollector::on_translate(const TranslateEvent& event) {
  if (event.result.source == TranslateSource::Bare) return;
  std::lock_guard lock(mutex_);
  writer_.write(TraceRecord::memory(event.hart_id, event.access, event.vaddr,
                                    event.result, event.leaf_raw,
                                    event.pte_paddr));
}

void TraceCollector::on_satp_write(const SatpWriteEvent& event) {
  std::lock_guard lock(mutex_);
  writer_.write(TraceRecord::satp_write(event.hart_id, event.new_satp));
}

void TraceCollector::on_pte_mutation(const MutationEvent& event) {
  std::lock_guard lock(mutex_);
  TraceRecord first;
  first.op = TraceRecord::Op::PteWrite;
  first.level_hint = 0;
  first.aux = event.mutation.old_raw;
  first.payload = event.mutation.new_raw;
  writer_.write(first);

  TraceRecord second;
  second.op = TraceRecord::Op::PteWrite;
  second.level_hint = 1;
  second.payload = event.mutation.paddr;
  writer_.write(second);
}

void TraceCollector::on_fence(const FenceEvent& event) {
  std::lock_guard lock(mutex_);
  writer_.write(TraceRecord::fence(event.op));
}

// --- replay -------------------------------------------------------------

StatsSnapshot replay(TraceReader& reader, TlbSystem& system) {
  const unsigned harts = system.config().harts;
  uint64_t position = kTraceHeaderSize;
  std::optional<TraceRecord> pending_pte_write;

  while (auto rec = reader.next()) {
    if (rec->is_memory_op() || rec->op == TraceRecord::Op::Sfence ||
        rec->op == TraceRecord::Op::SatpWrite) {
      if (rec->hart_id >= harts)
        throw TraceError("record references unregistered hart " +
                             std::to_string(rec->hart_id),
                         position);
    }
    if (pending_pte_write && !(rec->op == TraceRecord::Op::PteWrite &&
                               rec->level_hint == 1))
      throw TraceError("PteWrite record without its paired address record",
                       position);

    switch (rec->op) {
      case TraceRecord::Op::Fetch:
      case TraceRecord::Op::Load:
      case TraceRecord::Op::Store: {
        const TraceRecord r = *rec;
        WalkProvider provider = [&r](const Satp& satp, uint64_t vaddr,
                                     AccessType) -> WalkResult {
          if (r.faulted())
            return WalkResult::failed(r.fault(), Pte{r.payload}, r.level(), r.aux);
          const Pte leaf{r.payload};
          const unsigned bits = vpn_bits(satp.mode);
          const uint64_t mask = (1ull << (bits * r.level())) - 1;
          auto parts = split_vaddr(vaddr, satp.mode);
          const uint64_t vpn = parts ? parts->full_vpn : 0;
          const uint64_t paddr =
              ((leaf.ppn() | (vpn & mask)) << kPageShift) | (vaddr & kPageMask);
          return WalkResult::success(leaf, r.level(), paddr, r.aux);
        };
        system.translate_with(rec->hart_id, rec->vaddr, rec->access(), provider);
        break;
      }
      case TraceRecord::Op::Sfence: {
        FenceOp op;
        op.hart_id = rec->hart_id;
        if (rec->level_hint & 1) op.vaddr = rec->vaddr;
        if (rec->level_hint & 2) op.asid = static_cast<uint32_t>(rec->aux);
        system.sfence(op);
        break;
      }
      case TraceRecord::Op::SatpWrite:
        system.write_satp(rec->hart_id, Satp::from_raw(rec->aux));
        break;
      case TraceRecord::Op::PteWrite:
        if (rec->level_hint == 0) {
          pending_pte_write = *rec;
        } else {
          if (!pending_pte_write)
            throw TraceError("unpaired PteWrite address record", position);
          const TraceRecord first = *pending_pte_write;
          pending_pte_write.reset();
          const uint64_t paddr = rec->payload;
          // Seed the old word silently so the mutation event carries the
          // recorded before/after pair.
          system.memory().write_u64(paddr, first.aux);
          system.memory().write_pte(paddr, first.payload);
        }
        break;
    }
    position += TraceRecord::kSize;
  }
  if (pending_pte_write)
    throw TraceError("trace ends inside a PteWrite pair", position);
  return system.snapshot();
}

StatsSnapshot replay_file(const std::string& path, TlbSystem& system) {
  TraceReader reader(path);
  return replay(reader, system);
}

}  // namespace rvtlb
