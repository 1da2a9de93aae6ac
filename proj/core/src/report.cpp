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

#include "rvtlb/report.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace rvtlb {

namespace {

using nlohmann::json;

json level_json(const LevelCounts& counts) {
  return json{{"lookups", counts.lookups},
              {"hits", counts.hits},
              {"misses", counts.misses},
              {"evictions", counts.evictions},
              {"flushed_entries", counts.flushed_entries}};
}

json per_hart_json(const StatsSnapshot::PerHart& hart) {
  json levels;
  for (unsigned l = 0; l < kTlbLevelCount; ++l)
    levels[to_string(static_cast<TlbLevel>(l))] = level_json(hart.levels[l]);

  json faults;
  for (unsigned f = 0; f < kWalkFaultCount; ++f)
    faults[to_string(static_cast<WalkFault>(f))] = hart.faults[f];

  json fences;
  for (unsigned s = 0; s < kFenceShapeCount; ++s)
    fences[to_string(static_cast<FenceShape>(s))] = hart.fences[s];

  json categories;
  for (unsigned c = 0; c < kFlushCategoryCount; ++c)
    categories[to_string(static_cast<FlushCategory>(c))] = hart.fence_categories[c];

  return json{{"levels", levels},
              {"walks", hart.walks},
              {"faults", faults},
              {"fences", fences},
              {"fence_categories", categories},
              {"retired",
               {{"instructions", hart.retired_instructions},
                {"memory_accesses", hart.retired_memory_accesses}}}};
}

json optional_number(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

}  // namespace

std::string report_json(const RunLabel& label, const StatsSnapshot& snapshot,
                        const std::vector<Violation>& violations) {
  const DerivedMetrics metrics = derive_metrics(snapshot);

  json harts = json::array();
  for (const auto& h : snapshot.harts) harts.push_back(per_hart_json(h));

  json violations_json = json::array();
  for (const Violation& v : violations) {
    violations_json.push_back(json{{"kind", to_string(v.kind)},
                                   {"seq", v.seq},
                                   {"hart", v.hart_id},
                                   {"asid", v.asid},
                                   {"root_ppn", v.root_ppn},
                                   {"vpn", v.vpn},
                                   {"description", v.describe()}});
  }

  json doc{
      {"run",
       {{"command", label.command},
        {"topology", label.topology},
        {"l2_per_core", label.l2_per_core},
        {"harts", label.harts},
        {"seed", label.seed}}},
      {"total", per_hart_json(snapshot.total)},
      {"harts", harts},
      {"derived",
       {{"l1_miss_rate", optional_number(metrics.l1_miss_rate)},
        {"l2_local_miss_rate", optional_number(metrics.l2_local_miss_rate)},
        {"effective_l1_hits",
         metrics.effective_l1_hits ? json(*metrics.effective_l1_hits) : json(nullptr)},
        {"mpki", optional_number(metrics.mpki)}}},
      {"violations", violations_json},
  };
  return doc.dump(2) + "\n";
}

std::string csv_header() {
  std::ostringstream os;
  os << "command,topology,l2_per_core,harts,seed";
  for (unsigned l = 0; l < kTlbLevelCount; ++l) {
    const char* name = to_string(static_cast<TlbLevel>(l));
    os << ',' << name << "_lookups," << name << "_hits," << name << "_misses,"
       << name << "_evictions," << name << "_flushed";
  }
  os << ",walks";
  for (unsigned f = 0; f < kWalkFaultCount; ++f)
    os << ",fault_" << to_string(static_cast<WalkFault>(f));
  for (unsigned s = 0; s < kFenceShapeCount; ++s)
    os << ",fence_" << to_string(static_cast<FenceShape>(s));
  for (unsigned c = 0; c < kFlushCategoryCount; ++c)
    os << ",cat_" << to_string(static_cast<FlushCategory>(c));
  os << ",retired_instructions,retired_memory_accesses"
     << ",l1_miss_rate,l2_local_miss_rate,mpki\n";
  return os.str();
}

std::string csv_row(const RunLabel& label, const StatsSnapshot& snapshot) {
  const DerivedMetrics metrics = derive_metrics(snapshot);
  const StatsSnapshot::PerHart& t = snapshot.total;

  std::ostringstream os;
  os << label.command << ',' << label.topology << ',' << label.l2_per_core
     << ',' << label.harts << ',' << label.seed;
  for (unsigned l = 0; l < kTlbLevelCount; ++l) {
    const LevelCounts& c = t.levels[l];
    os << ',' << c.lookups << ',' << c.hits << ',' << c.misses << ','
       << c.evictions << ',' << c.flushed_entries;
  }
  os << ',' << t.walks;
  for (unsigned f = 0; f < kWalkFaultCount; ++f) os << ',' << t.faults[f];
  for (unsigned s = 0; s < kFenceShapeCount; ++s) os << ',' << t.fences[s];
  for (unsigned c = 0; c < kFlushCategoryCount; ++c)
    os << ',' << t.fence_categories[c];
  os << ',' << t.retired_instructions << ',' << t.retired_memory_accesses;

  auto emit_opt = [&os](const std::optional<double>& v) {
    os << ',';
    if (v) os << *v;
  };
  emit_opt(metrics.l1_miss_rate);
  emit_opt(metrics.l2_local_miss_rate);
  emit_opt(metrics.mpki);
  os << '\n';
  return os.str();
}

void append_csv(const std::string& path, const RunLabel& label,
                const StatsSnapshot& snapshot) {
  namespace fs = std::filesystem;
  const bool fresh = !fs::exists(path) || fs::file_size(path) == 0;
  std::ofstream out(path, std::ios::app);
  if (!out) throw std::runtime_error("cannot open csv file: " + path);
  if (fresh) out << csv_header();
  out << csv_row(label, snapshot);
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open file for writing: " + path);
  out << content;
}

}  // namespace rvtlb
