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

#include <string>
#include <vector>

#include "rvtlb/stats.hpp"
#include "rvtlb/validate.hpp"

namespace rvtlb {

/// Identification of one run for reports and plot tables.
struct RunLabel {
  std::string command;       // run | replay | gen | validate
  std::string topology;      // l1only | private | shared | global
  uint64_t l2_per_core = 0;  // 0 for l1only
  unsigned harts = 1;
  uint64_t seed = 0;
};

/// Machine report: every counter in the snapshot under a stable name,
/// plus derived metrics (null when undefined) and any violations.
std::string report_json(const RunLabel& label, const StatsSnapshot& snapshot,
                        const std::vector<Violation>& violations = {});

/// Flat plot-friendly table: one row per run.
std::string csv_header();
std::string csv_row(const RunLabel& label, const StatsSnapshot& snapshot);

/// Append a row, writing the header first when the file is new or empty.
void append_csv(const std::string& path, const RunLabel& label,
                const StatsSnapshot& snapshot);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace rvtlb
