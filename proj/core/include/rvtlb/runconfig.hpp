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

#include <stdexcept>
#include <string>

#include "rvtlb/hierarchy.hpp"
#include "rvtlb/workload.hpp"

namespace rvtlb {

/// Configuration problem, naming the offending field.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& field, const std::string& what)
      : std::runtime_error("config field '" + field + "': " + what),
        field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// One simulation run: machine shape, workload (or trace to replay), and
/// output paths. Defaults reproduce the baseline machine: 32-entry
/// fully-associative L1 I/D TLBs and an 8-way L2 with 128 entries per
/// core (private), or the per-core equivalent pooled into one shared
/// structure.
struct RunConfig {
  SystemConfig system;
  uint64_t l2_per_core = 128;
  WorkloadSpec workload;
  std::string trace_path;
  bool validators = false;
  bool threads = true;  ///< live mode: one driver thread per hart
  std::string report_path;
  std::string csv_path;

  /// Total L2 entries implied by l2_per_core under the current topology.
  uint64_t l2_total() const;
  /// Re-derive topology.l2.total_entries from l2_per_core.
  void apply_l2_size();
};

/// Parse a config document. Unknown fields and type mismatches are
/// ConfigErrors naming the field. The empty string yields the defaults.
RunConfig parse_run_config(const std::string& json_text);

RunConfig load_run_config_file(const std::string& path);

/// Serialize back to JSON. parse(to_json(c)) == c for every representable
/// config (no unknown fields survive a round trip).
std::string run_config_to_json(const RunConfig& config);

const char* to_string(AsidPolicy policy);
const char* to_string(AccessPattern::Kind kind);
const char* to_string(ScriptAction action);

}  // namespace rvtlb
