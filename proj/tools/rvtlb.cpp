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

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rvtlb/report.hpp"
#include "rvtlb/runconfig.hpp"
#include "rvtlb/trace.hpp"
#include "rvtlb/validate.hpp"
#include "rvtlb/workload.hpp"

namespace {

using namespace rvtlb;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitIo = 3;

struct Overrides {
  std::string config_path;
  std::optional<std::string> topology;
  std::optional<uint64_t> l2_size;
  std::optional<unsigned> harts;
  std::optional<uint64_t> seed;
  std::optional<std::string> report;
  std::optional<std::string> csv;
  std::optional<std::string> trace;
  std::optional<std::string> impl_defined;
  std::vector<uint64_t> sweep_l2;
  bool serial = false;
  bool validators = false;
};

void add_common_flags(CLI::App* cmd, Overrides& ov) {
  cmd->add_option("--config", ov.config_path, "JSON config file");
  cmd->add_option("--topology", ov.topology,
                  "L2 topology: l1only, private, shared or global");
  cmd->add_option("--l2-size", ov.l2_size, "L2 entries per core");
  cmd->add_option("--harts", ov.harts, "number of harts");
  cmd->add_option("--seed", ov.seed, "workload seed");
  cmd->add_option("--report", ov.report, "JSON report output path");
  cmd->add_option("--csv", ov.csv, "CSV row output path (appends)");
  cmd->add_option("--trace", ov.trace, "trace file path");
  cmd->add_option("--impl-defined", ov.impl_defined,
                  "resolve implementation-defined sharing rows: share|noshare")
      ->check(CLI::IsMember({"share", "noshare"}));
  cmd->add_flag("--serial", ov.serial, "drive harts on one thread, in stream order");
  cmd->add_flag("--validators", ov.validators, "enable the OS-behavior validators");
}

RunConfig make_config(const Overrides& ov) {
  RunConfig config = ov.config_path.empty()
                         ? parse_run_config("")
                         : load_run_config_file(ov.config_path);
  if (ov.topology) {
    if (*ov.topology == "l1only")
      config.system.topology.kind = Topology::Kind::L1Only;
    else if (*ov.topology == "private")
      config.system.topology.kind = Topology::Kind::PrivateL2;
    else if (*ov.topology == "shared")
      config.system.topology.kind = Topology::Kind::SharedL2;
    else if (*ov.topology == "global")
      config.system.topology.kind = Topology::Kind::SharedL2GlobalAsid;
    else
      throw ConfigError("--topology", "expected l1only, private, shared or global");
  }
  if (ov.harts) {
    if (*ov.harts == 0) throw ConfigError("--harts", "must be at least 1");
    config.system.harts = *ov.harts;
    config.workload.harts = *ov.harts;
  }
  if (ov.l2_size) config.l2_per_core = *ov.l2_size;
  if (ov.seed) config.workload.seed = *ov.seed;
  if (ov.report) config.report_path = *ov.report;
  if (ov.csv) config.csv_path = *ov.csv;
  if (ov.trace) config.trace_path = *ov.trace;
  if (ov.impl_defined)
    config.system.impl_defined_share = (*ov.impl_defined == "share");
  if (ov.serial) config.threads = false;
  if (ov.validators) config.validators = true;
  config.apply_l2_size();
  return config;
}

RunLabel make_label(const std::string& command, const RunConfig& config) {
  RunLabel label;
  label.command = command;
  label.topology = to_string(config.system.topology.kind);
  label.l2_per_core =
      config.system.topology.kind == Topology::Kind::L1Only ? 0 : config.l2_per_core;
  label.harts = config.system.harts;
  label.seed = config.workload.seed;
  return label;
}

void print_summary(const RunLabel& label, const StatsSnapshot& snap,
                   size_t violation_count) {
  const DerivedMetrics metrics = derive_metrics(snap);
  std::cout << label.command << " topology=" << label.topology
            << " l2/core=" << label.l2_per_core << " harts=" << label.harts
            << " seed=" << label.seed << '\n';
  for (unsigned l = 0; l < kTlbLevelCount; ++l) {
    const LevelCounts& c = snap.total.levels[l];
    if (c.lookups == 0) continue;
    std::cout << "  " << to_string(static_cast<TlbLevel>(l))
              << ": lookups=" << c.lookups << " misses=" << c.misses
              << " evictions=" << c.evictions << " flushed=" << c.flushed_entries
              << '\n';
  }
  std::cout << "  walks=" << snap.total.walks;
  if (metrics.l1_miss_rate) std::cout << " l1_miss_rate=" << *metrics.l1_miss_rate;
  if (metrics.l2_local_miss_rate)
    std::cout << " l2_local_miss_rate=" << *metrics.l2_local_miss_rate;
  std::cout << '\n';
  uint64_t categorized = 0;
  for (uint64_t n : snap.total.fence_categories) categorized += n;
  if (categorized) {
    std::cout << "  fence categories:";
    for (unsigned c = 0; c < kFlushCategoryCount; ++c)
      std::cout << ' ' << to_string(static_cast<FlushCategory>(c)) << '='
                << snap.total.fence_categories[c];
    std::cout << '\n';
  }
  if (violation_count)
    std::cout << "  violations=" << violation_count << '\n';
}

void write_outputs(const RunConfig& config, const RunLabel& label,
                   const StatsSnapshot& snap, const std::vector<Violation>& viols) {
  if (!config.report_path.empty())
    write_text_file(config.report_path, report_json(label, snap, viols));
  if (!config.csv_path.empty()) append_csv(config.csv_path, label, snap);
}

int run_once(RunConfig config, const std::string& command, bool collect_trace,
             bool force_validators) {
  if (config.system.mode != PagingMode::Sv39)
    throw ConfigError("mode", "synthetic workloads build sv39 page tables");
  TlbSystem system(config.system);
  GeneratedWorkload workload = generate(config.workload, system.memory());

  Validator validator;
  const bool validate = config.validators || force_validators;
  if (validate) system.add_observer(&validator);

  std::optional<TraceWriter> writer;
  std::optional<TraceCollector> collector;
  if (collect_trace) {
    if (config.trace_path.empty())
      throw ConfigError("--trace", "an output trace path is required");
    writer.emplace(config.trace_path);
    collector.emplace(system, *writer);
    system.add_observer(&*collector);
  }

  if (config.threads && !collect_trace)
    execute_threaded(system, workload);
  else
    execute(system, workload);  // collection is serialized for determinism

  if (writer) writer->close();

  const StatsSnapshot snap = system.snapshot();
  const RunLabel label = make_label(command, config);
  const auto viols = validate ? validator.violations() : std::vector<Violation>{};
  write_outputs(config, label, snap, viols);
  print_summary(label, snap, viols.size());
  if (validate && !viols.empty()) {
    for (const Violation& v : viols) std::cerr << v.describe() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

int cmd_run(const Overrides& ov, bool force_validators) {
  RunConfig config = make_config(ov);
  if (ov.sweep_l2.empty()) return run_once(config, "run", ov.trace.has_value(), force_validators);

  int status = kExitOk;
  for (uint64_t size : ov.sweep_l2) {
    RunConfig step = config;
    step.l2_per_core = size;
    step.apply_l2_size();
    // One report per step would overwrite; sweeps report through the CSV.
    step.report_path.clear();
    int rc = run_once(step, "run", false, force_validators);
    if (rc != kExitOk) status = rc;
  }
  return status;
}

int cmd_replay(const Overrides& ov) {
  RunConfig config = make_config(ov);
  if (config.trace_path.empty())
    throw ConfigError("--trace", "a trace path is required");

  TlbSystem system(config.system);
  Validator validator;
  if (config.validators) system.add_observer(&validator);

  const StatsSnapshot snap = replay_file(config.trace_path, system);
  const RunLabel label = make_label("replay", config);
  const auto viols =
      config.validators ? validator.violations() : std::vector<Violation>{};
  write_outputs(config, label, snap, viols);
  print_summary(label, snap, viols.size());
  if (config.validators && !viols.empty()) return kExitRuntime;
  return kExitOk;
}

int cmd_gen(const Overrides& ov) {
  RunConfig config = make_config(ov);
  if (config.trace_path.empty())
    throw ConfigError("--trace", "an output trace path is required");
  if (config.system.mode != PagingMode::Sv39)
    throw ConfigError("mode", "synthetic workloads build sv39 page tables");

  TlbSystem system(config.system);
  GeneratedWorkload workload = generate(config.workload, system.memory());

  TraceWriter writer(config.trace_path);
  TraceCollector collector(system, writer);
  system.add_observer(&collector);
  execute(system, workload);
  writer.close();

  std::cout << "gen: wrote " << writer.records_written() << " records to "
            << config.trace_path << '\n';
  const RunLabel label = make_label("gen", config);
  write_outputs(config, label, system.snapshot(), {});
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RISC-V multi-hart TLB hierarchy simulator"};
  app.require_subcommand(1);

  Overrides run_ov, replay_ov, gen_ov, validate_ov;

  CLI::App* run = app.add_subcommand("run", "execute a synthetic workload live");
  add_common_flags(run, run_ov);
  run->add_option("--sweep-l2", run_ov.sweep_l2,
                  "run once per per-core L2 size, appending CSV rows")
      ->delimiter(',');

  CLI::App* replay = app.add_subcommand("replay", "replay a recorded trace");
  add_common_flags(replay, replay_ov);
  std::string replay_positional;
  replay->add_option("trace_file", replay_positional, "trace file to replay");

  CLI::App* gen = app.add_subcommand("gen", "generate a trace from a workload");
  add_common_flags(gen, gen_ov);

  CLI::App* validate =
      app.add_subcommand("validate", "run with validators on; fail on violations");
  add_common_flags(validate, validate_ov);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (run->parsed()) return cmd_run(run_ov, false);
    if (replay->parsed()) {
      if (!replay_positional.empty()) replay_ov.trace = replay_positional;
      return cmd_replay(replay_ov);
    }
    if (gen->parsed()) return cmd_gen(gen_ov);
    if (validate->parsed()) return cmd_run(validate_ov, true);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const TraceError& e) {
    std::cerr << "trace error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::runtime_error& e) {
    // File-level problems (missing trace, unwritable report) land here.
    const std::string what = e.what();
    const bool io = what.find("cannot open") != std::string::npos ||
                    what.find("write failed") != std::string::npos;
    std::cerr << (io ? "io error: " : "error: ") << what << '\n';
    return io ? kExitIo : kExitRuntime;
  }
  return kExitConfig;
}
