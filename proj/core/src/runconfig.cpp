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

#include "rvtlb/runconfig.hpp"

#include <fstream>
#include <sstream>
#include <unordered_set>

#include "json.hpp"

namespace rvtlb {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& field, const std::string& what) {
  throw ConfigError(field, what);
}

void expect_known(const json& obj, const std::string& path,
                  std::initializer_list<const char*> allowed) {
  std::unordered_set<std::string> ok;
  for (const char* k : allowed) ok.insert(k);
  for (const auto& [key, value] : obj.items()) {
    if (!ok.count(key))
      fail(path.empty() ? key : path + "." + key, "unknown field");
  }
}

uint64_t as_u64(const json& v, const std::string& field) {
  if (v.is_number_unsigned()) return v.get<uint64_t>();
  if (v.is_number_integer()) {
    auto i = v.get<int64_t>();
    if (i < 0) fail(field, "must be non-negative");
    return static_cast<uint64_t>(i);
  }
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    try {
      return std::stoull(s, nullptr, 0);
    } catch (...) {
      fail(field, "not a number: '" + s + "'");
    }
  }
  fail(field, "expected a number");
}

double as_double(const json& v, const std::string& field) {
  if (!v.is_number()) fail(field, "expected a number");
  return v.get<double>();
}

bool as_bool(const json& v, const std::string& field) {
  if (!v.is_boolean()) fail(field, "expected true or false");
  return v.get<bool>();
}

std::string as_string(const json& v, const std::string& field) {
  if (!v.is_string()) fail(field, "expected a string");
  return v.get<std::string>();
}

PagingMode parse_mode(const std::string& s, const std::string& field) {
  if (s == "sv32") return PagingMode::Sv32;
  if (s == "sv39") return PagingMode::Sv39;
  if (s == "sv48") return PagingMode::Sv48;
  fail(field, "expected sv32, sv39 or sv48");
}

Topology::Kind parse_topology_kind(const std::string& s, const std::string& field) {
  if (s == "l1only") return Topology::Kind::L1Only;
  if (s == "private") return Topology::Kind::PrivateL2;
  if (s == "shared") return Topology::Kind::SharedL2;
  if (s == "global") return Topology::Kind::SharedL2GlobalAsid;
  fail(field, "expected l1only, private, shared or global");
}

AsidPolicy parse_asid_policy(const std::string& s, const std::string& field) {
  if (s == "all_zero") return AsidPolicy::AllZero;
  if (s == "per_process") return AsidPolicy::PerProcess;
  if (s == "per_hart") return AsidPolicy::PerHart;
  fail(field, "expected all_zero, per_process or per_hart");
}

AccessPattern::Kind parse_pattern_kind(const std::string& s,
                                       const std::string& field) {
  if (s == "uniform") return AccessPattern::Kind::UniformRandom;
  if (s == "loop") return AccessPattern::Kind::Loop;
  if (s == "zipf") return AccessPattern::Kind::Zipf;
  fail(field, "expected uniform, loop or zipf");
}

ScriptAction parse_action(const std::string& s, const std::string& field) {
  if (s == "map_new_page") return ScriptAction::MapNewPage;
  if (s == "demand_page") return ScriptAction::DemandPage;
  if (s == "cow_upgrade") return ScriptAction::CowUpgrade;
  if (s == "protect_downgrade") return ScriptAction::ProtectDowngrade;
  if (s == "remap_page") return ScriptAction::RemapPage;
  if (s == "asid_roll") return ScriptAction::AsidRoll;
  fail(field, "unknown script action '" + s + "'");
}

TlbGeometry parse_geometry(const json& obj, const std::string& path,
                           TlbGeometry base) {
  expect_known(obj, path, {"entries", "ways", "policy", "seed"});
  if (obj.contains("entries"))
    base.total_entries = as_u64(obj["entries"], path + ".entries");
  if (obj.contains("ways")) base.ways = as_u64(obj["ways"], path + ".ways");
  if (obj.contains("policy")) {
    const std::string p = as_string(obj["policy"], path + ".policy");
    if (p == "fifo")
      base.policy = TlbGeometry::Policy::Fifo;
    else if (p == "random")
      base.policy = TlbGeometry::Policy::Random;
    else
      fail(path + ".policy", "expected fifo or random");
  }
  if (obj.contains("seed")) base.seed = as_u64(obj["seed"], path + ".seed");
  if (!base.valid())
    fail(path, "entries must be a non-zero multiple of ways");
  return base;
}

MasiConfig parse_masi(const json& obj, const std::string& path) {
  expect_known(obj, path, {"writable_mask", "hardwired", "hardwire_hart_id"});
  MasiConfig mc;
  if (obj.contains("writable_mask"))
    mc.writable_mask = as_u64(obj["writable_mask"], path + ".writable_mask");
  if (obj.contains("hardwired")) {
    const json& h = obj["hardwired"];
    if (h.is_string() && h.get<std::string>() == "hart_id")
      mc.hardwire_hart_id = true;
    else
      mc.hardwired = as_u64(h, path + ".hardwired");
  }
  if (obj.contains("hardwire_hart_id"))
    mc.hardwire_hart_id = as_bool(obj["hardwire_hart_id"], path + ".hardwire_hart_id");
  if ((mc.writable_mask & (mc.writable_mask + 1)) != 0)
    fail(path + ".writable_mask", "writable bits must be contiguous from bit 0");
  return mc;
}

WorkloadSpec parse_workload(const json& obj, const std::string& path,
                            unsigned harts) {
  expect_known(obj, path,
               {"processes", "pages_per_hart", "shared_fraction", "asid_policy",
                "pattern", "length", "burst", "store_fraction", "migrate_prob",
                "seed", "script"});
  WorkloadSpec spec;
  spec.harts = harts;
  if (obj.contains("processes"))
    spec.processes = static_cast<unsigned>(as_u64(obj["processes"], path + ".processes"));
  if (obj.contains("pages_per_hart"))
    spec.pages_per_hart = as_u64(obj["pages_per_hart"], path + ".pages_per_hart");
  if (obj.contains("shared_fraction")) {
    spec.shared_fraction = as_double(obj["shared_fraction"], path + ".shared_fraction");
    if (spec.shared_fraction < 0.0 || spec.shared_fraction > 1.0)
      fail(path + ".shared_fraction", "must be within [0, 1]");
  }
  if (obj.contains("asid_policy"))
    spec.asid_policy = parse_asid_policy(
        as_string(obj["asid_policy"], path + ".asid_policy"), path + ".asid_policy");
  if (obj.contains("pattern")) {
    const json& p = obj["pattern"];
    const std::string ppath = path + ".pattern";
    expect_known(p, ppath, {"kind", "stride", "zipf_s"});
    if (p.contains("kind"))
      spec.pattern.kind =
          parse_pattern_kind(as_string(p["kind"], ppath + ".kind"), ppath + ".kind");
    if (p.contains("stride"))
      spec.pattern.stride = as_u64(p["stride"], ppath + ".stride");
    if (p.contains("zipf_s"))
      spec.pattern.zipf_s = as_double(p["zipf_s"], ppath + ".zipf_s");
  }
  if (obj.contains("length")) spec.length = as_u64(obj["length"], path + ".length");
  if (obj.contains("burst")) spec.burst = as_u64(obj["burst"], path + ".burst");
  if (obj.contains("store_fraction"))
    spec.store_fraction = as_double(obj["store_fraction"], path + ".store_fraction");
  if (obj.contains("migrate_prob"))
    spec.migrate_prob = as_double(obj["migrate_prob"], path + ".migrate_prob");
  if (obj.contains("seed")) spec.seed = as_u64(obj["seed"], path + ".seed");
  if (obj.contains("script")) {
    const json& arr = obj["script"];
    if (!arr.is_array()) fail(path + ".script", "expected an array");
    for (size_t i = 0; i < arr.size(); ++i) {
      const std::string spath = path + ".script[" + std::to_string(i) + "]";
      const json& e = arr[i];
      expect_known(e, spath, {"at", "hart", "action"});
      ScriptEvent ev;
      if (e.contains("at")) ev.at_index = as_u64(e["at"], spath + ".at");
      if (e.contains("hart"))
        ev.hart = static_cast<uint16_t>(as_u64(e["hart"], spath + ".hart"));
      if (!e.contains("action")) fail(spath + ".action", "required");
      ev.action = parse_action(as_string(e["action"], spath + ".action"),
                               spath + ".action");
      spec.script.push_back(ev);
    }
  }
  return spec;
}

}  // namespace

uint64_t RunConfig::l2_total() const {
  switch (system.topology.kind) {
    case Topology::Kind::L1Only: return 0;
    case Topology::Kind::PrivateL2: return l2_per_core;
    default: return l2_per_core * system.harts;
  }
}

void RunConfig::apply_l2_size() {
  if (system.topology.kind != Topology::Kind::L1Only)
    system.topology.l2.total_entries = l2_total();
}

RunConfig parse_run_config(const std::string& json_text) {
  RunConfig config;
  if (json_text.empty()) {
    config.apply_l2_size();
    return config;
  }

  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    fail("<document>", std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) fail("<document>", "expected a JSON object");

  expect_known(doc, "",
               {"harts", "mode", "l1", "l1i", "l1d", "ideal_l1", "topology",
                "walk", "impl_defined_share", "masi", "vmid", "workload",
                "validators", "threads", "trace", "report", "csv"});

  if (doc.contains("harts")) {
    config.system.harts = static_cast<unsigned>(as_u64(doc["harts"], "harts"));
    if (config.system.harts == 0) fail("harts", "must be at least 1");
  }
  if (doc.contains("mode"))
    config.system.mode = parse_mode(as_string(doc["mode"], "mode"), "mode");

  if (doc.contains("l1")) {
    config.system.l1i = parse_geometry(doc["l1"], "l1", config.system.l1i);
    config.system.l1d = config.system.l1i;
  }
  if (doc.contains("l1i"))
    config.system.l1i = parse_geometry(doc["l1i"], "l1i", config.system.l1i);
  if (doc.contains("l1d"))
    config.system.l1d = parse_geometry(doc["l1d"], "l1d", config.system.l1d);
  if (doc.contains("ideal_l1"))
    config.system.ideal_l1 = as_bool(doc["ideal_l1"], "ideal_l1");

  if (doc.contains("topology")) {
    const json& t = doc["topology"];
    expect_known(t, "topology",
                 {"kind", "hart_tagged", "l2_entries_per_core", "l2_ways",
                  "l2_policy", "l2_seed"});
    if (t.contains("kind"))
      config.system.topology.kind = parse_topology_kind(
          as_string(t["kind"], "topology.kind"), "topology.kind");
    if (t.contains("hart_tagged"))
      config.system.topology.hart_tagged =
          as_bool(t["hart_tagged"], "topology.hart_tagged");
    if (t.contains("l2_entries_per_core"))
      config.l2_per_core = as_u64(t["l2_entries_per_core"], "topology.l2_entries_per_core");
    if (t.contains("l2_ways"))
      config.system.topology.l2.ways = as_u64(t["l2_ways"], "topology.l2_ways");
    if (t.contains("l2_policy")) {
      const std::string p = as_string(t["l2_policy"], "topology.l2_policy");
      if (p == "fifo")
        config.system.topology.l2.policy = TlbGeometry::Policy::Fifo;
      else if (p == "random")
        config.system.topology.l2.policy = TlbGeometry::Policy::Random;
      else
        fail("topology.l2_policy", "expected fifo or random");
    }
    if (t.contains("l2_seed"))
      config.system.topology.l2.seed = as_u64(t["l2_seed"], "topology.l2_seed");
  }

  if (doc.contains("walk")) {
    const json& w = doc["walk"];
    expect_known(w, "walk", {"update_ad", "cache_invalid", "cache_nonwritable"});
    if (w.contains("update_ad"))
      config.system.walk.update_ad = as_bool(w["update_ad"], "walk.update_ad");
    if (w.contains("cache_invalid"))
      config.system.walk.cache_invalid =
          as_bool(w["cache_invalid"], "walk.cache_invalid");
    if (w.contains("cache_nonwritable"))
      config.system.walk.cache_nonwritable =
          as_bool(w["cache_nonwritable"], "walk.cache_nonwritable");
  }

  if (doc.contains("impl_defined_share"))
    config.system.impl_defined_share =
        as_bool(doc["impl_defined_share"], "impl_defined_share");

  if (doc.contains("masi")) {
    const json& m = doc["masi"];
    if (m.is_array()) {
      for (size_t i = 0; i < m.size(); ++i)
        config.system.masi.push_back(
            parse_masi(m[i], "masi[" + std::to_string(i) + "]"));
    } else {
      const MasiConfig mc = parse_masi(m, "masi");
      config.system.masi.assign(config.system.harts, mc);
    }
  }
  if (doc.contains("vmid")) {
    const json& v = doc["vmid"];
    if (v.is_array()) {
      for (size_t i = 0; i < v.size(); ++i)
        config.system.vmid.push_back(as_u64(v[i], "vmid[" + std::to_string(i) + "]"));
    } else {
      config.system.vmid.assign(config.system.harts, as_u64(v, "vmid"));
    }
  }

  if (doc.contains("workload"))
    config.workload = parse_workload(doc["workload"], "workload", config.system.harts);
  config.workload.harts = config.system.harts;

  if (doc.contains("validators"))
    config.validators = as_bool(doc["validators"], "validators");
  if (doc.contains("threads")) config.threads = as_bool(doc["threads"], "threads");
  if (doc.contains("trace")) config.trace_path = as_string(doc["trace"], "trace");
  if (doc.contains("report")) config.report_path = as_string(doc["report"], "report");
  if (doc.contains("csv")) config.csv_path = as_string(doc["csv"], "csv");

  config.apply_l2_size();
  return config;
}

RunConfig load_run_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str());
}

const char* to_string(AsidPolicy policy) {
  switch (policy) {
    case AsidPolicy::AllZero: return "all_zero";
    case AsidPolicy::PerProcess: return "per_process";
    case AsidPolicy::PerHart: return "per_hart";
  }
  return "?";
}

const char* to_string(AccessPattern::Kind kind) {
  switch (kind) {
    case AccessPattern::Kind::UniformRandom: return "uniform";
    case AccessPattern::Kind::Loop: return "loop";
    case AccessPattern::Kind::Zipf: return "zipf";
  }
  return "?";
}

const char* to_string(ScriptAction action) {
  switch (action) {
    case ScriptAction::MapNewPage: return "map_new_page";
    case ScriptAction::DemandPage: return "demand_page";
    case ScriptAction::CowUpgrade: return "cow_upgrade";
    case ScriptAction::ProtectDowngrade: return "protect_downgrade";
    case ScriptAction::RemapPage: return "remap_page";
    case ScriptAction::AsidRoll: return "asid_roll";
  }
  return "?";
}

std::string run_config_to_json(const RunConfig& config) {
  json script = json::array();
  for (const ScriptEvent& ev : config.workload.script) {
    script.push_back(json{{"at", ev.at_index},
                          {"hart", ev.hart},
                          {"action", to_string(ev.action)}});
  }
  json masi = json::array();
  for (const MasiConfig& mc : config.system.masi) {
    masi.push_back(json{{"writable_mask", mc.writable_mask},
                        {"hardwired", mc.hardwired},
                        {"hardwire_hart_id", mc.hardwire_hart_id}});
  }
  auto geometry = [](const TlbGeometry& g) {
    return json{{"entries", g.total_entries},
                {"ways", g.ways},
                {"policy", g.policy == TlbGeometry::Policy::Fifo ? "fifo" : "random"},
                {"seed", g.seed}};
  };

  json doc{
      {"harts", config.system.harts},
      {"mode", to_string(config.system.mode)},
      {"l1i", geometry(config.system.l1i)},
      {"l1d", geometry(config.system.l1d)},
      {"ideal_l1", config.system.ideal_l1},
      {"topology",
       {{"kind", to_string(config.system.topology.kind)},
        {"hart_tagged", config.system.topology.hart_tagged},
        {"l2_entries_per_core", config.l2_per_core},
        {"l2_ways", config.system.topology.l2.ways},
        {"l2_policy",
         config.system.topology.l2.policy == TlbGeometry::Policy::Fifo ? "fifo"
                                                                       : "random"},
        {"l2_seed", config.system.topology.l2.seed}}},
      {"walk",
       {{"update_ad", config.system.walk.update_ad},
        {"cache_invalid", config.system.walk.cache_invalid},
        {"cache_nonwritable", config.system.walk.cache_nonwritable}}},
      {"impl_defined_share", config.system.impl_defined_share},
      {"masi", masi},
      {"vmid", config.system.vmid},
      {"workload",
       {{"processes", config.workload.processes},
        {"pages_per_hart", config.workload.pages_per_hart},
        {"shared_fraction", config.workload.shared_fraction},
        {"asid_policy", to_string(config.workload.asid_policy)},
        {"pattern",
         {{"kind", to_string(config.workload.pattern.kind)},
          {"stride", config.workload.pattern.stride},
          {"zipf_s", config.workload.pattern.zipf_s}}},
        {"length", config.workload.length},
        {"burst", config.workload.burst},
        {"store_fraction", config.workload.store_fraction},
        {"migrate_prob", config.workload.migrate_prob},
        {"seed", config.workload.seed},
        {"script", script}}},
      {"validators", config.validators},
      {"threads", config.threads},
      {"trace", config.trace_path},
      {"report", config.report_path},
      {"csv", config.csv_path},
  };
  return doc.dump(2) + "\n";
}

}  // namespace rvtlb
