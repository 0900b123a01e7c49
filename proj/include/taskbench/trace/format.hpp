// Copyright 2026 The taskbench Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef TASKBENCH_TRACE_FORMAT_HPP
#define TASKBENCH_TRACE_FORMAT_HPP

#include <json.hpp>

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "taskbench/common.hpp"
#include "taskbench/measure/record.hpp"

namespace taskbench::trace {

using json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

//! First line of every trace: run configuration echo plus the declared
//! counter series. `workload` is an opaque object owned by the producer.
struct TraceMeta {
  int schema = kSchemaVersion;
  std::string backend;
  unsigned workers = 0;
  bool steal = true;
  std::uint64_t seed = 0;
  json workload = json::object();
  std::vector<measure::CounterKindInfo> counters;
};

using TraceRecord = std::variant<measure::TimerRecord, measure::CounterSample>;

//! Canonical serialization: one JSON object per line, fixed key order,
//! no pretty printing. The writer and the re-serializer share these
//! functions, which is what makes read-then-rewrite byte-identical.
inline std::string to_line(const TraceMeta& m) {
  json j;
  j["kind"] = "meta";
  j["schema"] = m.schema;
  j["backend"] = m.backend;
  j["workers"] = m.workers;
  j["steal"] = m.steal;
  j["seed"] = m.seed;
  j["workload"] = m.workload;
  json counters = json::array();
  for (auto& k : m.counters) {
    json c;
    c["name"] = k.name;
    c["unit"] = k.unit;
    c["monotonic"] = k.monotonic;
    counters.push_back(c);
  }
  j["counters"] = counters;
  return j.dump();
}

inline std::string to_line(const measure::TimerRecord& r) {
  json j;
  j["kind"] = "task";
  j["guid"] = r.guid;
  j["parent"] = r.parent_guid;
  j["annotation"] = r.annotation;
  j["worker"] = r.worker;
  j["start_ns"] = r.start_ns;
  j["stop_ns"] = r.stop_ns;
  json ys = json::array();
  for (auto& [out, in] : r.yields) ys.push_back(json::array({out, in}));
  j["yields"] = ys;
  return j.dump();
}

inline std::string to_line(const measure::CounterSample& s) {
  json j;
  j["kind"] = "counter";
  j["name"] = s.name;
  j["t_ns"] = s.t_ns;
  j["value"] = s.value;
  return j.dump();
}

inline std::string to_line(const TraceRecord& r) {
  return std::visit([](auto& v) { return to_line(v); }, r);
}

namespace detail {

inline bool get_u64(const json& j, const char* key, std::uint64_t& out) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_number_unsigned()) return false;
  out = it->get<std::uint64_t>();
  return true;
}

}  // namespace detail

//! Strict single-line parsers; throw TraceError on malformed records.
inline TraceMeta parse_meta(const json& j) {
  TraceMeta m;
  if (!j.contains("schema") || !j["schema"].is_number_integer())
    throw TraceError("meta: missing schema");
  m.schema = j["schema"].get<int>();
  if (m.schema != kSchemaVersion)
    throw TraceError("meta: unsupported schema " + std::to_string(m.schema));
  if (!j.contains("backend") || !j["backend"].is_string())
    throw TraceError("meta: missing backend");
  m.backend = j["backend"].get<std::string>();
  if (!j.contains("workers") || !j["workers"].is_number_unsigned())
    throw TraceError("meta: missing workers");
  m.workers = j["workers"].get<unsigned>();
  if (!j.contains("steal") || !j["steal"].is_boolean())
    throw TraceError("meta: missing steal");
  m.steal = j["steal"].get<bool>();
  std::uint64_t seed = 0;
  if (!detail::get_u64(j, "seed", seed)) throw TraceError("meta: missing seed");
  m.seed = seed;
  if (j.contains("workload")) m.workload = j["workload"];
  if (j.contains("counters")) {
    if (!j["counters"].is_array()) throw TraceError("meta: counters not array");
    for (auto& c : j["counters"]) {
      measure::CounterKindInfo k;
      if (!c.contains("name") || !c["name"].is_string())
        throw TraceError("meta: counter without name");
      k.name = c["name"].get<std::string>();
      k.unit = c.value("unit", std::string{});
      k.monotonic = c.value("monotonic", false);
      m.counters.push_back(std::move(k));
    }
  }
  return m;
}

inline measure::TimerRecord parse_task(const json& j) {
  measure::TimerRecord r;
  std::uint64_t v = 0;
  if (!detail::get_u64(j, "guid", v) || v == 0)
    throw TraceError("task: bad guid");
  r.guid = v;
  auto pit = j.find("parent");
  if (pit == j.end() || !pit->is_number_unsigned())
    throw TraceError("task: bad parent");
  r.parent_guid = pit->get<std::uint64_t>();
  auto ait = j.find("annotation");
  if (ait == j.end() || !ait->is_string())
    throw TraceError("task: bad annotation");
  r.annotation = ait->get<std::string>();
  auto wit = j.find("worker");
  if (wit == j.end() || !wit->is_number_integer())
    throw TraceError("task: bad worker");
  r.worker = wit->get<int>();
  if (!detail::get_u64(j, "start_ns", r.start_ns))
    throw TraceError("task: bad start_ns");
  if (!detail::get_u64(j, "stop_ns", r.stop_ns))
    throw TraceError("task: bad stop_ns");
  auto yit = j.find("yields");
  if (yit == j.end() || !yit->is_array()) throw TraceError("task: bad yields");
  for (auto& y : *yit) {
    if (!y.is_array() || y.size() != 2 || !y[0].is_number_unsigned() ||
        !y[1].is_number_unsigned())
      throw TraceError("task: bad yield interval");
    r.yields.emplace_back(y[0].get<std::uint64_t>(),
                          y[1].get<std::uint64_t>());
  }
  return r;
}

inline measure::CounterSample parse_counter(const json& j) {
  measure::CounterSample s;
  auto nit = j.find("name");
  if (nit == j.end() || !nit->is_string())
    throw TraceError("counter: bad name");
  s.name = nit->get<std::string>();
  if (!detail::get_u64(j, "t_ns", s.t_ns))
    throw TraceError("counter: bad t_ns");
  auto vit = j.find("value");
  if (vit == j.end() || !vit->is_number())
    throw TraceError("counter: bad value");
  s.value = vit->get<double>();
  return s;
}

}  // namespace taskbench::trace

#endif  // TASKBENCH_TRACE_FORMAT_HPP
