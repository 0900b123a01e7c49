// Copyright 2026 The taskbench Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef TASKBENCH_TRACE_READER_HPP
#define TASKBENCH_TRACE_READER_HPP

#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "taskbench/trace/format.hpp"

namespace taskbench::trace {

struct MalformedLine {
  std::size_t line_no = 0;  // 1-based
  std::string reason;
};

//! Parsed trace. Record order mirrors file order; `tail_discarded` is
//! set when the final line failed to parse (a torn write from a crashed
//! producer), which is recoverable and not a validation violation.
struct TraceData {
  TraceMeta meta;
  std::vector<TraceRecord> records;
  std::vector<MalformedLine> malformed;
  bool tail_discarded = false;

  void serialize(std::ostream& os) const {
    os << to_line(meta) << '\n';
    for (auto& r : records) os << to_line(r) << '\n';
  }

  std::string serialize() const {
    std::ostringstream ss;
    serialize(ss);
    return ss.str();
  }
};

//! Reads a JSON-lines trace. The first line must be a valid meta record
//! (TraceError otherwise; without it nothing else is interpretable).
//! Later unparseable lines are collected per line, except a bad final
//! line, which is counted as a discarded tail.
inline TraceData read_trace(std::istream& is) {
  TraceData data;
  std::string line;
  std::size_t line_no = 0;
  bool have_meta = false;
  std::vector<MalformedLine> bad;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    bool ok = !j.is_discarded() && j.is_object() && j.contains("kind") &&
              j["kind"].is_string();
    if (!have_meta) {
      if (!ok || j["kind"].get<std::string>() != "meta")
        throw TraceError("trace does not begin with a meta record");
      data.meta = parse_meta(j);  // throws on malformed meta
      have_meta = true;
      continue;
    }
    if (!ok) {
      bad.push_back({line_no, "unparseable line"});
      continue;
    }
    std::string kind = j["kind"].get<std::string>();
    try {
      if (kind == "task")
        data.records.emplace_back(parse_task(j));
      else if (kind == "counter")
        data.records.emplace_back(parse_counter(j));
      else
        bad.push_back({line_no, "unknown kind: " + kind});
    } catch (const TraceError& e) {
      bad.push_back({line_no, e.what()});
    }
  }
  if (!have_meta) throw TraceError("empty trace: no meta record");
  // A single bad line at the very end is a torn tail, not corruption.
  if (!bad.empty() && bad.back().line_no == line_no) {
    data.tail_discarded = true;
    bad.pop_back();
  }
  data.malformed = std::move(bad);
  return data;
}

inline TraceData read_trace_file(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw TraceError("cannot open trace file " + p.string());
  return read_trace(f);
}

struct Violation {
  std::string category;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;
  std::size_t discarded_lines = 0;
  std::size_t task_records = 0;
  std::size_t counter_records = 0;

  bool clean() const { return violations.empty(); }

  void render(std::ostream& os) const {
    os << "task records:    " << task_records << "\n"
       << "counter records: " << counter_records << "\n"
       << "discarded tail:  " << discarded_lines << "\n"
       << "violations:      " << violations.size() << "\n";
    for (auto& v : violations)
      os << "  [" << v.category << "] " << v.message << "\n";
  }
};

//! Structural validation of a parsed trace:
//!  - guids unique and nonzero
//!  - lineage: every nonzero parent names a task in the trace that
//!    started no later than the child
//!  - intervals: start <= stop, yields ordered, disjoint, inside the
//!    task's span
//!  - counters: every series declared in the meta; per-series timestamps
//!    non-decreasing; series declared monotonic never decrease
//!  - malformed mid-file lines reported as violations
inline ValidationReport validate(const TraceData& data) {
  ValidationReport rep;
  rep.discarded_lines = data.tail_discarded ? 1 : 0;

  for (auto& m : data.malformed)
    rep.violations.push_back(
        {"malformed", "line " + std::to_string(m.line_no) + ": " + m.reason});

  std::unordered_map<Guid, const measure::TimerRecord*> tasks;
  for (auto& r : data.records) {
    if (auto* t = std::get_if<measure::TimerRecord>(&r)) {
      ++rep.task_records;
      if (t->guid == 0) {
        rep.violations.push_back({"guid", "task with guid 0"});
        continue;
      }
      auto [it, inserted] = tasks.emplace(t->guid, t);
      if (!inserted)
        rep.violations.push_back(
            {"guid", "duplicate guid " + std::to_string(t->guid)});
    } else {
      ++rep.counter_records;
    }
  }

  for (auto& [guid, t] : tasks) {
    if (t->stop_ns < t->start_ns)
      rep.violations.push_back(
          {"interval", "task " + std::to_string(guid) + ": stop before start"});
    std::uint64_t cursor = t->start_ns;
    for (auto& [out, in] : t->yields) {
      if (out < cursor || in < out || in > t->stop_ns) {
        rep.violations.push_back(
            {"interval",
             "task " + std::to_string(guid) + ": bad yield interval"});
        break;
      }
      cursor = in;
    }
    if (t->parent_guid != 0) {
      auto pit = tasks.find(t->parent_guid);
      if (pit == tasks.end()) {
        rep.violations.push_back(
            {"lineage", "task " + std::to_string(guid) + ": parent " +
                            std::to_string(t->parent_guid) + " not in trace"});
      } else if (pit->second->start_ns > t->start_ns) {
        rep.violations.push_back(
            {"lineage", "task " + std::to_string(guid) +
                            ": started before its parent"});
      }
    }
  }

  std::set<std::string> declared;
  std::map<std::string, bool> monotonic;
  for (auto& k : data.meta.counters) {
    declared.insert(k.name);
    monotonic[k.name] = k.monotonic;
  }
  struct SeriesState {
    std::uint64_t last_t = 0;
    double last_v = 0;
    bool seen = false;
  };
  std::map<std::string, SeriesState> series;
  for (auto& r : data.records) {
    auto* s = std::get_if<measure::CounterSample>(&r);
    if (!s) continue;
    if (!declared.count(s->name)) {
      rep.violations.push_back(
          {"counter", "undeclared series " + s->name});
      continue;
    }
    SeriesState& st = series[s->name];
    if (st.seen && s->t_ns < st.last_t)
      rep.violations.push_back(
          {"counter", "series " + s->name + ": timestamps not monotonic"});
    if (st.seen && monotonic[s->name] && s->value < st.last_v)
      rep.violations.push_back(
          {"counter", "monotonic series " + s->name + " decreased"});
    st.last_t = s->t_ns;
    st.last_v = s->value;
    st.seen = true;
  }

  return rep;
}

}  // namespace taskbench::trace

#endif  // TASKBENCH_TRACE_READER_HPP
