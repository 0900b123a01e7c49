// Copyright 2026 The taskbench Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef TASKBENCH_TRACE_CHROME_HPP
#define TASKBENCH_TRACE_CHROME_HPP

#include <filesystem>
#include <fstream>
#include <ostream>

#include "taskbench/trace/format.hpp"
#include "taskbench/trace/reader.hpp"

namespace taskbench::trace {

//! Converts a parsed trace to the chrome://tracing / Perfetto JSON
//! format: one lane (tid) per worker carrying complete "X" duration
//! events per task, nested "active" slices for the segments between
//! yields, and one "C" counter track per declared series. Timestamps
//! are microseconds as the format requires.
inline void export_chrome(const TraceData& data, std::ostream& os) {
  json root;
  root["displayTimeUnit"] = "ms";
  json events = json::array();

  {
    json pm;
    pm["name"] = "process_name";
    pm["ph"] = "M";
    pm["pid"] = 1;
    pm["args"] = json{{"name", data.meta.backend + " run"}};
    events.push_back(pm);
  }
  for (unsigned w = 0; w < data.meta.workers; ++w) {
    json tm;
    tm["name"] = "thread_name";
    tm["ph"] = "M";
    tm["pid"] = 1;
    tm["tid"] = w;
    tm["args"] = json{{"name", "worker " + std::to_string(w)}};
    events.push_back(tm);
  }

  for (auto& r : data.records) {
    if (auto* t = std::get_if<measure::TimerRecord>(&r)) {
      int tid = t->worker >= 0 ? t->worker : static_cast<int>(data.meta.workers);
      json e;
      e["name"] = t->annotation.empty() ? "(unnamed)" : t->annotation;
      e["ph"] = "X";
      e["pid"] = 1;
      e["tid"] = tid;
      e["ts"] = static_cast<double>(t->start_ns) / 1000.0;
      e["dur"] = static_cast<double>(t->stop_ns - t->start_ns) / 1000.0;
      e["args"] = json{{"guid", t->guid}, {"parent", t->parent_guid}};
      events.push_back(e);
      if (!t->yields.empty()) {
        std::uint64_t seg_start = t->start_ns;
        auto emit_active = [&](std::uint64_t a, std::uint64_t b) {
          if (b <= a) return;
          json s;
          s["name"] = "active";
          s["ph"] = "X";
          s["pid"] = 1;
          s["tid"] = tid;
          s["ts"] = static_cast<double>(a) / 1000.0;
          s["dur"] = static_cast<double>(b - a) / 1000.0;
          s["args"] = json{{"guid", t->guid}};
          events.push_back(s);
        };
        for (auto& [out, in] : t->yields) {
          emit_active(seg_start, out);
          seg_start = in;
        }
        emit_active(seg_start, t->stop_ns);
      }
    } else {
      auto& s = std::get<measure::CounterSample>(r);
      json e;
      e["name"] = s.name;
      e["ph"] = "C";
      e["pid"] = 1;
      e["ts"] = static_cast<double>(s.t_ns) / 1000.0;
      e["args"] = json{{"value", s.value}};
      events.push_back(e);
    }
  }

  root["traceEvents"] = events;
  os << root.dump();
}

inline void export_chrome_file(const TraceData& data,
                               const std::filesystem::path& p) {
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  if (!f) throw TraceError("cannot open chrome trace file " + p.string());
  export_chrome(data, f);
  f.flush();
  if (!f) throw TraceError("write failed for " + p.string());
}

}  // namespace taskbench::trace

#endif  // TASKBENCH_TRACE_CHROME_HPP
