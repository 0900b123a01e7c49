// Copyright 2026 The taskbench Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef TASKBENCH_MEASURE_RECORD_HPP
#define TASKBENCH_MEASURE_RECORD_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "taskbench/common.hpp"

namespace taskbench::measure {

//! Closed per-task timer. `yields` holds [out, back-in) intervals, in
//! order, all inside [start_ns, stop_ns]. Inclusive time is stop-start;
//! active time subtracts the yield gaps.
struct TimerRecord {
  Guid guid = 0;
  Guid parent_guid = 0;
  std::string annotation;
  int worker = -1;  // worker that first started the task
  std::uint64_t start_ns = 0;
  std::uint64_t stop_ns = 0;
  std::vector<std::pair<std::uint64_t, std::uint64_t>> yields;

  std::uint64_t inclusive_ns() const { return stop_ns - start_ns; }

  std::uint64_t active_ns() const {
    std::uint64_t gaps = 0;
    for (auto& [out, in] : yields) gaps += in - out;
    return inclusive_ns() - gaps;
  }
};

struct CounterSample {
  std::string name;
  std::uint64_t t_ns = 0;
  double value = 0.0;
};

struct CounterKindInfo {
  std::string name;
  std::string unit;
  bool monotonic = false;
};

}  // namespace taskbench::measure

#endif  // TASKBENCH_MEASURE_RECORD_HPP
