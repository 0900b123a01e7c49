// Copyright 2026 The taskbench Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef TASKBENCH_MEASURE_ENV_HPP
#define TASKBENCH_MEASURE_ENV_HPP

#include <cstdlib>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace taskbench::measure {

//! Environment toggles for the measurement layer. Precedence is
//! CLI flag > environment > built-in default; callers apply that by
//! consulting these optionals only where no flag was given.
//!
//!   TASKBENCH_MEASURE=0|1           measurement on/off
//!   TASKBENCH_SAMPLE_PERIOD_MS=<n>  sampler period
//!   TASKBENCH_COUNTERS=a,b,c        counter series to record
//!   TASKBENCH_TRACE=0|1             trace writing on/off
struct MeasureEnv {
  std::optional<bool> measure;
  std::optional<int> sample_period_ms;
  std::optional<std::vector<std::string>> counters;
  std::optional<bool> trace;

  using Getenv = std::function<const char*(const char*)>;

  static MeasureEnv from_env(const Getenv& getv = default_getenv) {
    MeasureEnv e;
    if (const char* v = getv("TASKBENCH_MEASURE")) e.measure = truthy(v);
    if (const char* v = getv("TASKBENCH_SAMPLE_PERIOD_MS")) {
      try {
        e.sample_period_ms = std::stoi(v);
      } catch (...) {
      }
    }
    if (const char* v = getv("TASKBENCH_COUNTERS")) e.counters = split(v);
    if (const char* v = getv("TASKBENCH_TRACE")) e.trace = truthy(v);
    return e;
  }

  static const char* default_getenv(const char* name) {
    return std::getenv(name);
  }

 private:
  static bool truthy(const std::string& v) {
    return !(v == "0" || v == "false" || v == "off" || v.empty());
  }

  static std::vector<std::string> split(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ','))
      if (!item.empty()) out.push_back(item);
    return out;
  }
};

}  // namespace taskbench::measure

#endif  // TASKBENCH_MEASURE_ENV_HPP
