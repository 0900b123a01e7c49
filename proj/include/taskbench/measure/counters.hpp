// Copyright 2026 The taskbench Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef TASKBENCH_MEASURE_COUNTERS_HPP
#define TASKBENCH_MEASURE_COUNTERS_HPP

#include <sys/resource.h>
#include <time.h>
#include <unistd.h>

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include "taskbench/executor.hpp"
#include "taskbench/measure/record.hpp"

namespace taskbench::measure {

//! Third-person sampling source. `prime` establishes the baseline for
//! interval-based series; `sample` appends one value per declared kind.
//! Sources only read cheap process or scheduler state and never block
//! worker progress.
class CounterSource {
 public:
  virtual ~CounterSource() = default;
  virtual std::vector<CounterKindInfo> kinds() const = 0;
  virtual void prime(std::uint64_t t_ns) { (void)t_ns; }
  virtual void sample(std::uint64_t t_ns, std::vector<CounterSample>& out) = 0;
};

//! Process-wide context switches, cumulative, via getrusage(RUSAGE_SELF).
//! (/proc/self/status would count the main thread only.)
class CtxSwitchSource final : public CounterSource {
 public:
  std::vector<CounterKindInfo> kinds() const override {
    return {{"context_switches_voluntary", "count", true},
            {"context_switches_involuntary", "count", true}};
  }

  void sample(std::uint64_t t_ns, std::vector<CounterSample>& out) override {
    struct rusage ru{};
    getrusage(RUSAGE_SELF, &ru);
    out.push_back({"context_switches_voluntary", t_ns,
                   static_cast<double>(ru.ru_nvcsw)});
    out.push_back({"context_switches_involuntary", t_ns,
                   static_cast<double>(ru.ru_nivcsw)});
  }
};

//! Resident set size in bytes from /proc/self/statm.
class RssSource final : public CounterSource {
 public:
  std::vector<CounterKindInfo> kinds() const override {
    return {{"process_memory_rss", "bytes", false}};
  }

  void sample(std::uint64_t t_ns, std::vector<CounterSample>& out) override {
    long rss_pages = 0;
    if (FILE* f = std::fopen("/proc/self/statm", "r")) {
      long total = 0;
      if (std::fscanf(f, "%ld %ld", &total, &rss_pages) != 2) rss_pages = 0;
      std::fclose(f);
    }
    out.push_back({"process_memory_rss", t_ns,
                   static_cast<double>(rss_pages) *
                       static_cast<double>(sysconf(_SC_PAGESIZE))});
  }
};

//! Process CPU time over wall time for the last interval, in percent
//! (can exceed 100 with multiple workers).
class CpuUtilSource final : public CounterSource {
 public:
  std::vector<CounterKindInfo> kinds() const override {
    return {{"cpu_utilization", "percent", false}};
  }

  void prime(std::uint64_t t_ns) override {
    prev_wall_ns_ = t_ns;
    prev_cpu_ns_ = cpu_ns();
  }

  void sample(std::uint64_t t_ns, std::vector<CounterSample>& out) override {
    std::uint64_t cpu = cpu_ns();
    double pct = 0.0;
    if (t_ns > prev_wall_ns_)
      pct = 100.0 * static_cast<double>(cpu - prev_cpu_ns_) /
            static_cast<double>(t_ns - prev_wall_ns_);
    prev_wall_ns_ = t_ns;
    prev_cpu_ns_ = cpu;
    out.push_back({"cpu_utilization", t_ns, pct});
  }

 private:
  static std::uint64_t cpu_ns() {
    struct timespec ts{};
    clock_gettime(CLOCK_PROCESS_CPUTIME_ID, &ts);
    return static_cast<std::uint64_t>(ts.tv_sec) * 1000000000ull +
           static_cast<std::uint64_t>(ts.tv_nsec);
  }

  std::uint64_t prev_wall_ns_ = 0;
  std::uint64_t prev_cpu_ns_ = 0;
};

//! Ready tasks averaged across worker queues at the sampling instant.
class QueueLengthSource final : public CounterSource {
 public:
  explicit QueueLengthSource(const Executor& e) : exec_(&e) {}

  std::vector<CounterKindInfo> kinds() const override {
    return {{"scheduler_queue_length", "tasks", false}};
  }

  void sample(std::uint64_t t_ns, std::vector<CounterSample>& out) override {
    auto lens = exec_->ready_queue_lengths();
    double sum = 0;
    for (auto n : lens) sum += static_cast<double>(n);
    out.push_back({"scheduler_queue_length", t_ns,
                   lens.empty() ? 0.0 : sum / lens.size()});
  }

 private:
  const Executor* exec_;
};

//! Fraction of the last interval each worker spent without a task,
//! averaged across workers, in units of 0.01% (10000 = fully idle).
//! Busy fractions are clamped so a saturated interval reads exactly 0
//! and an empty one exactly 10000.
class IdleRateSource final : public CounterSource {
 public:
  explicit IdleRateSource(const Executor& e) : exec_(&e) {}

  std::vector<CounterKindInfo> kinds() const override {
    return {{"scheduler_idle_rate", "0.01%", false}};
  }

  void prime(std::uint64_t t_ns) override {
    prev_wall_ns_ = t_ns;
    prev_busy_ = exec_->busy_ns_until(t_ns);
  }

  void sample(std::uint64_t t_ns, std::vector<CounterSample>& out) override {
    auto busy = exec_->busy_ns_until(t_ns);
    double acc = 0.0;
    std::size_t n = busy.size();
    if (prev_busy_.size() != n) prev_busy_.assign(n, 0);
    double wall = static_cast<double>(t_ns - prev_wall_ns_);
    for (std::size_t w = 0; w < n; ++w) {
      double d = static_cast<double>(busy[w] - prev_busy_[w]);
      double frac = wall > 0 ? d / wall : 1.0;
      frac = std::clamp(frac, 0.0, 1.0);
      acc += 10000.0 * (1.0 - frac);
    }
    prev_wall_ns_ = t_ns;
    prev_busy_ = busy;
    out.push_back(
        {"scheduler_idle_rate", t_ns, n ? acc / static_cast<double>(n) : 0.0});
  }

 private:
  const Executor* exec_;
  std::uint64_t prev_wall_ns_ = 0;
  std::vector<std::uint64_t> prev_busy_;
};

class StealsSource final : public CounterSource {
 public:
  explicit StealsSource(const Executor& e) : exec_(&e) {}

  std::vector<CounterKindInfo> kinds() const override {
    return {{"steals_total", "count", true}};
  }

  void sample(std::uint64_t t_ns, std::vector<CounterSample>& out) override {
    out.push_back({"steals_total", t_ns,
                   static_cast<double>(exec_->steals_total())});
  }

 private:
  const Executor* exec_;
};

inline std::vector<std::string> default_counter_names() {
  return {"context_switches_voluntary", "context_switches_involuntary",
          "process_memory_rss",         "cpu_utilization",
          "scheduler_queue_length",     "scheduler_idle_rate",
          "steals_total"};
}

//! Builds sources for the requested series names. Scheduler-backed
//! series need `exec`; unknown names are configuration errors.
inline std::vector<std::unique_ptr<CounterSource>> make_counter_sources(
    const std::vector<std::string>& names, const Executor* exec) {
  std::vector<std::unique_ptr<CounterSource>> out;
  bool ctx_done = false;
  for (auto& n : names) {
    if (n == "context_switches_voluntary" ||
        n == "context_switches_involuntary") {
      if (!ctx_done) out.push_back(std::make_unique<CtxSwitchSource>());
      ctx_done = true;
    } else if (n == "process_memory_rss") {
      out.push_back(std::make_unique<RssSource>());
    } else if (n == "cpu_utilization") {
      out.push_back(std::make_unique<CpuUtilSource>());
    } else if (n == "scheduler_queue_length") {
      if (!exec) throw ConfigError("scheduler_queue_length needs an executor");
      out.push_back(std::make_unique<QueueLengthSource>(*exec));
    } else if (n == "scheduler_idle_rate") {
      if (!exec) throw ConfigError("scheduler_idle_rate needs an executor");
      out.push_back(std::make_unique<IdleRateSource>(*exec));
    } else if (n == "steals_total") {
      if (!exec) throw ConfigError("steals_total needs an executor");
      out.push_back(std::make_unique<StealsSource>(*exec));
    } else {
      throw ConfigError("unknown counter: " + n);
    }
  }
  return out;
}

}  // namespace taskbench::measure

#endif  // TASKBENCH_MEASURE_COUNTERS_HPP
