// Copyright 2026 The taskbench Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef TASKBENCH_MEASURE_SAMPLER_HPP
#define TASKBENCH_MEASURE_SAMPLER_HPP

#include <chrono>
#include <condition_variable>
#include <functional>
#include <memory>
#include <mutex>
#include <thread>
#include <utility>
#include <vector>

#include "taskbench/common.hpp"
#include "taskbench/measure/counters.hpp"

namespace taskbench::measure {

//! Periodic interrogation thread. Primes all sources at start, then
//! samples every `period` on absolute deadlines (no drift) and pushes
//! each sample to the sink. stop() takes one final sample before
//! joining, so even a short run records end-of-run values. The sampler
//! shares the executor's clock, putting samples and task timers on one
//! time axis.
class PeriodicSampler {
 public:
  PeriodicSampler(const MonotonicClock& clock,
                  std::vector<std::unique_ptr<CounterSource>> sources,
                  std::function<void(const CounterSample&)> sink,
                  std::chrono::milliseconds period)
      : clock_(&clock),
        sources_(std::move(sources)),
        sink_(std::move(sink)),
        period_(period) {
    if (period_ < std::chrono::milliseconds(1))
      throw ConfigError("sampling period below 1 ms");
  }

  ~PeriodicSampler() { stop(); }

  void start() {
    if (th_.joinable()) throw ConfigError("sampler started twice");
    stop_requested_ = false;
    th_ = std::thread([this] { loop(); });
  }

  void stop() {
    {
      std::lock_guard<std::mutex> lk(m_);
      stop_requested_ = true;
      cv_.notify_all();
    }
    if (th_.joinable()) th_.join();
  }

 private:
  void loop() {
    auto t0 = clock_->now_ns();
    for (auto& s : sources_) s->prime(t0);
    auto deadline = std::chrono::steady_clock::now() + period_;
    std::vector<CounterSample> batch;
    for (;;) {
      bool stopping;
      {
        std::unique_lock<std::mutex> lk(m_);
        cv_.wait_until(lk, deadline, [&] { return stop_requested_; });
        stopping = stop_requested_;
      }
      deadline += period_;
      batch.clear();
      auto now = clock_->now_ns();
      for (auto& s : sources_) s->sample(now, batch);
      for (auto& smp : batch) sink_(smp);
      if (stopping) return;
    }
  }

  const MonotonicClock* clock_;
  std::vector<std::unique_ptr<CounterSource>> sources_;
  std::function<void(const CounterSample&)> sink_;
  std::chrono::milliseconds period_;
  std::thread th_;
  std::mutex m_;
  std::condition_variable cv_;
  bool stop_requested_ = false;
};

}  // namespace taskbench::measure

#endif  // TASKBENCH_MEASURE_SAMPLER_HPP
