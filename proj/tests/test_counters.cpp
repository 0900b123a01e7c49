// Copyright 2026 The taskbench Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <cmath>
#include <thread>

#include "taskbench/executor_factory.hpp"
#include "taskbench/measure/counters.hpp"

namespace {

using namespace taskbench;
using measure::CounterSource;
using measure::make_counter_sources;

std::vector<measure::CounterSample> take_sample(CounterSource& src,
                                                std::uint64_t t_ns) {
  std::vector<measure::CounterSample> out;
  src.sample(t_ns, out);
  return out;
}

std::unique_ptr<Executor> make(Backend b, unsigned workers) {
  ExecutorConfig cfg;
  cfg.backend = b;
  cfg.workers = workers;
  auto ex = make_executor(cfg);
  ex->start();
  return ex;
}

TEST(CtxSwitch, DeclaresTwoMonotonicKinds) {
  measure::CtxSwitchSource src;
  auto kinds = src.kinds();
  ASSERT_EQ(kinds.size(), 2u);
  EXPECT_EQ(kinds[0].name, "context_switches_voluntary");
  EXPECT_EQ(kinds[1].name, "context_switches_involuntary");
  for (auto& k : kinds) {
    EXPECT_EQ(k.unit, "count");
    EXPECT_TRUE(k.monotonic);
  }
}

TEST(CtxSwitch, SeriesNeverDecreases) {
  measure::CtxSwitchSource src;
  auto first = take_sample(src, 1);
  ASSERT_EQ(first.size(), 2u);
  // Force at least a few voluntary switches before the second reading.
  for (int i = 0; i < 5; ++i)
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
  auto second = take_sample(src, 2);
  ASSERT_EQ(second.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(second[i].name, first[i].name);
    EXPECT_GE(second[i].value, first[i].value);
  }
  EXPECT_GT(second[0].value, first[0].value);
}

TEST(Rss, PositiveAndPageAligned) {
  measure::RssSource src;
  auto kinds = src.kinds();
  ASSERT_EQ(kinds.size(), 1u);
  EXPECT_EQ(kinds[0].name, "process_memory_rss");
  EXPECT_EQ(kinds[0].unit, "bytes");
  EXPECT_FALSE(kinds[0].monotonic);
  auto s = take_sample(src, 7);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_GT(s[0].value, 0.0);
  const double page = static_cast<double>(sysconf(_SC_PAGESIZE));
  EXPECT_EQ(std::fmod(s[0].value, page), 0.0);
}

TEST(CpuUtil, ReflectsBusyInterval) {
  measure::CpuUtilSource src;
  MonotonicClock clock;
  src.prime(clock.now_ns());
  // Spin for a while so process CPU time visibly advances.
  volatile std::uint64_t sink = 0;
  auto until = std::chrono::steady_clock::now() + std::chrono::milliseconds(60);
  while (std::chrono::steady_clock::now() < until) sink += 1;
  auto busy = take_sample(src, clock.now_ns());
  ASSERT_EQ(busy.size(), 1u);
  EXPECT_GT(busy[0].value, 0.0);

  std::this_thread::sleep_for(std::chrono::milliseconds(30));
  auto calm = take_sample(src, clock.now_ns());
  ASSERT_EQ(calm.size(), 1u);
  EXPECT_GE(calm[0].value, 0.0);
  EXPECT_LT(calm[0].value, busy[0].value);
}

TEST(QueueLength, CountsQueuedNotRunning) {
  auto ex = make(Backend::os_pool, 1);
  measure::QueueLengthSource src(*ex);

  std::atomic<bool> started{false};
  std::atomic<bool> release{false};
  auto gate = ex->spawn([&] {
    started = true;
    while (!release) std::this_thread::yield();
  });
  while (!started) std::this_thread::yield();

  std::vector<Future<void>> fs;
  for (int i = 0; i < 6; ++i) fs.push_back(ex->spawn([] {}));

  // The only worker is parked inside the gate, so exactly the six new
  // tasks sit in its queue.
  auto held = take_sample(src, ex->clock().now_ns());
  ASSERT_EQ(held.size(), 1u);
  EXPECT_EQ(held[0].name, "scheduler_queue_length");
  EXPECT_EQ(held[0].value, 6.0);

  release = true;
  gate.get();
  for (auto& f : fs) f.get();
  auto drained = take_sample(src, ex->clock().now_ns());
  EXPECT_EQ(drained[0].value, 0.0);
  ex->shutdown();
}

TEST(IdleRate, ExactlyZeroWhenSaturated) {
  auto ex = make(Backend::os_pool, 1);
  measure::IdleRateSource src(*ex);

  std::atomic<bool> started{false};
  std::atomic<bool> release{false};
  auto gate = ex->spawn([&] {
    started = true;
    while (!release) {
    }
  });
  while (!started) std::this_thread::yield();

  // The busy span covers the whole interval, so the clamped busy
  // fraction is exactly 1 and the reading exactly 0.
  src.prime(ex->clock().now_ns());
  std::this_thread::sleep_for(std::chrono::milliseconds(20));
  auto s = take_sample(src, ex->clock().now_ns());
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0].name, "scheduler_idle_rate");
  EXPECT_EQ(s[0].value, 0.0);

  release = true;
  gate.get();
  ex->shutdown();
}

TEST(IdleRate, ExactlyFullWhenIdle) {
  auto ex = make(Backend::os_pool, 2);
  measure::IdleRateSource src(*ex);
  src.prime(ex->clock().now_ns());
  std::this_thread::sleep_for(std::chrono::milliseconds(10));
  auto s = take_sample(src, ex->clock().now_ns());
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0].value, 10000.0);
  ex->shutdown();
}

TEST(Steals, TracksExecutorTotal) {
  auto ex = make(Backend::user_tasks, 2);
  measure::StealsSource src(*ex);
  std::vector<Future<void>> fs;
  for (int i = 0; i < 40; ++i)
    fs.push_back(ex->spawn([] {
      volatile std::uint64_t sink = 0;
      for (int k = 0; k < 200000; ++k) sink += 1;
    }));
  for (auto& f : fs) f.get();
  auto s = take_sample(src, ex->clock().now_ns());
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0].value, static_cast<double>(ex->steals_total()));
  ex->shutdown();
}

TEST(Factory, UnknownNameRejected) {
  EXPECT_THROW(make_counter_sources({"page_faults"}, nullptr), ConfigError);
}

TEST(Factory, SchedulerSeriesNeedExecutor) {
  for (const char* name :
       {"scheduler_queue_length", "scheduler_idle_rate", "steals_total"}) {
    EXPECT_THROW(make_counter_sources({name}, nullptr), ConfigError)
        << name;
  }
}

TEST(Factory, ContextSwitchPairSharesOneSource) {
  auto sources = make_counter_sources(
      {"context_switches_voluntary", "context_switches_involuntary"}, nullptr);
  ASSERT_EQ(sources.size(), 1u);
  EXPECT_EQ(sources[0]->kinds().size(), 2u);
}

TEST(Factory, DefaultNamesBuildEverySource) {
  auto names = measure::default_counter_names();
  const std::vector<std::string> expected = {
      "context_switches_voluntary", "context_switches_involuntary",
      "process_memory_rss",         "cpu_utilization",
      "scheduler_queue_length",     "scheduler_idle_rate",
      "steals_total"};
  EXPECT_EQ(names, expected);

  auto ex = make(Backend::os_pool, 1);
  auto sources = make_counter_sources(names, ex.get());
  EXPECT_EQ(sources.size(), 6u);
  std::vector<std::string> declared;
  for (auto& s : sources)
    for (auto& k : s->kinds()) declared.push_back(k.name);
  EXPECT_EQ(declared, expected);
  ex->shutdown();
}

}  // namespace
