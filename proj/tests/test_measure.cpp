// Copyright 2026 The taskbench Authors
// SPDX-License-Identifier: Apache-2.0
//
// Measurement session: lifecycle timers, yield intervals, nested scope
// accounting, profile aggregation, sampler behavior, env toggles.

#include <gtest/gtest.h>

#include <chrono>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "taskbench/annotate.hpp"
#include "taskbench/executor_factory.hpp"
#include "taskbench/measure/counters.hpp"
#include "taskbench/measure/env.hpp"
#include "taskbench/measure/sampler.hpp"
#include "taskbench/measure/session.hpp"

using namespace taskbench;
using measure::CounterSample;
using measure::MeasurementSession;

namespace {

std::unique_ptr<Executor> started(Backend b, unsigned workers,
                                  MeasurementSession& s) {
  ExecutorConfig cfg;
  cfg.backend = b;
  cfg.workers = workers;
  auto ex = make_executor(cfg);
  ex->attach_listener(&s);
  ex->start();
  return ex;
}

void sleep_ms(int ms) {
  std::this_thread::sleep_for(std::chrono::milliseconds(ms));
}

}  // namespace

TEST(Session, RecordsCompleteLifecycles) {
  MeasurementSession s;
  auto ex = started(Backend::user_tasks, 2, s);
  std::vector<Future<void>> fs;
  for (int i = 0; i < 50; ++i)
    fs.push_back(ex->spawn("noop", [] {}));
  for (auto& f : fs) f.wait();
  ex->shutdown();

  EXPECT_EQ(s.count(EventKind::created), 50u);
  EXPECT_EQ(s.count(EventKind::started), 50u);
  EXPECT_EQ(s.count(EventKind::stopped), 50u);
  EXPECT_EQ(s.live_count(), 0u);
  auto records = s.records();
  ASSERT_EQ(records.size(), 50u);
  for (auto& r : records) {
    EXPECT_EQ(r.annotation, "noop");
    EXPECT_GE(r.worker, 0);
    EXPECT_LE(r.start_ns, r.stop_ns);
    EXPECT_LE(r.active_ns(), r.inclusive_ns());
  }
}

TEST(Session, YieldIntervalsLandInRecord) {
  MeasurementSession s;
  auto ex = started(Backend::user_tasks, 1, s);
  auto f = ex->spawn("yielder", [&ex] {
    ex->yield_now();
    ex->yield_now();
  });
  f.wait();
  ex->shutdown();

  auto records = s.records();
  ASSERT_EQ(records.size(), 1u);
  const auto& r = records[0];
  ASSERT_EQ(r.yields.size(), 2u);
  std::uint64_t prev_end = r.start_ns;
  for (auto& [out, in] : r.yields) {
    EXPECT_GE(out, prev_end);
    EXPECT_LE(out, in);
    prev_end = in;
  }
  EXPECT_LE(prev_end, r.stop_ns);
  EXPECT_LE(r.active_ns(), r.inclusive_ns());
}

TEST(Session, BlockingWaitShowsAsYieldOnUserTasks) {
  MeasurementSession s;
  auto ex = started(Backend::user_tasks, 1, s);
  auto f = ex->spawn("parent", [&ex] {
    auto child = ex->spawn("child", [] { return 1; });
    return child.get();  // suspends the parent fiber
  });
  EXPECT_EQ(f.get(), 1);
  ex->shutdown();

  std::map<std::string, measure::TimerRecord> by_name;
  for (auto& r : s.records()) by_name[r.annotation] = r;
  ASSERT_EQ(by_name.count("parent"), 1u);
  EXPECT_GE(by_name["parent"].yields.size(), 1u);
}

TEST(Session, NestedScopeSplitsExclusiveTime) {
  MeasurementSession s;
  auto ex = started(Backend::user_tasks, 1, s);
  auto f = ex->spawn("outer", [&ex] {
    sleep_ms(12);
    {
      ScopedAnnotation inner("inner");
      sleep_ms(8);
    }
    sleep_ms(4);
  });
  f.wait();
  ex->shutdown();

  auto rows = s.profile();
  std::map<std::string, measure::ProfileRow> by_name;
  for (auto& r : rows) by_name[r.name] = r;
  ASSERT_EQ(by_name.count("outer"), 1u);
  ASSERT_EQ(by_name.count("inner"), 1u);

  double outer_excl = static_cast<double>(by_name["outer"].exclusive_ns);
  double outer_incl = static_cast<double>(by_name["outer"].inclusive_ns);
  double inner_incl = static_cast<double>(by_name["inner"].inclusive_ns);
  EXPECT_NEAR(outer_incl, 24e6, 24e6 * 0.25);
  EXPECT_NEAR(inner_incl, 8e6, 8e6 * 0.35);
  EXPECT_NEAR(outer_excl, 16e6, 16e6 * 0.30);
  EXPECT_LE(by_name["outer"].exclusive_ns, by_name["outer"].inclusive_ns);
  EXPECT_LE(by_name["inner"].exclusive_ns, by_name["inner"].inclusive_ns);
}

TEST(Session, ProfileOrderingAndCounts) {
  MeasurementSession s;
  auto ex = started(Backend::user_tasks, 1, s);
  std::vector<Future<void>> fs;
  for (int i = 0; i < 10; ++i)
    fs.push_back(ex->spawn("heavy", [] { sleep_ms(3); }));
  for (int i = 0; i < 20; ++i)
    fs.push_back(ex->spawn("light", [] {}));
  for (int i = 0; i < 5; ++i)
    fs.push_back(ex->spawn([] {}));  // unannotated
  for (auto& f : fs) f.wait();
  ex->shutdown();

  auto rows = s.profile();
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].name, "heavy");  // exclusive time dominates
  std::map<std::string, std::uint64_t> counts;
  double share_sum = 0;
  for (auto& r : rows) {
    counts[r.name] = r.count;
    share_sum += r.share;
  }
  EXPECT_EQ(counts["heavy"], 10u);
  EXPECT_EQ(counts["light"], 20u);
  EXPECT_EQ(counts["(unnamed)"], 5u);
  EXPECT_NEAR(share_sum, 1.0, 1e-9);

  std::ostringstream os;
  s.render_profile(os);
  std::string text = os.str();
  EXPECT_NE(text.find("annotation"), std::string::npos);
  EXPECT_NE(text.find("heavy"), std::string::npos);
  EXPECT_NE(text.find("(unnamed)"), std::string::npos);
  // Sorted output: heavy's row comes before light's.
  EXPECT_LT(text.find("heavy"), text.find("light"));
}

TEST(Session, AnnotatedWrapperCarriesName) {
  MeasurementSession s;
  auto ex = started(Backend::os_pool, 2, s);
  auto f = ex->spawn(annotated("wrapped", [] { return 9; }));
  EXPECT_EQ(f.get(), 9);
  ex->shutdown();
  auto records = s.records();
  ASSERT_EQ(records.size(), 1u);
  EXPECT_EQ(records[0].annotation, "wrapped");
}

TEST(Session, EmptyAnnotationNameRejected) {
  ExecutorConfig cfg;
  cfg.backend = Backend::user_tasks;
  cfg.workers = 1;
  auto ex = make_executor(cfg);
  ex->start();
  auto f = ex->spawn(
      [] { EXPECT_THROW(ScopedAnnotation bad(""), ConfigError); });
  f.wait();
  ex->shutdown();
}

TEST(Session, CsvRenderingSortsAndFormats) {
  MeasurementSession s;
  s.add_counter_sample({"gauge", 2000, 7.5});
  s.add_counter_sample({"mono", 1000, 3.0});
  s.add_counter_sample({"gauge", 500, 7.0});
  std::ostringstream os;
  s.render_counters_csv(os);
  std::string text = os.str();
  std::istringstream lines(text);
  std::string line;
  std::getline(lines, line);
  EXPECT_EQ(line, "name,t_ns,value");
  std::vector<std::string> rest;
  while (std::getline(lines, line)) rest.push_back(line);
  ASSERT_EQ(rest.size(), 3u);
  EXPECT_EQ(rest[0], "gauge,500,7");
  EXPECT_EQ(rest[1], "mono,1000,3");
  EXPECT_EQ(rest[2], "gauge,2000,7.5");
}

namespace {

class ConstantSource : public measure::CounterSource {
 public:
  ConstantSource(std::string name, double value, bool monotonic)
      : name_(std::move(name)), value_(value), monotonic_(monotonic) {}

  std::vector<measure::CounterKindInfo> kinds() const override {
    return {{name_, "units", monotonic_}};
  }

  void prime(std::uint64_t) override {}

  void sample(std::uint64_t t_ns,
              std::vector<CounterSample>& out) override {
    out.push_back({name_, t_ns, value_});
    if (monotonic_) value_ += 1.0;
  }

 private:
  std::string name_;
  double value_;
  bool monotonic_;
};

}  // namespace

TEST(Sampler, PeriodicSamplesAndFinalFlush) {
  MonotonicClock clock;
  std::vector<std::unique_ptr<measure::CounterSource>> sources;
  sources.push_back(std::make_unique<ConstantSource>("c", 7.0, false));
  std::vector<CounterSample> got;
  std::mutex m;
  measure::PeriodicSampler sampler(
      clock, std::move(sources),
      [&](const CounterSample& s) {
        std::lock_guard<std::mutex> lk(m);
        got.push_back(s);
      },
      std::chrono::milliseconds(20));
  sampler.start();
  sleep_ms(110);
  sampler.stop();

  std::lock_guard<std::mutex> lk(m);
  // ~5 periodic samples plus the final flush; generous jitter margin.
  EXPECT_GE(got.size(), 3u);
  EXPECT_LE(got.size(), 9u);
  for (auto& s : got) {
    EXPECT_EQ(s.name, "c");
    EXPECT_EQ(s.value, 7.0);
  }
  for (std::size_t i = 1; i < got.size(); ++i)
    EXPECT_GE(got[i].t_ns, got[i - 1].t_ns);
}

TEST(Sampler, MonotonicSourceNeverDecreases) {
  MonotonicClock clock;
  std::vector<std::unique_ptr<measure::CounterSource>> sources;
  sources.push_back(std::make_unique<ConstantSource>("m", 0.0, true));
  std::vector<double> values;
  measure::PeriodicSampler sampler(
      clock, std::move(sources),
      [&](const CounterSample& s) { values.push_back(s.value); },
      std::chrono::milliseconds(10));
  sampler.start();
  sleep_ms(50);
  sampler.stop();
  ASSERT_GE(values.size(), 2u);
  for (std::size_t i = 1; i < values.size(); ++i)
    EXPECT_GE(values[i], values[i - 1]);
}

TEST(Sampler, SubMillisecondPeriodRejected) {
  MonotonicClock clock;
  std::vector<std::unique_ptr<measure::CounterSource>> sources;
  EXPECT_THROW(measure::PeriodicSampler(
                   clock, std::move(sources),
                   [](const CounterSample&) {}, std::chrono::milliseconds(0)),
               ConfigError);
}

TEST(Sampler, DoubleStartFaultsAndStopIsIdempotent) {
  MonotonicClock clock;
  std::vector<std::unique_ptr<measure::CounterSource>> sources;
  sources.push_back(std::make_unique<ConstantSource>("c", 1.0, false));
  std::atomic<int> delivered{0};
  measure::PeriodicSampler sampler(
      clock, std::move(sources), [&](const CounterSample&) { ++delivered; },
      std::chrono::milliseconds(50));
  sampler.start();
  EXPECT_THROW(sampler.start(), ConfigError);
  sampler.stop();
  sampler.stop();
  const int after_first = delivered.load();
  EXPECT_GE(after_first, 1);
  // A stopped sampler may be started again; the run picks up cleanly.
  sampler.start();
  sampler.stop();
  EXPECT_GT(delivered.load(), after_first);
}

TEST(Env, ParsesAllToggles) {
  std::map<std::string, std::string> env = {
      {"TASKBENCH_MEASURE", "0"},
      {"TASKBENCH_SAMPLE_PERIOD_MS", "250"},
      {"TASKBENCH_COUNTERS", "a,b,c"},
      {"TASKBENCH_TRACE", "1"},
  };
  auto getv = [&](const char* name) -> const char* {
    auto it = env.find(name);
    return it == env.end() ? nullptr : it->second.c_str();
  };
  auto e = measure::MeasureEnv::from_env(getv);
  ASSERT_TRUE(e.measure.has_value());
  EXPECT_FALSE(*e.measure);
  ASSERT_TRUE(e.sample_period_ms.has_value());
  EXPECT_EQ(*e.sample_period_ms, 250);
  ASSERT_TRUE(e.counters.has_value());
  EXPECT_EQ(e.counters->size(), 3u);
  EXPECT_EQ((*e.counters)[1], "b");
  ASSERT_TRUE(e.trace.has_value());
  EXPECT_TRUE(*e.trace);
}

TEST(Env, AbsentVariablesStayUnset) {
  auto getv = [](const char*) -> const char* { return nullptr; };
  auto e = measure::MeasureEnv::from_env(getv);
  EXPECT_FALSE(e.measure.has_value());
  EXPECT_FALSE(e.sample_period_ms.has_value());
  EXPECT_FALSE(e.counters.has_value());
  EXPECT_FALSE(e.trace.has_value());
}

// With one worker and stealing active but no second queue to raid, the
// scheduler is strict FCFS, which pins down the whole event sequence.
TEST(Session, SingleWorkerSequenceIsDeterministic) {
  MeasurementSession s;
  ExecutorConfig cfg;
  cfg.backend = Backend::user_tasks;
  cfg.workers = 1;
  auto ex = make_executor(cfg);
  ex->attach_listener(&s);
  ex->start();
  std::vector<std::string> order;
  auto setup = ex->spawn("setup", [&] {
    ex->spawn("a", [&order] { order.push_back("a"); }).wait();
    auto fb = ex->spawn("b", [&order] { order.push_back("b"); });
    auto fc = ex->spawn("c", [&order] { order.push_back("c"); });
    fb.wait();
    fc.wait();
  });
  setup.wait();
  ex->shutdown();
  ASSERT_EQ(order.size(), 3u);
  EXPECT_EQ(order[0], "a");
  EXPECT_EQ(order[1], "b");
  EXPECT_EQ(order[2], "c");
}
