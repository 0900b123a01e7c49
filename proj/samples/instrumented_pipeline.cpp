// Copyright 2026 The taskbench Authors
// SPDX-License-Identifier: Apache-2.0
//
// End-to-end instrumentation walk-through: run the Ising pipeline with
// a measurement session, periodic counter sampling, and a trace file,
// then print the profile and validate the trace we just wrote.

#include <chrono>
#include <iostream>

#include "taskbench/taskbench.hpp"

using namespace taskbench;

int main() {
  ExecutorConfig ecfg;
  ecfg.backend = Backend::user_tasks;
  ecfg.workers = 4;

  ising::WorkloadConfig wcfg;
  wcfg.lattice = 8;
  wcfg.beta = 0.4;
  wcfg.walkers = 4;
  wcfg.accumulators = 2;
  wcfg.measurements = 2000;
  wcfg.burn_in = 50;
  wcfg.seed = 42;

  auto ex = make_executor(ecfg);
  measure::MeasurementSession session;

  trace::TraceMeta meta;
  meta.backend = to_string(ecfg.backend);
  meta.workers = ecfg.workers;
  meta.seed = wcfg.seed;
  auto sources =
      measure::make_counter_sources(measure::default_counter_names(), ex.get());
  for (auto& s : sources)
    for (auto& k : s->kinds()) meta.counters.push_back(k);

  trace::TraceWriter writer("pipeline_trace.jsonl", meta);
  session.add_record_sink(
      [&writer](const measure::TimerRecord& r) { writer.push_task(r); });

  ex->attach_listener(&session);
  ex->start();

  measure::PeriodicSampler sampler(
      ex->clock(), std::move(sources),
      [&](const measure::CounterSample& s) {
        session.add_counter_sample(s);
        writer.push_counter(s);
      },
      std::chrono::milliseconds(20));
  sampler.start();

  ising::WorkloadResult result = ising::run_workload(*ex, wcfg);

  sampler.stop();
  ex->shutdown();
  writer.close();

  std::cout << "records=" << result.records
            << " mean_energy=" << result.mean_energy
            << " mean_abs_m=" << result.mean_abs_m << "\n\n";
  session.render_profile(std::cout);

  trace::TraceData data = trace::read_trace_file("pipeline_trace.jsonl");
  trace::ValidationReport report = trace::validate(data);
  std::cout << "\n";
  report.render(std::cout);
  return report.clean() ? 0 : 1;
}
