// Copyright 2026 The taskbench Authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line harness. Subcommands:
//   run            one backend, one instrumented run
//   compare        full plan: backends x repetitions, aggregate report
//   validate-trace check a trace file, optionally export a browser timeline
//   report         re-render report.txt / report.json from stored runs
//   oracle         brute-force Ising enumeration for small lattices
//
// Exit codes: 0 success, 1 runtime or validation failure, 2 usage error.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include "taskbench/taskbench.hpp"

namespace {

using taskbench::Backend;
using taskbench::ExecutorConfig;
namespace bench = taskbench::bench;
namespace ising = taskbench::ising;
namespace measure = taskbench::measure;
namespace trace = taskbench::trace;

Backend parse_backend(const std::string& name) {
  if (name == "os-pool") return Backend::os_pool;
  if (name == "user-tasks") return Backend::user_tasks;
  throw taskbench::ConfigError("unknown backend: " + name);
}

ising::StopMode parse_stop_mode(const std::string& name) {
  if (name == "quota") return ising::StopMode::quota;
  if (name == "counter") return ising::StopMode::counter;
  throw taskbench::ConfigError("unknown stop mode: " + name);
}

struct PlanOpts {
  std::vector<std::string> backends;
  unsigned workers = std::thread::hardware_concurrency();
  int walkers = 4;
  int accumulators = 2;
  long long measurements = 1000;
  long long burn_in = 0;
  int lattice = 4;
  double beta = 0.3;
  std::uint64_t seed = 1;
  int reps = 1;
  int sample_period = 100;
  std::vector<std::string> counters;
  std::string out = "bench-out";
  bool no_steal = false;
  bool trace_on = true;
  std::string stop_mode = "quota";

  CLI::Option* sample_period_opt = nullptr;
  CLI::Option* counters_opt = nullptr;
  CLI::Option* trace_opt = nullptr;
};

// Flags shared by `run` and `compare`. `multi_backend` controls whether
// --backend may repeat (compare) or takes one value (run).
void add_plan_options(CLI::App* cmd, PlanOpts& o, bool multi_backend) {
  auto* b = cmd->add_option("--backend", o.backends,
                            multi_backend ? "backend to include, repeatable"
                                          : "backend to run");
  b->check(CLI::IsMember({"os-pool", "user-tasks"}));
  if (!multi_backend) b->expected(0, 1);
  cmd->add_option("--workers", o.workers, "worker threads per executor");
  cmd->add_option("--walkers", o.walkers, "walker task count");
  cmd->add_option("--accumulators", o.accumulators, "accumulator task count");
  cmd->add_option("--measurements", o.measurements,
                  "total measurement records");
  cmd->add_option("--burn-in", o.burn_in,
                  "updates discarded before measuring, per walker");
  cmd->add_option("--lattice", o.lattice, "lattice side length");
  cmd->add_option("--beta", o.beta, "inverse temperature");
  cmd->add_option("--seed", o.seed, "base RNG seed");
  if (multi_backend)
    cmd->add_option("--reps", o.reps, "repetitions per backend");
  o.sample_period_opt = cmd->add_option("--sample-period", o.sample_period,
                                        "counter sampling period, ms");
  o.counters_opt = cmd->add_option("--counters", o.counters,
                                   "counter series, comma separated")
                       ->delimiter(',');
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_flag("--no-steal", o.no_steal, "disable work stealing");
  o.trace_opt =
      cmd->add_flag("--trace,!--no-trace", o.trace_on, "trace file on/off");
  cmd->add_option("--stop-mode", o.stop_mode,
                  "stopping rule: quota (deterministic split) or counter "
                  "(shared count, racy overshoot trimmed)")
      ->check(CLI::IsMember({"quota", "counter"}));
}

// CLI flag > environment variable > built-in default.
bench::ExperimentPlan build_plan(const PlanOpts& o, bool single_run) {
  const measure::MeasureEnv env = measure::MeasureEnv::from_env();

  bench::ExperimentPlan plan;
  plan.workload.lattice = o.lattice;
  plan.workload.beta = o.beta;
  plan.workload.walkers = o.walkers;
  plan.workload.accumulators = o.accumulators;
  plan.workload.measurements = o.measurements;
  plan.workload.burn_in = o.burn_in;
  plan.workload.seed = o.seed;
  plan.workload.stop_mode = parse_stop_mode(o.stop_mode);

  std::vector<std::string> backends = o.backends;
  if (backends.empty())
    backends = single_run ? std::vector<std::string>{"user-tasks"}
                          : std::vector<std::string>{"os-pool", "user-tasks"};
  for (auto& name : backends) {
    ExecutorConfig e;
    e.backend = parse_backend(name);
    e.workers = o.workers;
    e.steal_enabled = !o.no_steal;
    plan.executors.push_back(e);
  }

  plan.repetitions = single_run ? 1 : o.reps;
  plan.out_dir = o.out;

  plan.measure = env.measure.value_or(true);
  plan.sample_period_ms = o.sample_period;
  if (o.sample_period_opt->count() == 0 && env.sample_period_ms)
    plan.sample_period_ms = *env.sample_period_ms;
  if (o.counters_opt->count() > 0)
    plan.counters = o.counters;
  else if (env.counters)
    plan.counters = *env.counters;
  if (o.trace_opt->count() > 0)
    plan.trace = o.trace_on;
  else if (env.trace)
    plan.trace = *env.trace;
  return plan;
}

int finish_batch(const bench::ComparisonReport& rep) {
  bench::render_report_txt(rep, std::cout);
  for (auto& s : rep.summaries)
    if (!s.value("ok", false)) return 1;
  return 0;
}

int cmd_run_or_compare(const PlanOpts& o, bool single_run) {
  bench::ExperimentPlan plan = build_plan(o, single_run);
  bench::ComparisonReport rep = bench::run_experiment(plan);
  return finish_batch(rep);
}

int cmd_validate(const std::string& path, const std::string& chrome_out) {
  trace::TraceData data = trace::read_trace_file(path);
  trace::ValidationReport report = trace::validate(data);
  report.render(std::cout);
  if (!chrome_out.empty()) {
    trace::export_chrome_file(data, chrome_out);
    std::cout << "timeline:        " << chrome_out << "\n";
  }
  return report.clean() ? 0 : 1;
}

int cmd_report(const std::string& dir) {
  bench::ComparisonReport rep = bench::rebuild_report(dir);
  bench::render_report_txt(rep, std::cout);
  return 0;
}

int cmd_oracle(int lattice, double beta, const std::string& out) {
  ising::ExactResult r = ising::enumerate_exact(lattice, beta);
  std::cout << std::setprecision(12) << std::fixed;
  std::cout << "lattice:       " << lattice << "\n"
            << "beta:          " << beta << "\n"
            << "states:        " << r.states << "\n"
            << "mean_energy:   " << r.mean_energy << "\n"
            << "mean_abs_m:    " << r.mean_abs_m << "\n";
  if (!out.empty()) {
    nlohmann::ordered_json j;
    j["lattice"] = lattice;
    j["beta"] = beta;
    j["states"] = r.states;
    j["mean_energy"] = r.mean_energy;
    j["mean_abs_m"] = r.mean_abs_m;
    std::ofstream f(out, std::ios::trunc);
    if (!f) throw taskbench::TraceError("cannot open " + out);
    f << j.dump(2) << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"task runtime comparison workbench"};
  app.require_subcommand(1);
  app.set_config("--config", "", "read options from a config file");
  app.get_formatter()->column_width(34);

  PlanOpts run_opts;
  auto* run_cmd =
      app.add_subcommand("run", "one backend, one instrumented run");
  add_plan_options(run_cmd, run_opts, /*multi_backend=*/false);

  PlanOpts cmp_opts;
  auto* cmp_cmd = app.add_subcommand(
      "compare", "run every backend R times and write a comparison report");
  add_plan_options(cmp_cmd, cmp_opts, /*multi_backend=*/true);

  std::string trace_path, chrome_out;
  auto* val_cmd =
      app.add_subcommand("validate-trace", "check a trace file's invariants");
  val_cmd->add_option("path", trace_path, "trace file to validate")
      ->required()
      ->check(CLI::ExistingFile);
  val_cmd->add_option("--chrome", chrome_out,
                      "also export a browser-viewable timeline here");

  std::string report_dir = "bench-out";
  auto* rep_cmd = app.add_subcommand(
      "report", "re-render report files from stored run summaries");
  rep_cmd->add_option("--out", report_dir, "experiment output directory");

  int oracle_lattice = 4;
  double oracle_beta = 0.3;
  std::string oracle_out;
  auto* ora_cmd = app.add_subcommand(
      "oracle", "exact enumeration of mean energy and |magnetization|");
  ora_cmd->add_option("--lattice", oracle_lattice, "lattice side (L*L <= 20)");
  ora_cmd->add_option("--beta", oracle_beta, "inverse temperature");
  ora_cmd->add_option("--out", oracle_out, "write results as JSON here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (run_cmd->parsed()) return cmd_run_or_compare(run_opts, true);
    if (cmp_cmd->parsed()) return cmd_run_or_compare(cmp_opts, false);
    if (val_cmd->parsed()) return cmd_validate(trace_path, chrome_out);
    if (rep_cmd->parsed()) return cmd_report(report_dir);
    if (ora_cmd->parsed())
      return cmd_oracle(oracle_lattice, oracle_beta, oracle_out);
  } catch (const taskbench::ConfigError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
