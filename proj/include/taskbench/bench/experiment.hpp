// Copyright 2026 The taskbench Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef TASKBENCH_BENCH_EXPERIMENT_HPP
#define TASKBENCH_BENCH_EXPERIMENT_HPP

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "taskbench/executor_factory.hpp"
#include "taskbench/ising/workload.hpp"
#include "taskbench/measure/sampler.hpp"
#include "taskbench/measure/session.hpp"
#include "taskbench/trace/chrome.hpp"
#include "taskbench/trace/reader.hpp"
#include "taskbench/trace/writer.hpp"

namespace taskbench::bench {

using json = nlohmann::ordered_json;

//! One benchmark batch: the same workload run `repetitions` times on
//! each executor configuration, every run fully instrumented and written
//! under out_dir/<label>/<rep>/. Run r uses seed workload.seed + r, the
//! same for every label, so backends see identical chains.
struct ExperimentPlan {
  ising::WorkloadConfig workload;
  std::vector<ExecutorConfig> executors;
  int repetitions = 1;
  int sample_period_ms = 100;
  std::vector<std::string> counters = measure::default_counter_names();
  std::filesystem::path out_dir = "bench-out";
  bool trace = true;
  bool measure = true;

  void validate() const {
    workload.validate();
    if (executors.empty()) throw ConfigError("no executor configurations");
    for (auto& e : executors) {
      e.validate();
      // Same feasibility rule run_workload enforces, applied before any
      // run starts so a doomed plan is a usage error, not a failed run.
      if (e.backend == Backend::os_pool) {
        const unsigned need =
            workload.stop_mode == ising::StopMode::quota
                ? static_cast<unsigned>(workload.walkers +
                                        workload.accumulators)
                : static_cast<unsigned>(workload.accumulators + 1);
        if (e.workers < need)
          throw ConfigError(
              "os-pool needs at least " + std::to_string(need) +
              " workers for this workload in " +
              std::string(to_string(workload.stop_mode)) + " mode; got " +
              std::to_string(e.workers));
      }
    }
    if (repetitions < 1) throw ConfigError("repetitions must be >= 1");
    if (sample_period_ms < 1) throw ConfigError("sample period below 1 ms");
  }
};

//! Distinct directory-safe labels: backend name, then backend-2, ...
inline std::vector<std::string> executor_labels(
    const std::vector<ExecutorConfig>& execs) {
  std::vector<std::string> labels;
  std::map<std::string, int> seen;
  for (auto& e : execs) {
    std::string base = to_string(e.backend);
    int n = ++seen[base];
    labels.push_back(n == 1 ? base : base + "-" + std::to_string(n));
  }
  return labels;
}

inline json workload_to_json(const ising::WorkloadConfig& w) {
  json j;
  j["lattice"] = w.lattice;
  j["beta"] = w.beta;
  j["walkers"] = w.walkers;
  j["accumulators"] = w.accumulators;
  j["measurements"] = w.measurements;
  j["burn_in"] = w.burn_in;
  j["stop_mode"] = std::string(to_string(w.stop_mode));
  return j;
}

//! Executes one instrumented run and returns its summary.json object.
//! Failures are contained: the summary carries ok=false and the error
//! text instead of propagating, so one bad run cannot sink a batch.
inline json run_single(const ExperimentPlan& plan, const ExecutorConfig& ecfg,
                       const std::string& label, int rep) {
  namespace fs = std::filesystem;
  ising::WorkloadConfig wcfg = plan.workload;
  wcfg.seed = plan.workload.seed + static_cast<std::uint64_t>(rep);

  fs::path run_dir = plan.out_dir / label / std::to_string(rep);
  fs::create_directories(run_dir);

  json out;
  out["label"] = label;
  out["rep"] = rep;
  out["backend"] = std::string(to_string(ecfg.backend));
  out["workers"] = ecfg.workers;
  out["steal"] = ecfg.steal_enabled;
  out["seed"] = wcfg.seed;
  out["workload"] = workload_to_json(wcfg);
  out["ok"] = false;
  out["error"] = "";

  try {
    auto ex = make_executor(ecfg);
    measure::MeasurementSession session;

    std::optional<trace::TraceWriter> writer;
    std::vector<std::unique_ptr<measure::CounterSource>> sources;
    if (plan.measure) {
      sources = measure::make_counter_sources(plan.counters, ex.get());
      if (plan.trace) {
        trace::TraceMeta meta;
        meta.backend = to_string(ecfg.backend);
        meta.workers = ecfg.workers;
        meta.steal = ecfg.steal_enabled;
        meta.seed = wcfg.seed;
        meta.workload = workload_to_json(wcfg);
        for (auto& s : sources)
          for (auto& k : s->kinds()) meta.counters.push_back(k);
        writer.emplace(run_dir / "trace.jsonl", meta);
        session.add_record_sink(
            [&w = *writer](const measure::TimerRecord& r) { w.push_task(r); });
      }
      ex->attach_listener(&session);
    }

    ex->start();

    std::optional<measure::PeriodicSampler> sampler;
    if (plan.measure) {
      sampler.emplace(
          ex->clock(), std::move(sources),
          [&](const measure::CounterSample& s) {
            session.add_counter_sample(s);
            if (writer) writer->push_counter(s);
          },
          std::chrono::milliseconds(plan.sample_period_ms));
      sampler->start();
    }

    ising::WorkloadResult result = ising::run_workload(*ex, wcfg);

    if (sampler) sampler->stop();
    ExecutionSummary summary = ex->shutdown();

    trace::TraceWriter::Stats wstats;
    if (writer) wstats = writer->close();

    if (plan.measure) {
      std::ofstream pf(run_dir / "profile.txt", std::ios::trunc);
      session.render_profile(pf);
      std::ofstream cf(run_dir / "counters.csv", std::ios::trunc);
      session.render_counters_csv(cf);
    }

    out["ok"] = true;
    out["wall_s"] = static_cast<double>(result.wall_ns) / 1e9;
    out["records"] = result.records;
    out["discarded"] = result.discarded;
    out["mean_energy"] = result.mean_energy;
    out["mean_abs_m"] = result.mean_abs_m;
    out["tasks_spawned"] = summary.tasks_spawned;
    out["tasks_completed"] = summary.tasks_completed;
    out["tasks_failed"] = summary.tasks_failed;
    out["executed_per_worker"] = summary.executed_per_worker;
    out["steals_per_worker"] = summary.steals_per_worker;

    json cend = json::object();
    {
      std::map<std::string, double> last;
      for (auto& s : session.counter_samples()) last[s.name] = s.value;
      for (auto& [k, v] : last) cend[k] = v;
    }
    out["counters_end"] = cend;

    if (writer) {
      json tj;
      tj["task_records"] = wstats.task_records;
      tj["counter_records"] = wstats.counter_records;
      tj["dropped_counters"] = wstats.dropped_counters;
      tj["io_error"] = wstats.io_error;
      out["trace"] = tj;
    } else {
      out["trace"] = nullptr;
    }

    json files = json::object();
    if (writer) files["trace"] = label + "/" + std::to_string(rep) + "/trace.jsonl";
    if (plan.measure) {
      files["profile"] = label + "/" + std::to_string(rep) + "/profile.txt";
      files["counters"] = label + "/" + std::to_string(rep) + "/counters.csv";
    }
    files["summary"] = label + "/" + std::to_string(rep) + "/summary.json";
    out["files"] = files;
  } catch (const std::exception& e) {
    out["ok"] = false;
    out["error"] = e.what();
  }

  std::ofstream sf(run_dir / "summary.json", std::ios::trunc);
  sf << out.dump(2) << "\n";
  return out;
}

struct LabelStats {
  std::string label;
  int runs = 0;
  int ok = 0;
  double mean_wall_s = 0;
  double sd_wall_s = 0;
  double min_wall_s = 0;
  double max_wall_s = 0;
  std::map<std::string, double> counters_end_mean;
};

struct SpeedupRow {
  std::string faster_candidate;  // "a" in (mean_b - mean_a)/mean_b
  std::string baseline;
  double speedup = 0;  // fraction; positive when candidate is faster
};

struct ComparisonReport {
  std::vector<json> summaries;  // sorted by (label, rep)
  std::vector<LabelStats> labels;
  std::vector<SpeedupRow> speedups;
};

//! Builds the comparison from run summaries alone. Both the live path
//! and the rebuild-from-directory path feed this same function, which
//! is what keeps regenerated reports identical to the originals.
inline ComparisonReport build_comparison(std::vector<json> summaries) {
  std::sort(summaries.begin(), summaries.end(), [](const json& a,
                                                   const json& b) {
    auto la = a.value("label", std::string{});
    auto lb = b.value("label", std::string{});
    if (la != lb) return la < lb;
    return a.value("rep", 0) < b.value("rep", 0);
  });

  ComparisonReport rep;
  std::map<std::string, std::vector<const json*>> by_label;
  std::vector<std::string> label_order;
  for (auto& s : summaries) {
    auto l = s.value("label", std::string{});
    if (!by_label.count(l)) label_order.push_back(l);
    by_label[l].push_back(&s);
  }
  std::sort(label_order.begin(), label_order.end());

  for (auto& l : label_order) {
    LabelStats st;
    st.label = l;
    std::vector<double> walls;
    std::map<std::string, std::vector<double>> cend;
    for (auto* s : by_label[l]) {
      ++st.runs;
      if (!s->value("ok", false)) continue;
      ++st.ok;
      walls.push_back(s->value("wall_s", 0.0));
      if (s->contains("counters_end"))
        for (auto& [k, v] : (*s)["counters_end"].items())
          cend[k].push_back(v.get<double>());
    }
    if (!walls.empty()) {
      double sum = 0;
      st.min_wall_s = walls[0];
      st.max_wall_s = walls[0];
      for (double w : walls) {
        sum += w;
        st.min_wall_s = std::min(st.min_wall_s, w);
        st.max_wall_s = std::max(st.max_wall_s, w);
      }
      st.mean_wall_s = sum / static_cast<double>(walls.size());
      double var = 0;
      for (double w : walls) var += (w - st.mean_wall_s) * (w - st.mean_wall_s);
      st.sd_wall_s = walls.size() > 1
                         ? std::sqrt(var / static_cast<double>(walls.size() - 1))
                         : 0.0;
    }
    for (auto& [k, vs] : cend) {
      double sum = 0;
      for (double v : vs) sum += v;
      st.counters_end_mean[k] = sum / static_cast<double>(vs.size());
    }
    rep.labels.push_back(std::move(st));
  }

  for (auto& a : rep.labels) {
    if (a.ok == 0) continue;
    for (auto& b : rep.labels) {
      if (&a == &b || b.ok == 0 || b.mean_wall_s <= 0) continue;
      rep.speedups.push_back(
          {a.label, b.label,
           (b.mean_wall_s - a.mean_wall_s) / b.mean_wall_s});
    }
  }

  rep.summaries = std::move(summaries);
  return rep;
}

inline void render_report_txt(const ComparisonReport& rep, std::ostream& os) {
  os << "benchmark comparison\n";
  os << "====================\n";
  if (!rep.summaries.empty() && rep.summaries.front().contains("workload")) {
    const json& w = rep.summaries.front()["workload"];
    os << "workload: lattice=" << w.value("lattice", 0)
       << " beta=" << std::fixed << std::setprecision(6)
       << w.value("beta", 0.0) << " walkers=" << w.value("walkers", 0)
       << " accumulators=" << w.value("accumulators", 0)
       << " measurements=" << w.value("measurements", 0ll)
       << " burn_in=" << w.value("burn_in", 0ll) << " stop_mode="
       << w.value("stop_mode", std::string{}) << "\n";
  }
  os << "\n";
  os << std::left << std::setw(16) << "label" << std::right << std::setw(6)
     << "runs" << std::setw(6) << "ok" << std::setw(14) << "mean_wall_s"
     << std::setw(12) << "sd" << std::setw(12) << "min" << std::setw(12)
     << "max"
     << "\n";
  os << std::string(78, '-') << "\n";
  for (auto& l : rep.labels) {
    os << std::left << std::setw(16) << l.label << std::right << std::setw(6)
       << l.runs << std::setw(6) << l.ok;
    if (l.ok > 0)
      os << std::setw(14) << std::fixed << std::setprecision(6)
         << l.mean_wall_s << std::setw(12) << l.sd_wall_s << std::setw(12)
         << l.min_wall_s << std::setw(12) << l.max_wall_s;
    else
      os << std::setw(14) << "n/a" << std::setw(12) << "-" << std::setw(12)
         << "-" << std::setw(12) << "-";
    os << "\n";
  }
  os << "\n";
  if (!rep.speedups.empty()) {
    os << "speedup, (mean_base - mean_cand) / mean_base:\n";
    for (auto& s : rep.speedups)
      os << "  " << s.faster_candidate << " over " << s.baseline << ": "
         << std::fixed << std::setprecision(2) << s.speedup * 100.0 << "%\n";
    os << "\n";
  }
  os << "end-of-run counters (mean over ok runs):\n";
  for (auto& l : rep.labels) {
    os << "  " << l.label << ":\n";
    for (auto& [k, v] : l.counters_end_mean)
      os << "    " << k << " = " << std::fixed << std::setprecision(3) << v
         << "\n";
  }
  os << "\n";
  os << "runs:\n";
  for (auto& s : rep.summaries) {
    os << "  " << s.value("label", std::string{}) << "/"
       << s.value("rep", 0) << ": ";
    if (s.value("ok", false)) {
      os << "ok wall_s=" << std::fixed << std::setprecision(6)
         << s.value("wall_s", 0.0) << " records=" << s.value("records", 0ll)
         << " mean_energy=" << std::setprecision(9)
         << s.value("mean_energy", 0.0) << " mean_abs_m="
         << s.value("mean_abs_m", 0.0);
    } else {
      os << "FAILED: " << s.value("error", std::string{});
    }
    os << "\n";
    if (s.contains("files"))
      for (auto& [k, v] : s["files"].items())
        os << "    " << k << ": " << v.get<std::string>() << "\n";
  }
}

inline json report_to_json(const ComparisonReport& rep) {
  json j;
  j["schema"] = 1;
  json labels = json::array();
  for (auto& l : rep.labels) {
    json lj;
    lj["label"] = l.label;
    lj["runs"] = l.runs;
    lj["ok"] = l.ok;
    lj["mean_wall_s"] = l.mean_wall_s;
    lj["sd_wall_s"] = l.sd_wall_s;
    lj["min_wall_s"] = l.min_wall_s;
    lj["max_wall_s"] = l.max_wall_s;
    json ce = json::object();
    for (auto& [k, v] : l.counters_end_mean) ce[k] = v;
    lj["counters_end_mean"] = ce;
    labels.push_back(lj);
  }
  j["labels"] = labels;
  json sp = json::array();
  for (auto& s : rep.speedups) {
    json sj;
    sj["candidate"] = s.faster_candidate;
    sj["baseline"] = s.baseline;
    sj["speedup"] = s.speedup;
    sp.push_back(sj);
  }
  j["speedups"] = sp;
  j["runs"] = rep.summaries;
  return j;
}

//! Runs the whole batch and writes report.txt / report.json to out_dir.
inline ComparisonReport run_experiment(const ExperimentPlan& plan) {
  plan.validate();
  namespace fs = std::filesystem;
  fs::create_directories(plan.out_dir);
  auto labels = executor_labels(plan.executors);
  std::vector<json> summaries;
  for (std::size_t i = 0; i < plan.executors.size(); ++i)
    for (int r = 0; r < plan.repetitions; ++r)
      summaries.push_back(run_single(plan, plan.executors[i], labels[i], r));
  ComparisonReport rep = build_comparison(std::move(summaries));
  {
    std::ofstream tf(plan.out_dir / "report.txt", std::ios::trunc);
    render_report_txt(rep, tf);
  }
  {
    std::ofstream jf(plan.out_dir / "report.json", std::ios::trunc);
    jf << report_to_json(rep).dump(2) << "\n";
  }
  return rep;
}

//! Rebuilds the comparison from the summary.json files under out_dir,
//! producing byte-identical report.txt / report.json for intact runs.
inline ComparisonReport rebuild_report(const std::filesystem::path& out_dir,
                                       bool write_files = true) {
  namespace fs = std::filesystem;
  std::vector<json> summaries;
  std::vector<fs::path> files;
  if (!fs::is_directory(out_dir))
    throw ConfigError("not a directory: " + out_dir.string());
  for (auto& label_dir : fs::directory_iterator(out_dir)) {
    if (!label_dir.is_directory()) continue;
    for (auto& rep_dir : fs::directory_iterator(label_dir.path())) {
      if (!rep_dir.is_directory()) continue;
      fs::path sj = rep_dir.path() / "summary.json";
      if (fs::exists(sj)) files.push_back(sj);
    }
  }
  std::sort(files.begin(), files.end());
  for (auto& f : files) {
    std::ifstream in(f);
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded())
      throw TraceError("unreadable summary: " + f.string());
    summaries.push_back(std::move(j));
  }
  if (summaries.empty())
    throw ConfigError("no summary.json files under " + out_dir.string());
  ComparisonReport rep = build_comparison(std::move(summaries));
  if (write_files) {
    std::ofstream tf(out_dir / "report.txt", std::ios::trunc);
    render_report_txt(rep, tf);
    std::ofstream jf(out_dir / "report.json", std::ios::trunc);
    jf << report_to_json(rep).dump(2) << "\n";
  }
  return rep;
}

}  // namespace taskbench::bench

#endif  // TASKBENCH_BENCH_EXPERIMENT_HPP
