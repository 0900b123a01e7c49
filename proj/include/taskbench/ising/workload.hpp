// Copyright 2026 The taskbench Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef TASKBENCH_ISING_WORKLOAD_HPP
#define TASKBENCH_ISING_WORKLOAD_HPP

#include <algorithm>
#include <atomic>
#include <chrono>
#include <deque>
#include <memory>
#include <thread>
#include <utility>
#include <vector>

#include "taskbench/annotate.hpp"
#include "taskbench/executor.hpp"
#include "taskbench/ising/lattice.hpp"
#include "taskbench/sync.hpp"

namespace taskbench::ising {

//! When to stop producing measurements.
//!
//! quota: each walker delivers exactly measurements/walkers records
//! (remainder to the lowest ids). Record streams are then a pure
//! function of (seed, lattice, beta, walkers, measurements, burn_in),
//! bitwise identical across backends, worker counts, and runs.
//!
//! counter: walkers race a shared served-measurements counter and stop
//! once it reaches the target; the overshoot is trimmed afterwards by
//! (update_index, walker_id) order. How many records each walker
//! contributed depends on scheduling, but a starved walker can exit
//! without producing anything, which keeps oversubscribed os-pool runs
//! live where quota mode would wait forever.
enum class StopMode { quota, counter };

inline const char* to_string(StopMode m) {
  return m == StopMode::quota ? "quota" : "counter";
}

struct WorkloadConfig {
  int lattice = 4;
  double beta = 0.3;
  int walkers = 4;
  int accumulators = 2;
  long long measurements = 1000;
  long long burn_in = 0;  // sweeps before the first handoff
  std::uint64_t seed = 1;
  StopMode stop_mode = StopMode::quota;

  void validate() const {
    if (lattice < 2) throw ConfigError("lattice length must be >= 2");
    if (walkers < 1) throw ConfigError("need at least one walker");
    if (accumulators < 1) throw ConfigError("need at least one accumulator");
    if (measurements < 1) throw ConfigError("need at least one measurement");
    if (burn_in < 0) throw ConfigError("burn-in must be >= 0");
    if (beta < 0) throw ConfigError("beta must be >= 0");
  }
};

//! Receives finished measurements. May be called concurrently, including
//! for the same walker (two accumulators can hold consecutive snapshots
//! of one chain). A throwing append aborts the whole run.
class MeasurementSink {
 public:
  virtual ~MeasurementSink() = default;
  virtual void append(const Measurement&) = 0;
};

struct WorkloadResult {
  double mean_energy = 0;
  double mean_abs_m = 0;
  long long records = 0;
  long long discarded = 0;  // counter-mode overshoot
  std::uint64_t wall_ns = 0;
  int walkers = 0;
  int accumulators = 0;
  std::vector<std::vector<Measurement>> per_walker;  // by update_index
};

namespace detail {

struct Accumulator {
  explicit Accumulator(Executor& ex, int id_) : id(id_), m(ex), cv(ex) {}

  int id;
  TaskMutex m;
  TaskCondVar cv;
  bool has_work = false;
  bool stop = false;
  LatticeSnapshot snap;
  std::atomic<bool> busy{false};  // exclusivity check, never contended
};

//! The handoff structure from the pipeline: walkers pull an idle
//! accumulator from the head and block when none is free; accumulators
//! push themselves to the back after each measurement. Closing the
//! queue is the shutdown signal: take() then returns null instead of
//! blocking, which releases every walker parked on the handoff.
class AccumulatorQueue {
 public:
  explicit AccumulatorQueue(Executor& ex) : m_(ex), cv_(ex) {}

  void put(Accumulator* a) {
    TaskLock lk(m_);
    idle_.push_back(a);
    cv_.notify_one();
  }

  Accumulator* take() {
    TaskLock lk(m_);
    cv_.wait(lk, [&] { return closed_ || !idle_.empty(); });
    if (closed_) return nullptr;
    Accumulator* a = idle_.front();
    idle_.pop_front();
    return a;
  }

  void close() {
    TaskLock lk(m_);
    closed_ = true;
    cv_.notify_all();
  }

  bool closed() {
    TaskLock lk(m_);
    return closed_;
  }

 private:
  TaskMutex m_;
  TaskCondVar cv_;
  std::deque<Accumulator*> idle_;
  bool closed_ = false;
};

//! Collects per-walker streams; appends for one walker are serialized
//! by a per-walker lock because consecutive snapshots of a chain can be
//! measured concurrently by different accumulators.
class StreamCollector {
 public:
  explicit StreamCollector(int walkers)
      : locks_(static_cast<std::size_t>(walkers)),
        streams_(static_cast<std::size_t>(walkers)) {}

  void add(const Measurement& m) {
    auto w = static_cast<std::size_t>(m.walker_id);
    std::lock_guard<SpinLock> lk(locks_[w]);
    streams_[w].push_back(m);
  }

  std::vector<std::vector<Measurement>> take() {
    for (auto& s : streams_)
      std::sort(s.begin(), s.end(),
                [](const Measurement& a, const Measurement& b) {
                  return a.update_index < b.update_index;
                });
    return std::move(streams_);
  }

 private:
  std::deque<SpinLock> locks_;
  std::vector<std::vector<Measurement>> streams_;
};

}  // namespace detail

//! Runs the walker/accumulator pipeline on an already started executor
//! and blocks until all measurements are delivered. Walkers advance
//! independent Metropolis chains (walker w seeded with seed XOR w) and
//! after each post-burn-in sweep hand a snapshot to the head accumulator
//! from the shared queue; accumulators compute the observables, append
//! them, and requeue themselves.
//!
//! Accumulators are spawned before walkers so round-robin placement
//! lands them on distinct queues ahead of the non-yielding walkers.
//! Liveness on the os-pool backend (tasks pin their threads there, and
//! a parked accumulator starves everything queued behind it): quota
//! mode needs workers >= walkers + accumulators, counter mode needs
//! workers >= accumulators + 1. Undersized configurations would wait
//! forever, so they are rejected up front rather than left to hang.
//! The user-tasks backend is live at any worker count.
//!
//! `extra_sink`, when given, receives every measurement as it lands; a
//! throw from it aborts the run with a WorkloadError naming the partial
//! record count.
inline WorkloadResult run_workload(Executor& ex, const WorkloadConfig& cfg,
                                   MeasurementSink* extra_sink = nullptr) {
  cfg.validate();
  const int w_count = cfg.walkers, a_count = cfg.accumulators;

  if (ex.backend() == Backend::os_pool) {
    const unsigned need =
        cfg.stop_mode == StopMode::quota
            ? static_cast<unsigned>(w_count + a_count)
            : static_cast<unsigned>(a_count + 1);
    if (ex.worker_count() < need)
      throw ConfigError(
          "os-pool " + std::string(to_string(cfg.stop_mode)) + " mode needs " +
          std::to_string(need) + " workers for " + std::to_string(w_count) +
          " walkers and " + std::to_string(a_count) +
          " accumulators (tasks hold their worker while blocked); got " +
          std::to_string(ex.worker_count()));
  }

  detail::AccumulatorQueue queue(ex);
  std::vector<std::unique_ptr<detail::Accumulator>> accs;
  accs.reserve(static_cast<std::size_t>(a_count));
  for (int a = 0; a < a_count; ++a)
    accs.push_back(std::make_unique<detail::Accumulator>(ex, a));

  detail::StreamCollector collector(w_count);
  std::atomic<long long> served{0};
  std::atomic<bool> abort{false};

  const std::uint64_t t0 = ex.clock().now_ns();

  std::vector<Future<void>> acc_futures;
  acc_futures.reserve(static_cast<std::size_t>(a_count));
  for (int a = 0; a < a_count; ++a) {
    detail::Accumulator* acc = accs[static_cast<std::size_t>(a)].get();
    acc_futures.push_back(ex.spawn("accumulator", [acc, &cfg, &queue,
                                                   &collector, &served, &abort,
                                                   extra_sink] {
      queue.put(acc);
      for (;;) {
        LatticeSnapshot snap;
        {
          TaskLock lk(acc->m);
          acc->cv.wait(lk, [&] { return acc->has_work || acc->stop; });
          if (!acc->has_work) return;  // stop, mailbox drained
          snap = std::move(acc->snap);
          acc->has_work = false;
        }
        if (acc->busy.exchange(true))
          throw WorkloadError("accumulator measuring twice at once");
        Measurement m;
        {
          ScopedAnnotation scope("measure");
          m = measure_state(snap);
        }
        try {
          if (extra_sink) extra_sink->append(m);
        } catch (...) {
          acc->busy.store(false);
          abort.store(true, std::memory_order_release);
          queue.close();  // releases walkers parked on the handoff
          throw;
        }
        collector.add(m);
        long long now =
            served.fetch_add(1, std::memory_order_acq_rel) + 1;
        acc->busy.store(false);
        if (cfg.stop_mode == StopMode::counter && now >= cfg.measurements) {
          // This accumulator crossed the target, so it initiates the
          // shutdown instead of requeueing: walkers stop handing off
          // once the queue is closed, and retiring frees this worker
          // for walkers that never got to run on the os-pool backend.
          queue.close();
          return;
        }
        queue.put(acc);
      }
    }));
  }

  const long long base = cfg.measurements / w_count;
  const long long rem = cfg.measurements % w_count;
  std::atomic<int> walkers_done{0};
  std::vector<Future<void>> walker_futures;
  walker_futures.reserve(static_cast<std::size_t>(w_count));
  for (int w = 0; w < w_count; ++w) {
    const long long quota = base + (w < rem ? 1 : 0);
    walker_futures.push_back(ex.spawn("walker", [w, quota, &cfg, &queue,
                                                 &served, &abort,
                                                 &walkers_done] {
      struct Retired {
        std::atomic<int>* n;
        ~Retired() { n->fetch_add(1, std::memory_order_release); }
      } retired{&walkers_done};
      WalkerState chain(w, cfg.lattice, cfg.beta,
                        cfg.seed ^ static_cast<std::uint64_t>(w));
      long long delivered = 0;
      for (;;) {
        if (abort.load(std::memory_order_acquire)) return;
        if (cfg.stop_mode == StopMode::quota) {
          if (delivered >= quota) return;
        } else if (served.load(std::memory_order_acquire) >=
                   cfg.measurements) {
          return;
        }
        chain.sweep();
        if (chain.update_index() > cfg.burn_in) {
          detail::Accumulator* acc = queue.take();
          if (!acc) return;  // queue closed, run is winding down
          if (abort.load(std::memory_order_acquire)) {
            queue.put(acc);
            return;
          }
          {
            TaskLock lk(acc->m);
            acc->snap = chain.snapshot();
            acc->has_work = true;
            acc->cv.notify_one();
          }
          ++delivered;
        }
      }
    }));
  }

  // Join order differs per stop mode. In quota mode every walker can
  // finish on its own, so walkers are joined first and the stop flags
  // go out once all deliveries sit in some mailbox. In counter mode a
  // walker may never have run at all (os-pool oversubscription parks
  // accumulators on the only workers), so the accumulators retire first
  // on the queue-close signal and the freed workers then let the
  // remaining walkers start, observe the reached target, and exit.
  std::exception_ptr first_error;
  auto join = [&](std::vector<Future<void>>& fs) {
    for (auto& f : fs) {
      try {
        f.get();
      } catch (...) {
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  auto stop_accumulators = [&] {
    for (auto& acc : accs) {
      TaskLock lk(acc->m);
      acc->stop = true;
      acc->cv.notify_all();
    }
  };
  if (cfg.stop_mode == StopMode::quota) {
    join(walker_futures);
    stop_accumulators();
    join(acc_futures);
  } else {
    // The close fires when the target is reached or the run aborts; the
    // walker count covers the corner where every walker failed before
    // either could happen.
    while (!queue.closed() &&
           walkers_done.load(std::memory_order_acquire) < w_count)
      std::this_thread::sleep_for(std::chrono::microseconds(200));
    stop_accumulators();
    join(acc_futures);
    join(walker_futures);
  }

  WorkloadResult res;
  res.wall_ns = ex.clock().now_ns() - t0;
  res.walkers = w_count;
  res.accumulators = a_count;
  res.per_walker = collector.take();

  if (first_error) {
    long long partial = 0;
    for (auto& s : res.per_walker) partial += static_cast<long long>(s.size());
    try {
      std::rethrow_exception(first_error);
    } catch (const std::exception& e) {
      throw WorkloadError("run aborted after " + std::to_string(partial) +
                          " records: " + e.what());
    }
  }

  if (cfg.stop_mode == StopMode::counter) {
    // Deterministic trim of the racy overshoot: keep the measurements
    // lowest (update_index, walker_id) pairs.
    std::vector<std::pair<long long, int>> order;
    for (auto& s : res.per_walker)
      for (auto& m : s) order.emplace_back(m.update_index, m.walker_id);
    if (static_cast<long long>(order.size()) > cfg.measurements) {
      std::sort(order.begin(), order.end());
      auto cut = order[static_cast<std::size_t>(cfg.measurements)];
      for (auto& s : res.per_walker) {
        auto keep = std::remove_if(s.begin(), s.end(), [&](const Measurement&
                                                               m) {
          return std::make_pair(m.update_index, m.walker_id) >= cut;
        });
        res.discarded += static_cast<long long>(s.end() - keep);
        s.erase(keep, s.end());
      }
    }
  }

  long double e_acc = 0, m_acc = 0;
  for (auto& s : res.per_walker) {
    res.records += static_cast<long long>(s.size());
    for (auto& m : s) {
      e_acc += static_cast<long double>(m.energy);
      m_acc += static_cast<long double>(m.abs_magnetization);
    }
  }
  if (res.records > 0) {
    res.mean_energy = static_cast<double>(e_acc / res.records);
    res.mean_abs_m = static_cast<double>(m_acc / res.records);
  }
  return res;
}

}  // namespace taskbench::ising

#endif  // TASKBENCH_ISING_WORKLOAD_HPP
