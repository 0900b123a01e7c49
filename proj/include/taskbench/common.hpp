// Copyright 2026 The taskbench Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef TASKBENCH_COMMON_HPP
#define TASKBENCH_COMMON_HPP

#include <atomic>
#include <chrono>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace taskbench {

using Guid = std::uint64_t;

enum class Backend { os_pool, user_tasks };

inline const char* to_string(Backend b) {
  return b == Backend::os_pool ? "os-pool" : "user-tasks";
}

//! Task lifecycle. Legal transitions: created -> ready -> running ->
//! {yielded|blocked} -> ready -> running -> ... -> completed.
enum class TaskState : std::uint8_t {
  created,
  ready,
  running,
  yielded,
  blocked,
  completed,
};

inline const char* to_string(TaskState s) {
  switch (s) {
    case TaskState::created: return "created";
    case TaskState::ready: return "ready";
    case TaskState::running: return "running";
    case TaskState::yielded: return "yielded";
    case TaskState::blocked: return "blocked";
    case TaskState::completed: return "completed";
  }
  return "?";
}

inline bool transition_legal(TaskState from, TaskState to) {
  switch (to) {
    case TaskState::created: return false;
    case TaskState::ready:
      return from == TaskState::created || from == TaskState::yielded ||
             from == TaskState::blocked;
    case TaskState::running: return from == TaskState::ready;
    case TaskState::yielded: return from == TaskState::running;
    case TaskState::blocked: return from == TaskState::running;
    case TaskState::completed: return from == TaskState::running;
  }
  return false;
}

// Error taxonomy. Configuration and sync-usage faults are programming
// errors (logic_error); the rest are runtime conditions.
struct ConfigError : std::logic_error {
  using std::logic_error::logic_error;
};
struct SyncUsageError : std::logic_error {
  using std::logic_error::logic_error;
};
struct ShutdownError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct CapacityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct TraceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct WorkloadError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

//! Monotonic clock with a fixed origin; all timestamps produced by one
//! executor (task events and counter samples alike) share the origin so
//! they interleave on a single axis.
class MonotonicClock {
 public:
  MonotonicClock() : origin_(std::chrono::steady_clock::now()) {}

  std::uint64_t now_ns() const {
    return static_cast<std::uint64_t>(
        std::chrono::duration_cast<std::chrono::nanoseconds>(
            std::chrono::steady_clock::now() - origin_)
            .count());
  }

 private:
  std::chrono::steady_clock::time_point origin_;
};

class SpinLock {
 public:
  void lock() {
    int spins = 0;
    while (flag_.test_and_set(std::memory_order_acquire)) {
      if (++spins > 256) {
        std::this_thread::yield();
        spins = 0;
      }
    }
  }
  bool try_lock() { return !flag_.test_and_set(std::memory_order_acquire); }
  void unlock() { flag_.clear(std::memory_order_release); }

 private:
  std::atomic_flag flag_ = ATOMIC_FLAG_INIT;
};

struct ExecutorConfig {
  Backend backend = Backend::user_tasks;
  unsigned workers = std::thread::hardware_concurrency();
  bool steal_enabled = true;       // user-tasks only; os-pool never steals
  std::size_t queue_capacity = 0;  // 0 = unbounded; bounds spawn admission
  std::size_t stack_bytes = 256 * 1024;  // user-tasks fiber stacks

  void validate() const {
    if (workers < 1) throw ConfigError("executor requires at least 1 worker");
    if (backend == Backend::user_tasks && stack_bytes < 16 * 1024)
      throw ConfigError("fiber stack below 16 KiB");
  }
};

struct ExecutionSummary {
  std::uint64_t tasks_spawned = 0;
  std::uint64_t tasks_completed = 0;  // successful completions
  std::uint64_t tasks_failed = 0;     // completed with an error
  std::uint64_t wall_ns = 0;          // start() to shutdown()
  std::vector<std::uint64_t> executed_per_worker;  // counted at completion
  std::vector<std::uint64_t> steals_per_worker;
};

}  // namespace taskbench

#endif  // TASKBENCH_COMMON_HPP
