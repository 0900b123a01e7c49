// Copyright 2026 The taskbench Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef TASKBENCH_EXECUTOR_HPP
#define TASKBENCH_EXECUTOR_HPP

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <exception>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <type_traits>
#include <unordered_map>
#include <utility>
#include <vector>

#include "taskbench/common.hpp"
#include "taskbench/events.hpp"

namespace taskbench {

class Executor;

struct TaskDescriptor {
  Guid guid = 0;
  Guid parent_guid = 0;
  std::string annotation;
  TaskState state = TaskState::created;
};

namespace detail {

struct TaskControlBlock;

//! Current-task TLS gateway. Deliberately noinline: the compiler may not
//! cache the thread_local address across a suspension point, because a
//! user-level task can resume on a different OS thread. Every access
//! re-derives the slot through this call.
struct CurrentTaskSlot {
  TaskControlBlock* tcb = nullptr;
};

[[gnu::noinline]] inline CurrentTaskSlot& current_task_slot() noexcept {
  thread_local CurrentTaskSlot slot;
  return slot;
}

struct FutureStateBase {
  std::mutex m;
  std::condition_variable cv;
  std::atomic<bool> ready{false};
  std::exception_ptr error;                     // written by the task body
  std::vector<TaskControlBlock*> task_waiters;  // guarded by m
  Executor* exec = nullptr;
  Guid producer_guid = 0;

  void complete();  // defined after Executor
};

template <typename T>
struct FutureState : FutureStateBase {
  std::optional<T> value;
};

template <>
struct FutureState<void> : FutureStateBase {};

//! Scheduler-internal task record. User code never sees these; it holds
//! FutureHandles only. Backends attach per-task state via `impl`.
struct TaskControlBlock {
  Guid guid = 0;
  Guid parent_guid = 0;
  std::string annotation;
  std::atomic<TaskState> state{TaskState::created};
  Executor* exec = nullptr;
  std::function<void()> body;
  std::shared_ptr<FutureStateBase> future;
  bool failed = false;
  bool ever_started = false;
  int last_worker = -1;  // worker currently or most recently running this
  int admit_queue = -1;  // queue whose admission slot this task holds
  void* impl = nullptr;  // backend extension (fiber state for user-tasks)

  void set_state(TaskState to) {
    TaskState from = state.load(std::memory_order_relaxed);
    if (!transition_legal(from, to))
      throw SyncUsageError(std::string("illegal task transition ") +
                           to_string(from) + " -> " + to_string(to));
    state.store(to, std::memory_order_relaxed);
  }
};

struct MutexImpl {
  virtual ~MutexImpl() = default;
  virtual void lock() = 0;
  virtual bool try_lock() = 0;
  virtual void unlock() = 0;
};

struct CondVarImpl {
  virtual ~CondVarImpl() = default;
  virtual void wait(MutexImpl&) = 0;
  virtual void notify_one() = 0;
  virtual void notify_all() = 0;
};

inline std::atomic<Guid> g_next_guid{1};
inline Guid next_guid() {
  return g_next_guid.fetch_add(1, std::memory_order_relaxed);
}

//! Hook for spawn(callable) to pick up a name attached by annotated().
template <typename T>
struct AnnotatedTraits {
  static constexpr bool value = false;
};

}  // namespace detail

template <typename T>
class Future;

//! Backend-neutral task executor. Construct via make_executor(), attach
//! listeners, start(), spawn work, then shutdown() exactly once to drain
//! and join. All spawn/shutdown calls are owner-thread operations; spawn
//! from inside tasks is also supported and records lineage.
class Executor {
 public:
  virtual ~Executor() = default;

  Executor(const Executor&) = delete;
  Executor& operator=(const Executor&) = delete;

  Backend backend() const { return cfg_.backend; }
  unsigned worker_count() const { return cfg_.workers; }
  const ExecutorConfig& config() const { return cfg_; }
  const MonotonicClock& clock() const { return clock_; }

  //! Listeners must be attached before start(); the set is frozen after.
  void attach_listener(ExecutorListener* l) {
    if (started_) throw ConfigError("attach_listener after start");
    if (l) listeners_.push_back(l);
  }

  void start() {
    if (started_) throw ConfigError("executor started twice");
    started_ = true;
    accepting_.store(true, std::memory_order_release);
    start_ns_ = clock_.now_ns();
    executed_ = std::vector<std::atomic<std::uint64_t>>(cfg_.workers);
    steals_ = std::vector<std::atomic<std::uint64_t>>(cfg_.workers);
    busy_ns_ = std::vector<std::atomic<std::uint64_t>>(cfg_.workers);
    run_start_ = std::vector<std::atomic<std::int64_t>>(cfg_.workers);
    for (auto& r : run_start_) r.store(-1, std::memory_order_relaxed);
    do_start();
  }

  //! Drains to quiescence (all spawned tasks retired), joins workers,
  //! returns the run summary. Idempotent after the first call.
  ExecutionSummary shutdown() {
    if (!started_) throw ConfigError("shutdown before start");
    if (stopped_) return summary_;
    accepting_.store(false, std::memory_order_release);
    {
      std::unique_lock<std::mutex> lk(done_m_);
      done_cv_.wait(lk, [&] { return live_.load(std::memory_order_acquire) == 0; });
    }
    do_stop();
    summary_.tasks_spawned = spawned_.load();
    summary_.tasks_completed = completed_.load();
    summary_.tasks_failed = failed_.load();
    summary_.wall_ns = clock_.now_ns() - start_ns_;
    summary_.executed_per_worker.assign(cfg_.workers, 0);
    summary_.steals_per_worker.assign(cfg_.workers, 0);
    for (unsigned w = 0; w < cfg_.workers; ++w) {
      summary_.executed_per_worker[w] = executed_[w].load();
      summary_.steals_per_worker[w] = steals_[w].load();
    }
    stopped_ = true;
    return summary_;
  }

  bool started() const { return started_; }
  bool stopped() const { return stopped_; }

  template <typename F>
  auto spawn(std::string_view annotation, F&& fn)
      -> Future<std::invoke_result_t<std::decay_t<F>>>;

  template <typename F>
  auto spawn(F&& fn);

  //! Cooperative reschedule. user-tasks: current task goes to the back of
  //! its worker's queue and the worker picks the next ready task. os-pool:
  //! forwards to the OS scheduler. Outside a task: no-op plus a warning
  //! event so misuse is visible in traces.
  virtual void yield_now() = 0;

  //! Scheduler introspection (third-person measurement sources).
  virtual std::vector<std::size_t> ready_queue_lengths() const = 0;
  virtual std::vector<std::uint64_t> enqueues_per_queue() const = 0;

  std::uint64_t steals_total() const {
    std::uint64_t n = 0;
    for (auto& s : steals_) n += s.load(std::memory_order_relaxed);
    return n;
  }

  std::uint64_t live_tasks() const {
    return live_.load(std::memory_order_acquire);
  }

  //! Per-worker busy nanoseconds as of `now_ns`, including the in-flight
  //! portion of a currently running task. Exact for a worker that is
  //! continuously busy or continuously idle across a sampling interval.
  std::vector<std::uint64_t> busy_ns_until(std::uint64_t now_ns) const {
    std::vector<std::uint64_t> out(busy_ns_.size());
    for (std::size_t w = 0; w < busy_ns_.size(); ++w) {
      std::uint64_t b = busy_ns_[w].load(std::memory_order_relaxed);
      std::int64_t rs = run_start_[w].load(std::memory_order_relaxed);
      if (rs >= 0 && now_ns > static_cast<std::uint64_t>(rs))
        b += now_ns - static_cast<std::uint64_t>(rs);
      out[w] = b;
    }
    return out;
  }

  std::vector<TaskDescriptor> snapshot_live() const {
    std::vector<TaskDescriptor> out;
    std::lock_guard<std::mutex> lk(registry_m_);
    out.reserve(registry_.size());
    for (auto& [guid, tcb] : registry_)
      out.push_back({guid, tcb->parent_guid, tcb->annotation,
                     tcb->state.load(std::memory_order_relaxed)});
    return out;
  }

  //! Scope events for nested annotated regions (see annotate.hpp).
  void emit_scope_enter(Guid g, std::string_view name) {
    if (listeners_.empty()) return;
    auto now = clock_.now_ns();
    for (auto* l : listeners_) l->on_scope_enter(g, name, now);
  }

  void emit_scope_exit(Guid g, std::string_view name) {
    if (listeners_.empty()) return;
    auto now = clock_.now_ns();
    for (auto* l : listeners_) l->on_scope_exit(g, name, now);
  }

  //! Synchronization factories; implementations match the backend's
  //! blocking discipline (see sync.hpp for the public wrappers).
  virtual std::unique_ptr<detail::MutexImpl> make_mutex_impl() = 0;
  virtual std::unique_ptr<detail::CondVarImpl> make_condvar_impl() = 0;

  //! Blocks the caller until the future state is ready. Cooperative when
  //! called from inside one of this executor's user-level tasks; an OS
  //! wait otherwise.
  virtual void block_on(detail::FutureStateBase& st) = 0;

  //! Moves a previously blocked task back to the ready queue it last ran
  //! on. No-op backend-dependent for os-pool (its waits are OS waits).
  virtual void make_ready(detail::TaskControlBlock* tcb) = 0;

 protected:
  explicit Executor(const ExecutorConfig& cfg) : cfg_(cfg) { cfg_.validate(); }

  virtual void do_start() = 0;
  virtual void do_stop() = 0;

  //! Places a freshly created task. Must reserve admission capacity (throw
  //! CapacityError when the target queue is full), then emit created and
  //! enqueued before the push so no started event can precede them.
  virtual void enqueue_spawn(detail::TaskControlBlock* tcb) = 0;

  void emit(EventKind k, const detail::TaskControlBlock* t, int worker) {
    if (listeners_.empty()) return;
    TaskEvent e{k, t->guid, t->parent_guid, t->annotation, worker,
                clock_.now_ns()};
    for (auto* l : listeners_) l->on_task_event(e);
  }

  void emit_warning(int worker) {
    if (listeners_.empty()) return;
    TaskEvent e{EventKind::warning, 0, 0, {}, worker, clock_.now_ns()};
    for (auto* l : listeners_) l->on_task_event(e);
  }

  void mark_run_begin(unsigned worker, std::uint64_t now_ns) {
    run_start_[worker].store(static_cast<std::int64_t>(now_ns),
                             std::memory_order_relaxed);
  }

  void mark_run_end(unsigned worker, std::uint64_t now_ns) {
    std::int64_t rs = run_start_[worker].load(std::memory_order_relaxed);
    run_start_[worker].store(-1, std::memory_order_relaxed);
    if (rs >= 0 && now_ns > static_cast<std::uint64_t>(rs))
      busy_ns_[worker].fetch_add(now_ns - static_cast<std::uint64_t>(rs),
                                 std::memory_order_relaxed);
  }

  //! Completion tail shared by both backends. Call after the stopped
  //! event: publishes the future (waking waiters), retires counters, and
  //! frees the control block.
  void task_retired(detail::TaskControlBlock* t, unsigned worker) {
    if (t->failed)
      failed_.fetch_add(1, std::memory_order_relaxed);
    else
      completed_.fetch_add(1, std::memory_order_relaxed);
    executed_[worker].fetch_add(1, std::memory_order_relaxed);
    t->future->complete();
    {
      std::lock_guard<std::mutex> lk(registry_m_);
      registry_.erase(t->guid);
    }
    if (live_.fetch_sub(1, std::memory_order_acq_rel) == 1) {
      std::lock_guard<std::mutex> lk(done_m_);
      done_cv_.notify_all();
    }
    delete t;
  }

  void count_steal(unsigned thief) {
    steals_[thief].fetch_add(1, std::memory_order_relaxed);
  }

  ExecutorConfig cfg_;
  MonotonicClock clock_;
  std::vector<ExecutorListener*> listeners_;
  std::atomic<bool> accepting_{false};
  bool started_ = false;
  bool stopped_ = false;
  std::uint64_t start_ns_ = 0;
  ExecutionSummary summary_;

  std::atomic<std::uint64_t> spawned_{0}, completed_{0}, failed_{0};
  std::atomic<std::uint64_t> live_{0};
  std::mutex done_m_;
  std::condition_variable done_cv_;

  std::vector<std::atomic<std::uint64_t>> executed_;
  std::vector<std::atomic<std::uint64_t>> steals_;
  std::vector<std::atomic<std::uint64_t>> busy_ns_;
  std::vector<std::atomic<std::int64_t>> run_start_;

  mutable std::mutex registry_m_;
  std::unordered_map<Guid, detail::TaskControlBlock*> registry_;

  template <typename T>
  friend class Future;
};

//! Single-consumer handle to a task's eventual result. wait() is
//! non-consuming; get() waits, then moves the value out (or rethrows the
//! task's error). A ready future returns without scheduler interaction.
template <typename T>
class Future {
 public:
  Future() = default;

  bool valid() const { return static_cast<bool>(st_); }

  bool ready() const {
    return st_ && st_->ready.load(std::memory_order_acquire);
  }

  void wait() {
    require_valid();
    if (!st_->ready.load(std::memory_order_acquire)) st_->exec->block_on(*st_);
  }

  T get() {
    wait();
    if (st_->error) std::rethrow_exception(st_->error);
    if constexpr (!std::is_void_v<T>) {
      if (!st_->value) throw SyncUsageError("future value already consumed");
      T v = std::move(*st_->value);
      st_->value.reset();
      return v;
    }
  }

 private:
  explicit Future(std::shared_ptr<detail::FutureState<T>> st)
      : st_(std::move(st)) {}

  void require_valid() const {
    if (!st_) throw SyncUsageError("operation on empty future");
  }

  std::shared_ptr<detail::FutureState<T>> st_;

  friend class Executor;
};

template <typename F>
auto Executor::spawn(std::string_view annotation, F&& fn)
    -> Future<std::invoke_result_t<std::decay_t<F>>> {
  using R = std::invoke_result_t<std::decay_t<F>>;
  if (!started_ || !accepting_.load(std::memory_order_acquire))
    throw ShutdownError("spawn on a stopped executor");

  auto st = std::make_shared<detail::FutureState<R>>();
  st->exec = this;

  auto* tcb = new detail::TaskControlBlock;
  tcb->guid = detail::next_guid();
  tcb->annotation = std::string(annotation);
  tcb->exec = this;
  tcb->future = st;
  st->producer_guid = tcb->guid;

  auto* parent = detail::current_task_slot().tcb;
  int spawn_worker = -1;
  if (parent && parent->exec == this) {
    tcb->parent_guid = parent->guid;
    spawn_worker = parent->last_worker;
  }

  tcb->body = [f = std::decay_t<F>(std::forward<F>(fn)),
               raw = st.get(), tcb]() mutable {
    try {
      if constexpr (std::is_void_v<R>) {
        f();
      } else {
        static_cast<detail::FutureState<R>*>(raw)->value.emplace(f());
      }
    } catch (...) {
      raw->error = std::current_exception();
      tcb->failed = true;
    }
  };

  spawned_.fetch_add(1, std::memory_order_relaxed);
  live_.fetch_add(1, std::memory_order_acq_rel);
  {
    std::lock_guard<std::mutex> lk(registry_m_);
    registry_.emplace(tcb->guid, tcb);
  }
  try {
    tcb->last_worker = spawn_worker;
    enqueue_spawn(tcb);
  } catch (...) {
    {
      std::lock_guard<std::mutex> lk(registry_m_);
      registry_.erase(tcb->guid);
    }
    spawned_.fetch_sub(1, std::memory_order_relaxed);
    if (live_.fetch_sub(1, std::memory_order_acq_rel) == 1) {
      std::lock_guard<std::mutex> lk(done_m_);
      done_cv_.notify_all();
    }
    delete tcb;
    throw;
  }
  return Future<R>(std::move(st));
}

template <typename F>
auto Executor::spawn(F&& fn) {
  using D = std::decay_t<F>;
  if constexpr (detail::AnnotatedTraits<D>::value) {
    std::string name = fn.name;
    return spawn(std::string_view(name), std::forward<F>(fn).fn);
  } else {
    return spawn(std::string_view{}, std::forward<F>(fn));
  }
}

namespace detail {

inline void FutureStateBase::complete() {
  std::vector<TaskControlBlock*> waiters;
  {
    std::lock_guard<std::mutex> lk(m);
    ready.store(true, std::memory_order_release);
    waiters.swap(task_waiters);
    cv.notify_all();
  }
  for (auto* t : waiters) exec->make_ready(t);
}

}  // namespace detail
}  // namespace taskbench

#endif  // TASKBENCH_EXECUTOR_HPP
