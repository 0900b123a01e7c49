// Copyright 2026 The taskbench Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef TASKBENCH_OS_POOL_HPP
#define TASKBENCH_OS_POOL_HPP

#include <condition_variable>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

#include "taskbench/executor.hpp"
#include "taskbench/queue.hpp"

namespace taskbench {

//! OS-thread pool backend. One kernel thread per worker; new tasks are
//! distributed round-robin across per-worker FIFO queues and run to
//! completion on the thread that popped them. There is no stealing and
//! no suspension: a task that blocks (future wait, mutex) blocks its
//! kernel thread, and every task queued behind it waits. That weakness
//! is intentional and preserved; pair long-running producers with enough
//! workers or switch backends.
class OsPoolExecutor final : public Executor {
 public:
  explicit OsPoolExecutor(const ExecutorConfig& cfg) : Executor(cfg) {
    if (cfg_.backend != Backend::os_pool)
      throw ConfigError("OsPoolExecutor requires the os-pool backend config");
  }

  ~OsPoolExecutor() override {
    if (started_ && !stopped_) shutdown();
  }

  void yield_now() override {
    auto* t = detail::current_task_slot().tcb;
    if (!t || t->exec != this) {
      emit_warning(-1);
      return;
    }
    std::this_thread::yield();
  }

  std::vector<std::size_t> ready_queue_lengths() const override {
    std::vector<std::size_t> out(workers_.size());
    for (std::size_t w = 0; w < workers_.size(); ++w)
      out[w] = workers_[w]->q.size();
    return out;
  }

  std::vector<std::uint64_t> enqueues_per_queue() const override {
    std::vector<std::uint64_t> out(workers_.size());
    for (std::size_t w = 0; w < workers_.size(); ++w)
      out[w] = workers_[w]->q.enqueues();
    return out;
  }

  std::unique_ptr<detail::MutexImpl> make_mutex_impl() override;
  std::unique_ptr<detail::CondVarImpl> make_condvar_impl() override;

  void block_on(detail::FutureStateBase& st) override {
    // Kernel-level wait; the calling thread (worker or external) sleeps.
    std::unique_lock<std::mutex> lk(st.m);
    st.cv.wait(lk,
               [&] { return st.ready.load(std::memory_order_acquire); });
  }

  void make_ready(detail::TaskControlBlock* tcb) override {
    // Unreachable by construction: this backend never registers task
    // waiters (its waits are kernel waits). Kept total for safety.
    tcb->set_state(TaskState::ready);
    unsigned idx = tcb->last_worker >= 0
                       ? static_cast<unsigned>(tcb->last_worker)
                       : 0;
    workers_[idx]->q.push_back(tcb);
    notify_worker(idx);
  }

 protected:
  void do_start() override {
    workers_.reserve(cfg_.workers);
    for (unsigned w = 0; w < cfg_.workers; ++w)
      workers_.push_back(std::make_unique<Worker>());
    for (unsigned w = 0; w < cfg_.workers; ++w)
      workers_[w]->th = std::thread([this, w] { worker_loop(w); });
  }

  void do_stop() override {
    stop_.store(true, std::memory_order_release);
    for (auto& w : workers_) {
      std::lock_guard<std::mutex> lk(w->m);
      w->cv.notify_all();
    }
    for (auto& w : workers_)
      if (w->th.joinable()) w->th.join();
  }

  void enqueue_spawn(detail::TaskControlBlock* t) override {
    unsigned idx =
        static_cast<unsigned>(rr_.fetch_add(1, std::memory_order_relaxed) %
                              cfg_.workers);
    Worker& w = *workers_[idx];
    if (cfg_.queue_capacity != 0) {
      auto prev = w.admitted.fetch_add(1, std::memory_order_relaxed);
      if (prev + 1 > cfg_.queue_capacity) {
        w.admitted.fetch_sub(1, std::memory_order_relaxed);
        throw CapacityError("worker queue at capacity");
      }
      t->admit_queue = static_cast<int>(idx);
    }
    emit(EventKind::created, t, t->last_worker);
    t->set_state(TaskState::ready);
    emit(EventKind::enqueued, t, static_cast<int>(idx));
    w.q.push_back(t);
    notify_worker(idx);
  }

 private:
  struct Worker {
    WorkerQueue<detail::TaskControlBlock*> q;
    std::mutex m;
    std::condition_variable cv;
    std::thread th;
    std::atomic<std::size_t> admitted{0};
  };

  void notify_worker(unsigned idx) {
    Worker& w = *workers_[idx];
    std::lock_guard<std::mutex> lk(w.m);
    w.cv.notify_one();
  }

  void worker_loop(unsigned w) {
    Worker& me = *workers_[w];
    for (;;) {
      auto t = me.q.pop_front();
      if (t) {
        run_task(w, *t);
        continue;
      }
      std::unique_lock<std::mutex> lk(me.m);
      me.cv.wait(lk, [&] {
        return stop_.load(std::memory_order_acquire) || !me.q.empty();
      });
      if (me.q.empty() && stop_.load(std::memory_order_acquire)) return;
    }
  }

  void run_task(unsigned w, detail::TaskControlBlock* t) {
    if (cfg_.queue_capacity != 0 && t->admit_queue >= 0)
      workers_[t->admit_queue]->admitted.fetch_sub(1,
                                                   std::memory_order_relaxed);
    detail::current_task_slot().tcb = t;
    t->last_worker = static_cast<int>(w);
    t->ever_started = true;
    t->set_state(TaskState::running);
    emit(EventKind::started, t, static_cast<int>(w));
    mark_run_begin(w, clock_.now_ns());
    t->body();
    mark_run_end(w, clock_.now_ns());
    detail::current_task_slot().tcb = nullptr;
    t->set_state(TaskState::completed);
    emit(EventKind::stopped, t, static_cast<int>(w));
    task_retired(t, w);
  }

  std::vector<std::unique_ptr<Worker>> workers_;
  std::atomic<std::uint64_t> rr_{0};
  std::atomic<bool> stop_{false};
};

namespace detail {

inline std::uint64_t sync_token() {
  auto* t = current_task_slot().tcb;
  if (t) return t->guid;
  return std::hash<std::thread::id>{}(std::this_thread::get_id()) |
         (1ull << 63);
}

//! std::mutex with owner tracking so misuse (unlock by a non-owner,
//! condvar wait without the lock) faults instead of corrupting state.
class OsMutexImpl final : public MutexImpl {
 public:
  void lock() override {
    auto tok = sync_token();
    if (owner_.load(std::memory_order_relaxed) == tok)
      throw SyncUsageError("recursive lock of a TaskMutex");
    real_.lock();
    owner_.store(tok, std::memory_order_relaxed);
  }

  bool try_lock() override {
    auto tok = sync_token();
    if (!real_.try_lock()) return false;
    owner_.store(tok, std::memory_order_relaxed);
    return true;
  }

  void unlock() override {
    if (owner_.load(std::memory_order_relaxed) != sync_token())
      throw SyncUsageError("unlock of a TaskMutex by a non-owner");
    owner_.store(0, std::memory_order_relaxed);
    real_.unlock();
  }

 private:
  std::mutex real_;
  std::atomic<std::uint64_t> owner_{0};
};

class OsCondVarImpl final : public CondVarImpl {
 public:
  void wait(MutexImpl& m) override { cv_.wait(m); }
  void notify_one() override { cv_.notify_one(); }
  void notify_all() override { cv_.notify_all(); }

 private:
  std::condition_variable_any cv_;
};

}  // namespace detail

inline std::unique_ptr<detail::MutexImpl> OsPoolExecutor::make_mutex_impl() {
  return std::make_unique<detail::OsMutexImpl>();
}

inline std::unique_ptr<detail::CondVarImpl>
OsPoolExecutor::make_condvar_impl() {
  return std::make_unique<detail::OsCondVarImpl>();
}

}  // namespace taskbench

#endif  // TASKBENCH_OS_POOL_HPP
