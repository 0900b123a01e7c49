// Copyright 2026 The taskbench Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef TASKBENCH_USER_TASKS_HPP
#define TASKBENCH_USER_TASKS_HPP

#include <boost/context/fiber.hpp>
#include <boost/context/fixedsize_stack.hpp>

#include <atomic>
#include <condition_variable>
#include <deque>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

#include "taskbench/executor.hpp"
#include "taskbench/queue.hpp"

namespace taskbench {

namespace detail {

//! Per-task fiber plumbing. `fiber` holds the task continuation while the
//! task is not running; `sched` holds the worker continuation while it is.
//! `after` is the action the worker performs once the task is fully
//! switched out. Deferring the unlock this way is what makes the suspend
//! protocol safe: a waker can only discover the task after the worker has
//! released the registration lock, so it can never resume a fiber that is
//! still running.
struct FiberState {
  enum class After : std::uint8_t { none, requeue, unlock_spin, unlock_mutex };

  boost::context::fiber fiber;
  boost::context::fiber sched;
  After after = After::none;
  SpinLock* spin = nullptr;
  std::mutex* mtx = nullptr;
  bool done = false;
};

}  // namespace detail

//! Cooperative user-level task backend. Tasks are stackful fibers
//! multiplexed onto a fixed pool of kernel threads. Each worker serves
//! its own queue FCFS and, when empty, scans the other queues back-to-
//! front for work to steal. Suspension (yield, future wait, sync wait)
//! parks the fiber without blocking the kernel thread, so workers stay
//! busy as long as any task is ready; a suspended task may resume on a
//! different worker than it left.
class UserTaskExecutor final : public Executor {
 public:
  explicit UserTaskExecutor(const ExecutorConfig& cfg) : Executor(cfg) {
    if (cfg_.backend != Backend::user_tasks)
      throw ConfigError(
          "UserTaskExecutor requires the user-tasks backend config");
  }

  ~UserTaskExecutor() override {
    if (started_ && !stopped_) shutdown();
  }

  void yield_now() override {
    auto* t = detail::current_task_slot().tcb;
    if (!t || t->exec != this) {
      emit_warning(-1);
      return;
    }
    auto* fs = static_cast<detail::FiberState*>(t->impl);
    t->set_state(TaskState::yielded);
    emit(EventKind::yielded, t, t->last_worker);
    fs->after = detail::FiberState::After::requeue;
    fs->sched = std::move(fs->sched).resume();
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
    auto* t = detail::current_task_slot().tcb;
    if (t && t->exec == this) {
      std::unique_lock<std::mutex> lk(st.m);
      if (st.ready.load(std::memory_order_acquire)) return;
      st.task_waiters.push_back(t);
      lk.release();  // stays locked across the switch; worker unlocks
      suspend_current(t, nullptr, &st.m);
      return;  // complete() re-readied us, so the state is ready
    }
    std::unique_lock<std::mutex> lk(st.m);
    st.cv.wait(lk,
               [&] { return st.ready.load(std::memory_order_acquire); });
  }

  void make_ready(detail::TaskControlBlock* t) override {
    t->set_state(TaskState::ready);
    unsigned idx =
        t->last_worker >= 0 ? static_cast<unsigned>(t->last_worker) : 0;
    workers_[idx]->q.push_back(t);
    signal_work();
  }

  //! Parks the current task (must be `t`, running on this executor) and
  //! returns to the worker loop. Exactly one of `sl`/`mx` may be set; it
  //! is released by the worker after the fiber is switched out, which
  //! closes the wake-before-suspend window. Returns when a waker calls
  //! make_ready(). Internal; used by future waits and the sync layer.
  void suspend_current(detail::TaskControlBlock* t, SpinLock* sl,
                       std::mutex* mx) {
    auto* fs = static_cast<detail::FiberState*>(t->impl);
    t->set_state(TaskState::blocked);
    emit(EventKind::yielded, t, t->last_worker);
    fs->spin = sl;
    fs->mtx = mx;
    fs->after = sl ? detail::FiberState::After::unlock_spin
                   : detail::FiberState::After::unlock_mutex;
    fs->sched = std::move(fs->sched).resume();
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
    {
      std::lock_guard<std::mutex> lk(idle_m_);
      idle_cv_.notify_all();
    }
    for (auto& w : workers_)
      if (w->th.joinable()) w->th.join();
  }

  void enqueue_spawn(detail::TaskControlBlock* t) override {
    unsigned idx;
    auto* parent = detail::current_task_slot().tcb;
    if (parent && parent->exec == this && parent->last_worker >= 0)
      idx = static_cast<unsigned>(parent->last_worker);
    else
      idx = static_cast<unsigned>(
          rr_.fetch_add(1, std::memory_order_relaxed) % cfg_.workers);
    Worker& w = *workers_[idx];
    if (cfg_.queue_capacity != 0) {
      auto prev = w.admitted.fetch_add(1, std::memory_order_relaxed);
      if (prev + 1 > cfg_.queue_capacity) {
        w.admitted.fetch_sub(1, std::memory_order_relaxed);
        throw CapacityError("worker queue at capacity");
      }
      t->admit_queue = static_cast<int>(idx);
    }
    t->impl = new detail::FiberState;
    emit(EventKind::created, t, t->last_worker);
    t->set_state(TaskState::ready);
    emit(EventKind::enqueued, t, static_cast<int>(idx));
    w.q.push_back(t);
    signal_work();
  }

 private:
  struct Worker {
    WorkerQueue<detail::TaskControlBlock*> q;
    std::thread th;
    std::atomic<std::size_t> admitted{0};
  };

  //! Own queue first (FCFS), then scan the ring of other queues and take
  //! from the back of the first non-empty one.
  detail::TaskControlBlock* find_work(unsigned w) {
    if (auto t = workers_[w]->q.pop_front()) return *t;
    if (!cfg_.steal_enabled || cfg_.workers == 1) return nullptr;
    for (unsigned d = 1; d < cfg_.workers; ++d) {
      unsigned v = (w + d) % cfg_.workers;
      if (auto s = workers_[v]->q.steal_back()) {
        count_steal(w);
        return *s;
      }
    }
    return nullptr;
  }

  //! Producers: push, then signal. Sleepers: register, rescan, then wait
  //! under the idle mutex. Both sides use seq_cst on `sleepers_`, so
  //! either the producer sees the sleeper (and takes the mutex to
  //! notify), or the sleeper's rescan sees the push. No timed waits.
  void signal_work() {
    if (sleepers_.load(std::memory_order_seq_cst) > 0) {
      std::lock_guard<std::mutex> lk(idle_m_);
      idle_cv_.notify_one();
    }
  }

  void worker_loop(unsigned w) {
    for (;;) {
      detail::TaskControlBlock* t = find_work(w);
      if (t) {
        run_task(w, t);
        continue;
      }
      sleepers_.fetch_add(1, std::memory_order_seq_cst);
      {
        std::unique_lock<std::mutex> lk(idle_m_);
        t = find_work(w);
        if (!t && !stop_.load(std::memory_order_acquire)) idle_cv_.wait(lk);
      }
      sleepers_.fetch_sub(1, std::memory_order_seq_cst);
      if (t) {
        run_task(w, t);
        continue;
      }
      if (stop_.load(std::memory_order_acquire)) return;
    }
  }

  void run_task(unsigned w, detail::TaskControlBlock* t) {
    if (cfg_.queue_capacity != 0 && t->admit_queue >= 0 &&
        !t->ever_started)
      workers_[t->admit_queue]->admitted.fetch_sub(1,
                                                   std::memory_order_relaxed);
    auto* fs = static_cast<detail::FiberState*>(t->impl);
    bool first = !t->ever_started;
    t->ever_started = true;
    t->last_worker = static_cast<int>(w);
    detail::current_task_slot().tcb = t;
    t->set_state(TaskState::running);
    emit(first ? EventKind::started : EventKind::resumed, t,
         static_cast<int>(w));
    mark_run_begin(w, clock_.now_ns());
    if (first) {
      fs->fiber = boost::context::fiber(
          std::allocator_arg,
          boost::context::fixedsize_stack(cfg_.stack_bytes),
          [t, fs](boost::context::fiber&& sched) {
            fs->sched = std::move(sched);
            t->body();
            fs->done = true;
            return std::move(fs->sched);
          });
    }
    fs->fiber = std::move(fs->fiber).resume();
    mark_run_end(w, clock_.now_ns());
    detail::current_task_slot().tcb = nullptr;

    // Read everything we need from the fiber state before the deferred
    // action: the moment we release a lock or requeue, another worker may
    // resume (or even retire) the task.
    auto after = fs->after;
    fs->after = detail::FiberState::After::none;
    bool done = fs->done;
    SpinLock* sl = fs->spin;
    std::mutex* mx = fs->mtx;
    fs->spin = nullptr;
    fs->mtx = nullptr;

    if (done) {
      t->set_state(TaskState::completed);
      emit(EventKind::stopped, t, static_cast<int>(w));
      delete fs;
      t->impl = nullptr;
      task_retired(t, w);
      return;
    }
    if (after == detail::FiberState::After::requeue) {
      t->set_state(TaskState::ready);
      workers_[w]->q.push_back(t);
      signal_work();
      return;
    }
    if (after == detail::FiberState::After::unlock_spin) sl->unlock();
    else if (after == detail::FiberState::After::unlock_mutex) mx->unlock();
  }

  std::vector<std::unique_ptr<Worker>> workers_;
  std::atomic<std::uint64_t> rr_{0};
  std::atomic<bool> stop_{false};
  std::atomic<unsigned> sleepers_{0};
  std::mutex idle_m_;
  std::condition_variable idle_cv_;
};

namespace detail {

//! One parked waiter. Task waiters are resumed through the scheduler;
//! waiters from plain OS threads sleep on the node's own condvar. The
//! node lives on the waiter's stack and stays valid until it is woken,
//! because the task variant is never touched after the pop and the OS
//! variant waits for `signaled` under the node mutex.
struct SyncWaitNode {
  std::uint64_t token = 0;
  TaskControlBlock* task = nullptr;
  std::mutex m;
  std::condition_variable cv;
  bool signaled = false;
};

inline TaskControlBlock* current_tcb_of(Executor* e) {
  auto* t = current_task_slot().tcb;
  return (t && t->exec == e) ? t : nullptr;
}

inline std::uint64_t user_sync_token(Executor* e) {
  if (auto* t = current_tcb_of(e)) return t->guid;
  return std::hash<std::thread::id>{}(std::this_thread::get_id()) |
         (1ull << 63);
}

//! FIFO mutex with direct ownership handoff: unlock passes the lock to
//! the head waiter rather than reopening a race. Task waiters park
//! cooperatively; their worker thread moves on to other ready tasks.
class UserMutexImpl final : public MutexImpl {
 public:
  explicit UserMutexImpl(UserTaskExecutor* e) : exec_(e) {}

  void lock() override {
    auto tok = user_sync_token(exec_);
    sl_.lock();
    if (owner_ == 0) {
      owner_ = tok;
      sl_.unlock();
      return;
    }
    if (owner_ == tok) {
      sl_.unlock();
      throw SyncUsageError("recursive lock of a TaskMutex");
    }
    SyncWaitNode n;
    n.token = tok;
    n.task = current_tcb_of(exec_);
    waiters_.push_back(&n);
    if (n.task) {
      exec_->suspend_current(n.task, &sl_, nullptr);
      // Woken with ownership already transferred to us.
    } else {
      sl_.unlock();
      std::unique_lock<std::mutex> lk(n.m);
      n.cv.wait(lk, [&] { return n.signaled; });
    }
  }

  bool try_lock() override {
    auto tok = user_sync_token(exec_);
    sl_.lock();
    if (owner_ == 0) {
      owner_ = tok;
      sl_.unlock();
      return true;
    }
    sl_.unlock();
    return false;
  }

  void unlock() override {
    auto tok = user_sync_token(exec_);
    sl_.lock();
    if (owner_ != tok) {
      sl_.unlock();
      throw SyncUsageError("unlock of a TaskMutex by a non-owner");
    }
    pop_and_handoff_locked();
  }

 private:
  //! Pre: sl_ held, caller owns the mutex. Transfers ownership to the
  //! head waiter (waking it) or clears it; releases sl_.
  void pop_and_handoff_locked() {
    if (!waiters_.empty()) {
      SyncWaitNode* n = waiters_.front();
      waiters_.pop_front();
      owner_ = n->token;
      sl_.unlock();
      wake(n);
    } else {
      owner_ = 0;
      sl_.unlock();
    }
  }

  void wake(SyncWaitNode* n) {
    if (n->task) {
      exec_->make_ready(n->task);
    } else {
      std::lock_guard<std::mutex> lk(n->m);
      n->signaled = true;
      n->cv.notify_one();
    }
  }

  UserTaskExecutor* exec_;
  SpinLock sl_;
  std::uint64_t owner_ = 0;
  std::deque<SyncWaitNode*> waiters_;

  friend class UserCondVarImpl;
};

class UserCondVarImpl final : public CondVarImpl {
 public:
  explicit UserCondVarImpl(UserTaskExecutor* e) : exec_(e) {}

  void wait(MutexImpl& m) override {
    auto* um = dynamic_cast<UserMutexImpl*>(&m);
    if (!um)
      throw SyncUsageError("TaskCondVar::wait needs a same-backend mutex");
    auto tok = user_sync_token(exec_);
    SyncWaitNode n;
    n.token = tok;
    n.task = current_tcb_of(exec_);

    sl_.lock();
    um->sl_.lock();
    if (um->owner_ != tok) {
      um->sl_.unlock();
      sl_.unlock();
      throw SyncUsageError("TaskCondVar::wait without holding the mutex");
    }
    waiters_.push_back(&n);
    um->pop_and_handoff_locked();  // atomically release the mutex
    if (n.task) {
      exec_->suspend_current(n.task, &sl_, nullptr);
    } else {
      sl_.unlock();
      std::unique_lock<std::mutex> lk(n.m);
      n.cv.wait(lk, [&] { return n.signaled; });
    }
    m.lock();  // Mesa semantics: reacquire after wake
  }

  void notify_one() override {
    sl_.lock();
    if (waiters_.empty()) {
      sl_.unlock();
      return;
    }
    SyncWaitNode* n = waiters_.front();
    waiters_.pop_front();
    sl_.unlock();
    wake(n);
  }

  void notify_all() override {
    std::deque<SyncWaitNode*> pending;
    sl_.lock();
    pending.swap(waiters_);
    sl_.unlock();
    for (auto* n : pending) wake(n);
  }

 private:
  void wake(SyncWaitNode* n) {
    if (n->task) {
      exec_->make_ready(n->task);
    } else {
      std::lock_guard<std::mutex> lk(n->m);
      n->signaled = true;
      n->cv.notify_one();
    }
  }

  UserTaskExecutor* exec_;
  SpinLock sl_;
  std::deque<SyncWaitNode*> waiters_;
};

}  // namespace detail

inline std::unique_ptr<detail::MutexImpl> UserTaskExecutor::make_mutex_impl() {
  return std::make_unique<detail::UserMutexImpl>(this);
}

inline std::unique_ptr<detail::CondVarImpl>
UserTaskExecutor::make_condvar_impl() {
  return std::make_unique<detail::UserCondVarImpl>(this);
}

}  // namespace taskbench

#endif  // TASKBENCH_USER_TASKS_HPP
