// Copyright 2026 The taskbench Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef TASKBENCH_SYNC_HPP
#define TASKBENCH_SYNC_HPP

#include <memory>
#include <utility>

#include "taskbench/executor.hpp"

namespace taskbench {

//! Mutex whose blocking discipline matches its executor: kernel wait on
//! the os-pool backend, cooperative park on user-tasks. Non-recursive;
//! unlock by a non-owner and wait-without-lock throw SyncUsageError.
class TaskMutex {
 public:
  explicit TaskMutex(Executor& e) : impl_(e.make_mutex_impl()) {}

  TaskMutex(const TaskMutex&) = delete;
  TaskMutex& operator=(const TaskMutex&) = delete;

  void lock() { impl_->lock(); }
  bool try_lock() { return impl_->try_lock(); }
  void unlock() { impl_->unlock(); }

  detail::MutexImpl& impl() { return *impl_; }

 private:
  std::unique_ptr<detail::MutexImpl> impl_;
};

//! RAII lock for TaskMutex, deliberately shaped like std::unique_lock.
class TaskLock {
 public:
  explicit TaskLock(TaskMutex& m) : m_(&m) {
    m_->lock();
    owns_ = true;
  }

  TaskLock(TaskMutex& m, std::defer_lock_t) : m_(&m) {}

  ~TaskLock() {
    if (owns_) m_->unlock();
  }

  TaskLock(const TaskLock&) = delete;
  TaskLock& operator=(const TaskLock&) = delete;

  void lock() {
    if (owns_) throw SyncUsageError("TaskLock::lock while holding");
    m_->lock();
    owns_ = true;
  }

  void unlock() {
    if (!owns_) throw SyncUsageError("TaskLock::unlock without holding");
    m_->unlock();
    owns_ = false;
  }

  bool owns_lock() const { return owns_; }
  TaskMutex& mutex() { return *m_; }

 private:
  TaskMutex* m_;
  bool owns_ = false;

  friend class TaskCondVar;
};

//! Condition variable with Mesa semantics (spurious wakeups possible;
//! always wait under a predicate). On user-tasks the wait parks the
//! calling task and frees its worker; on os-pool it blocks the thread.
class TaskCondVar {
 public:
  explicit TaskCondVar(Executor& e) : impl_(e.make_condvar_impl()) {}

  TaskCondVar(const TaskCondVar&) = delete;
  TaskCondVar& operator=(const TaskCondVar&) = delete;

  void wait(TaskLock& lk) {
    if (!lk.owns_lock())
      throw SyncUsageError("TaskCondVar::wait without holding the lock");
    impl_->wait(lk.mutex().impl());
  }

  template <typename Pred>
  void wait(TaskLock& lk, Pred pred) {
    while (!pred()) wait(lk);
  }

  void notify_one() { impl_->notify_one(); }
  void notify_all() { impl_->notify_all(); }

 private:
  std::unique_ptr<detail::CondVarImpl> impl_;
};

}  // namespace taskbench

#endif  // TASKBENCH_SYNC_HPP
