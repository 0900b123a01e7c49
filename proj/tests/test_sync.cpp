// Copyright 2026 The taskbench Authors
// SPDX-License-Identifier: Apache-2.0
//
// Backend-provided mutex and condition variable: exclusion, handshakes,
// external (non-task) thread participation, and misuse detection.

#include <gtest/gtest.h>

#include <atomic>
#include <chrono>
#include <thread>
#include <vector>

#include "taskbench/executor_factory.hpp"
#include "taskbench/sync.hpp"

using namespace taskbench;

namespace {

class SyncBackends : public ::testing::TestWithParam<Backend> {
 protected:
  std::unique_ptr<Executor> make(unsigned workers) {
    ExecutorConfig cfg;
    cfg.backend = GetParam();
    cfg.workers = workers;
    auto ex = make_executor(cfg);
    ex->start();
    return ex;
  }
};

}  // namespace

TEST_P(SyncBackends, MutualExclusionUnderContention) {
  auto ex = make(4);
  TaskMutex m(*ex);
  long long counter = 0;
  std::vector<Future<void>> fs;
  const int tasks = 16, iters = 500;
  for (int t = 0; t < tasks; ++t)
    fs.push_back(ex->spawn([&] {
      for (int i = 0; i < iters; ++i) {
        TaskLock lk(m);
        long long snap = counter;
        counter = snap + 1;
      }
    }));
  for (auto& f : fs) f.wait();
  EXPECT_EQ(counter, static_cast<long long>(tasks) * iters);
  ex->shutdown();
}

TEST_P(SyncBackends, CondVarPingPong) {
  // Two tasks strictly alternate turns through one condvar. On the
  // user-tasks backend a single worker carries both sides, which only
  // works because waiting suspends the fiber instead of the thread.
  auto ex = make(GetParam() == Backend::os_pool ? 2 : 1);
  TaskMutex m(*ex);
  TaskCondVar cv(*ex);
  int turn = 0;
  const int rounds = 100;
  std::vector<int> seen;

  auto even = ex->spawn([&] {
    TaskLock lk(m);
    for (int i = 0; i < rounds; ++i) {
      cv.wait(lk, [&] { return turn % 2 == 0; });
      seen.push_back(turn);
      ++turn;
      cv.notify_one();
    }
  });
  auto odd = ex->spawn([&] {
    TaskLock lk(m);
    for (int i = 0; i < rounds; ++i) {
      cv.wait(lk, [&] { return turn % 2 == 1; });
      ++turn;
      cv.notify_one();
    }
  });
  even.wait();
  odd.wait();
  ASSERT_EQ(seen.size(), static_cast<std::size_t>(rounds));
  for (int i = 0; i < rounds; ++i) EXPECT_EQ(seen[i], 2 * i);
  ex->shutdown();
}

TEST_P(SyncBackends, NotifyAllReleasesEveryWaiter) {
  auto ex = make(GetParam() == Backend::os_pool ? 6 : 2);
  TaskMutex m(*ex);
  TaskCondVar cv(*ex);
  bool go = false;
  std::atomic<int> released{0};
  std::vector<Future<void>> fs;
  for (int i = 0; i < 5; ++i)
    fs.push_back(ex->spawn([&] {
      TaskLock lk(m);
      cv.wait(lk, [&] { return go; });
      released.fetch_add(1);
    }));
  // Give the waiters time to enter the wait before the broadcast.
  std::this_thread::sleep_for(std::chrono::milliseconds(30));
  {
    TaskLock lk(m);
    go = true;
    cv.notify_all();
  }
  for (auto& f : fs) f.wait();
  EXPECT_EQ(released.load(), 5);
  ex->shutdown();
}

TEST_P(SyncBackends, ExternalThreadLocksAndWaits) {
  // The calling (non-task) thread takes the same mutex and waits on the
  // same condvar the tasks use; it must block as an OS thread.
  auto ex = make(2);
  TaskMutex m(*ex);
  TaskCondVar cv(*ex);
  bool ready = false;

  auto producer = ex->spawn([&] {
    TaskLock lk(m);
    ready = true;
    cv.notify_all();
  });

  {
    TaskLock lk(m);
    cv.wait(lk, [&] { return ready; });
  }
  producer.wait();
  EXPECT_TRUE(ready);
  ex->shutdown();
}

TEST_P(SyncBackends, ExternalAndTaskContention) {
  auto ex = make(2);
  TaskMutex m(*ex);
  long long counter = 0;
  auto task = ex->spawn([&] {
    for (int i = 0; i < 2000; ++i) {
      TaskLock lk(m);
      ++counter;
    }
  });
  for (int i = 0; i < 2000; ++i) {
    TaskLock lk(m);
    ++counter;
  }
  task.wait();
  EXPECT_EQ(counter, 4000);
  ex->shutdown();
}

TEST_P(SyncBackends, RecursiveLockFaults) {
  auto ex = make(1);
  TaskMutex m(*ex);
  auto f = ex->spawn([&] {
    TaskLock lk(m);
    EXPECT_THROW(m.lock(), SyncUsageError);
  });
  f.wait();
  ex->shutdown();
}

TEST_P(SyncBackends, NonOwnerUnlockFaults) {
  auto ex = make(2);
  TaskMutex m(*ex);
  std::atomic<bool> locked{false};
  std::atomic<bool> release{false};
  auto holder = ex->spawn([&] {
    m.lock();
    locked = true;
    while (!release.load())
      std::this_thread::sleep_for(std::chrono::microseconds(50));
    m.unlock();
  });
  while (!locked.load()) std::this_thread::yield();
  EXPECT_THROW(m.unlock(), SyncUsageError);  // main thread never locked it
  release = true;
  holder.wait();
  ex->shutdown();
}

TEST_P(SyncBackends, WaitWithoutLockFaults) {
  auto ex = make(1);
  TaskMutex m(*ex);
  TaskCondVar cv(*ex);
  TaskLock lk(m, std::defer_lock);
  EXPECT_THROW(cv.wait(lk), SyncUsageError);
  ex->shutdown();
}

TEST_P(SyncBackends, TaskLockMisuse) {
  auto ex = make(1);
  TaskMutex m(*ex);
  TaskLock lk(m);
  EXPECT_TRUE(lk.owns_lock());
  EXPECT_THROW(lk.lock(), SyncUsageError);  // already held
  lk.unlock();
  EXPECT_FALSE(lk.owns_lock());
  EXPECT_THROW(lk.unlock(), SyncUsageError);  // already released
  ex->shutdown();
}

INSTANTIATE_TEST_SUITE_P(Backends, SyncBackends,
                         ::testing::Values(Backend::os_pool,
                                           Backend::user_tasks),
                         [](const auto& info) {
                           return info.param == Backend::os_pool
                                      ? "OsPool"
                                      : "UserTasks";
                         });

// FIFO ownership handoff is a user-tasks guarantee: waiters acquire in
// arrival order. One worker makes the arrival order deterministic.
TEST(UserTasksSync, FifoMutexHandoff) {
  ExecutorConfig cfg;
  cfg.backend = Backend::user_tasks;
  cfg.workers = 1;
  auto ex = make_executor(cfg);
  ex->start();
  TaskMutex m(*ex);
  std::vector<int> order;
  std::atomic<int> arrived{0};

  auto holder = ex->spawn([&] {
    TaskLock lk(m);
    // Let the four contenders run and block on the mutex, in spawn
    // order, before releasing it.
    while (arrived.load() < 4) ex->yield_now();
  });
  std::vector<Future<void>> fs;
  for (int i = 1; i <= 4; ++i)
    fs.push_back(ex->spawn([&, i] {
      arrived.fetch_add(1);
      TaskLock lk(m);
      order.push_back(i);
    }));
  holder.wait();
  for (auto& f : fs) f.wait();
  ASSERT_EQ(order.size(), 4u);
  EXPECT_EQ(order, (std::vector<int>{1, 2, 3, 4}));
  ex->shutdown();
}

// A suspended waiter's fiber can be resumed by a different worker than
// the one it blocked on; the handoff must survive that migration.
TEST(UserTasksSync, WaitersMigrateAcrossWorkers) {
  ExecutorConfig cfg;
  cfg.backend = Backend::user_tasks;
  cfg.workers = 4;
  auto ex = make_executor(cfg);
  ex->start();
  TaskMutex m(*ex);
  TaskCondVar cv(*ex);
  // Token ring: only the task whose index matches token % 12 may move;
  // everyone else is suspended in the condvar. Task i takes its 50
  // turns at token values i, i+12, ..., i+588, so the ring never needs
  // a task that has already retired.
  int token = 0;
  std::vector<Future<void>> fs;
  for (int i = 0; i < 12; ++i)
    fs.push_back(ex->spawn([&, i] {
      for (int turn = 0; turn < 50; ++turn) {
        TaskLock lk(m);
        cv.wait(lk, [&] { return token % 12 == i; });
        ++token;
        cv.notify_all();
      }
    }));
  for (auto& f : fs) f.wait();
  EXPECT_EQ(token, 600);
  ex->shutdown();
}
