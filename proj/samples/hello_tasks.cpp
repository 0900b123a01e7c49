// Copyright 2026 The taskbench Authors
// SPDX-License-Identifier: Apache-2.0
//
// Minimal tour: spawn a small task tree on each backend, join through
// futures, and print the executor's own accounting at shutdown.

#include <iostream>
#include <numeric>
#include <vector>

#include "taskbench/executor_factory.hpp"

using namespace taskbench;

namespace {

long long fib(int n) {
  if (n < 2) return n;
  return fib(n - 1) + fib(n - 2);
}

void demo(Backend backend) {
  ExecutorConfig cfg;
  cfg.backend = backend;
  cfg.workers = 4;
  auto ex = make_executor(cfg);
  ex->start();

  // Independent leaf tasks joined by futures.
  std::vector<Future<long long>> leaves;
  for (int i = 20; i < 28; ++i)
    leaves.push_back(ex->spawn("fib-leaf", [i] { return fib(i); }));

  // A parent task that spawns children of its own and blocks on them.
  // On the user-tasks backend the wait suspends the task, not the
  // worker thread; on os-pool the worker thread sleeps in the kernel.
  auto parent = ex->spawn("parent", [&ex] {
    auto a = ex->spawn("child", [] { return fib(24); });
    auto b = ex->spawn("child", [] { return fib(25); });
    return a.get() + b.get();
  });

  long long sum = 0;
  for (auto& f : leaves) sum += f.get();
  sum += parent.get();

  ExecutionSummary s = ex->shutdown();
  std::cout << to_string(backend) << ": sum=" << sum
            << " tasks=" << s.tasks_completed << "/" << s.tasks_spawned
            << " wall_ms=" << s.wall_ns / 1000000 << "\n";
}

}  // namespace

int main() {
  demo(Backend::os_pool);
  demo(Backend::user_tasks);
  return 0;
}
