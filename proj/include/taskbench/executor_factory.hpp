// Copyright 2026 The taskbench Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef TASKBENCH_EXECUTOR_FACTORY_HPP
#define TASKBENCH_EXECUTOR_FACTORY_HPP

#include <memory>

#include "taskbench/os_pool.hpp"
#include "taskbench/user_tasks.hpp"

namespace taskbench {

inline std::unique_ptr<Executor> make_executor(const ExecutorConfig& cfg) {
  switch (cfg.backend) {
    case Backend::os_pool:
      return std::make_unique<OsPoolExecutor>(cfg);
    case Backend::user_tasks:
      return std::make_unique<UserTaskExecutor>(cfg);
  }
  throw ConfigError("unknown backend");
}

}  // namespace taskbench

#endif  // TASKBENCH_EXECUTOR_FACTORY_HPP
