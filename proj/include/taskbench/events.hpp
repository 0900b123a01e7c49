// Copyright 2026 The taskbench Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef TASKBENCH_EVENTS_HPP
#define TASKBENCH_EVENTS_HPP

#include <cstdint>
#include <string_view>

#include "taskbench/common.hpp"

namespace taskbench {

enum class EventKind : std::uint8_t {
  created,
  enqueued,
  started,
  yielded,
  resumed,
  stopped,
  warning,
};

inline const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::created: return "created";
    case EventKind::enqueued: return "enqueued";
    case EventKind::started: return "started";
    case EventKind::yielded: return "yielded";
    case EventKind::resumed: return "resumed";
    case EventKind::stopped: return "stopped";
    case EventKind::warning: return "warning";
  }
  return "?";
}

//! One scheduler event. `annotation` points into the task control block
//! and is valid only for the duration of the callback; copy if retained.
//! `worker` is the running worker for started/resumed/yielded/stopped,
//! the target queue for enqueued, the spawning context for created
//! (-1 when spawned from outside the executor).
struct TaskEvent {
  EventKind kind;
  Guid guid = 0;
  Guid parent_guid = 0;
  std::string_view annotation;
  int worker = -1;
  std::uint64_t t_ns = 0;
};

//! First-person measurement hook. Callbacks fire synchronously on the
//! thread driving the task, in per-guid lifecycle order:
//! created <= enqueued <= started <= (yielded <= resumed)* <= stopped.
//! Implementations must not call back into the executor.
class ExecutorListener {
 public:
  virtual ~ExecutorListener() = default;
  virtual void on_task_event(const TaskEvent&) = 0;
  //! Nested annotated regions inside a running task.
  virtual void on_scope_enter(Guid /*guid*/, std::string_view /*name*/,
                              std::uint64_t /*t_ns*/) {}
  virtual void on_scope_exit(Guid /*guid*/, std::string_view /*name*/,
                             std::uint64_t /*t_ns*/) {}
};

}  // namespace taskbench

#endif  // TASKBENCH_EVENTS_HPP
