// Copyright 2026 The taskbench Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef TASKBENCH_ANNOTATE_HPP
#define TASKBENCH_ANNOTATE_HPP

#include <string>
#include <type_traits>
#include <utility>

#include "taskbench/executor.hpp"

namespace taskbench {

//! Named region inside a running task. Enter/exit scope events let the
//! measurement layer split a task's time into exclusive buckets. Outside
//! a task this is inert, so library code can annotate unconditionally.
class ScopedAnnotation {
 public:
  explicit ScopedAnnotation(std::string name) : name_(std::move(name)) {
    if (name_.empty()) throw ConfigError("annotation name must be non-empty");
    auto* t = detail::current_task_slot().tcb;
    if (t) {
      guid_ = t->guid;
      exec_ = t->exec;
      exec_->emit_scope_enter(guid_, name_);
    }
  }

  ~ScopedAnnotation() {
    if (exec_) exec_->emit_scope_exit(guid_, name_);
  }

  ScopedAnnotation(const ScopedAnnotation&) = delete;
  ScopedAnnotation& operator=(const ScopedAnnotation&) = delete;

 private:
  std::string name_;
  Guid guid_ = 0;
  Executor* exec_ = nullptr;
};

//! Callable wrapper carrying a profile name. spawn() recognizes it and
//! uses the name as the task annotation; invoking it directly (inside an
//! already running task) opens a named scope around the call instead.
template <typename F>
struct Annotated {
  std::string name;
  F fn;

  template <typename... Args>
  decltype(auto) operator()(Args&&... args) {
    ScopedAnnotation scope(name);
    return fn(std::forward<Args>(args)...);
  }
};

template <typename F>
Annotated<std::decay_t<F>> annotated(std::string name, F&& fn) {
  if (name.empty()) throw ConfigError("annotation name must be non-empty");
  return Annotated<std::decay_t<F>>{std::move(name), std::forward<F>(fn)};
}

namespace detail {

template <typename F>
struct AnnotatedTraits<Annotated<F>> {
  static constexpr bool value = true;
};

}  // namespace detail
}  // namespace taskbench

#endif  // TASKBENCH_ANNOTATE_HPP
